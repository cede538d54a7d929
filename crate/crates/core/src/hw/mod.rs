//! Analytical performance model for a 2-D systolic GEMM grid.
//!
//! A [`HardwareTarget`] describes the device envelope (DSPs, on-chip SRAM
//! blocks, clock, DRAM banks). A [`GridConfig`] instantiates one systolic
//! array on it: `rows x cols` processing elements, each performing
//! `vec_width` multiply-accumulates per cycle, with per-dimension
//! interleaved (double-buffered) accumulators. MLP layers decompose into
//! [`GemmWorkload`]s which the model tiles into blocked matrix multiplies;
//! [`model_run`](schedule::model_run) turns that into throughput, latency
//! and efficiency numbers.
//!
//! [`sim::oracle_simulate`] is an independent cycle-stepped reference used
//! to validate the closed-form schedule.

mod schedule;
mod sim;

pub use schedule::{block_schedule, model_run, potential_performance, BlockSchedule, LayerPerf, PerfReport, PotentialPerf};
pub use sim::{oracle_simulate, SimError, SimResult, DEFAULT_CYCLE_LIMIT};

use serde::{Deserialize, Serialize};

use crate::mlp::MlpGenome;

/// All modeled data is 32-bit.
pub const BYTES_PER_ELEM: u64 = 4;
/// One 20-kilobit SRAM block holds 2560 bytes.
pub const SRAM_BLOCK_BYTES: u64 = 2560;
/// Working-set depth (elements along k) assumed per double-buffered cache
/// when checking SRAM budgets. Model constant, not searched.
pub const SRAM_K_TILE: u64 = 256;

/// Device resource envelope the model validates grids against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareTarget {
    pub name: String,
    pub dsp_count: u64,
    /// On-chip 20-kilobit-class memory blocks.
    pub sram_blocks: u64,
    pub clock_hz: u64,
    pub ddr_banks: u64,
    pub bank_bandwidth_bytes_per_s: u64,
    /// 2 for fused multiply-add DSPs.
    pub flops_per_dsp_per_cycle: u64,
}

impl HardwareTarget {
    /// Arria 10 GX 1150 class device at 250 MHz with a single DDR4 bank.
    pub fn arria10_like() -> Self {
        HardwareTarget {
            name: "arria10".to_string(),
            dsp_count: 1518,
            sram_blocks: 2713,
            clock_hz: 250_000_000,
            ddr_banks: 1,
            bank_bandwidth_bytes_per_s: 19_200_000_000,
            flops_per_dsp_per_cycle: 2,
        }
    }

    /// Stratix 10 2800 class device at 400 MHz with four DDR4 banks.
    pub fn stratix10_like() -> Self {
        HardwareTarget {
            name: "stratix10".to_string(),
            dsp_count: 5760,
            sram_blocks: 11721,
            clock_hz: 400_000_000,
            ddr_banks: 4,
            bank_bandwidth_bytes_per_s: 19_200_000_000,
            flops_per_dsp_per_cycle: 2,
        }
    }
}

/// One systolic-array instantiation: grid shape, PE vector width and the
/// per-dimension interleave (accumulator/cache depth).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridConfig {
    pub rows: u32,
    pub cols: u32,
    pub vec_width: u32,
    pub interleave_rows: u32,
    pub interleave_cols: u32,
}

impl GridConfig {
    pub fn new(rows: u32, cols: u32, vec_width: u32, interleave_rows: u32, interleave_cols: u32) -> Self {
        GridConfig { rows, cols, vec_width, interleave_rows, interleave_cols }
    }

    /// DSPs consumed by the grid.
    pub fn dsps_used(&self) -> u64 {
        self.rows as u64 * self.cols as u64 * self.vec_width as u64
    }

    /// Output-tile height: `rows * interleave_rows`.
    pub fn tile_m(&self) -> u64 {
        self.rows as u64 * self.interleave_rows as u64
    }

    /// Output-tile width: `cols * interleave_cols`.
    pub fn tile_n(&self) -> u64 {
        self.cols as u64 * self.interleave_cols as u64
    }

    /// Double-buffered cache footprint in bytes (A-side plus B-side tiles
    /// at the model's fixed working-set depth).
    pub fn sram_bytes(&self) -> u64 {
        2 * (self.tile_m() * SRAM_K_TILE + SRAM_K_TILE * self.tile_n()) * BYTES_PER_ELEM
    }
}

impl std::fmt::Display for GridConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}x{}x{} (interleave {}x{})",
            self.rows, self.cols, self.vec_width, self.interleave_rows, self.interleave_cols
        )
    }
}

/// One layer's GEMM: `m x k` inputs against `k x n` weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GemmWorkload {
    /// Batch rows processed per run.
    pub m: u64,
    /// Fan-in (dataset width for the first layer, previous layer width after).
    pub k: u64,
    /// Neurons; defines the next layer's k.
    pub n: u64,
    pub has_bias: bool,
    pub has_activation: bool,
}

impl GemmWorkload {
    pub fn new(m: u64, k: u64, n: u64) -> Self {
        GemmWorkload { m, k, n, has_bias: false, has_activation: false }
    }

    /// True (unpadded) operations: one multiply and one add per MAC, plus
    /// one op per output element for bias and for activation when present.
    pub fn true_flops(&self) -> u64 {
        let macs = 2 * self.m * self.k * self.n;
        let per_output = (self.has_bias as u64) + (self.has_activation as u64);
        macs + per_output * self.m * self.n
    }
}

/// A grid rejected by [`validate_grid`], as data rather than an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridViolation {
    /// `rows * cols * vec_width` exceeds the device DSP count.
    DspBudget { needed: u64, available: u64 },
    /// Double-buffered interleave caches exceed the SRAM block budget.
    SramBudget { needed_bytes: u64, available_bytes: u64 },
}

impl std::fmt::Display for GridViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridViolation::DspBudget { needed, available } => {
                write!(f, "grid needs {} DSPs but the device has {}", needed, available)
            }
            GridViolation::SramBudget { needed_bytes, available_bytes } => {
                write!(
                    f,
                    "interleave caches need {} bytes of SRAM but the device has {}",
                    needed_bytes, available_bytes
                )
            }
        }
    }
}

/// Device compute ceiling in GOP/s: `dsp_count * flops_per_dsp * clock`.
pub fn device_roofline_gops(target: &HardwareTarget) -> f64 {
    (target.dsp_count * target.flops_per_dsp_per_cycle * target.clock_hz) as f64 / 1e9
}

/// Compute peak of one grid in GOP/s, before bandwidth or mapping losses.
/// DSP utilization is the product of the grid dimensions and vector width.
pub fn grid_compute_peak_gops(grid: &GridConfig, target: &HardwareTarget) -> f64 {
    (grid.dsps_used() * target.flops_per_dsp_per_cycle * target.clock_hz) as f64 / 1e9
}

/// Aggregate DRAM bandwidth in bytes/s across all banks.
pub fn bandwidth_available(target: &HardwareTarget) -> u64 {
    target.ddr_banks * target.bank_bandwidth_bytes_per_s
}

/// Check a grid against a device envelope. Violations come back as data so
/// the search can treat them as ordinary infeasibility.
pub fn validate_grid(grid: &GridConfig, target: &HardwareTarget) -> Vec<GridViolation> {
    let mut violations = Vec::new();
    let dsps = grid.dsps_used();
    if dsps > target.dsp_count {
        violations.push(GridViolation::DspBudget { needed: dsps, available: target.dsp_count });
    }
    let sram_needed = grid.sram_bytes();
    let sram_available = target.sram_blocks * SRAM_BLOCK_BYTES;
    if sram_needed > sram_available {
        violations.push(GridViolation::SramBudget {
            needed_bytes: sram_needed,
            available_bytes: sram_available,
        });
    }
    violations
}

/// Decompose an MLP into one GEMM per layer (including the output layer)
/// at the given batch size. Each layer after the first inherits its k from
/// the previous layer's neuron count.
pub fn decompose_mlp(genome: &MlpGenome, batch_m: u64) -> Vec<GemmWorkload> {
    let mut workloads = Vec::with_capacity(genome.hidden_layers.len() + 1);
    let mut fan_in = genome.input_size as u64;
    for layer in &genome.hidden_layers {
        workloads.push(GemmWorkload {
            m: batch_m,
            k: fan_in,
            n: layer.neurons as u64,
            has_bias: layer.has_bias,
            has_activation: true,
        });
        fan_in = layer.neurons as u64;
    }
    // Classification head: always biased, softmax counted as its activation.
    workloads.push(GemmWorkload {
        m: batch_m,
        k: fan_in,
        n: genome.output_size as u64,
        has_bias: true,
        has_activation: true,
    });
    workloads
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Activation, LayerGene};

    #[test]
    fn roofline_matches_known_devices() {
        assert_eq!(device_roofline_gops(&HardwareTarget::arria10_like()), 759.0);
        assert_eq!(device_roofline_gops(&HardwareTarget::stratix10_like()), 4608.0);
        let unit = HardwareTarget {
            name: "unit".into(),
            dsp_count: 1,
            sram_blocks: 1,
            clock_hz: 1,
            ddr_banks: 1,
            bank_bandwidth_bytes_per_s: 1,
            flops_per_dsp_per_cycle: 2,
        };
        assert_eq!(device_roofline_gops(&unit), 2.0 / 1e9);
    }

    #[test]
    fn grid_peak_from_dsp_utilization() {
        let t = HardwareTarget::arria10_like();
        let g = GridConfig::new(16, 16, 4, 1, 1);
        assert_eq!(g.dsps_used(), 1024);
        assert_eq!(grid_compute_peak_gops(&g, &t), 512.0);

        let unit = GridConfig::new(1, 1, 1, 1, 1);
        assert_eq!(grid_compute_peak_gops(&unit, &t), 0.5);

        // Grid quantization can strand DSPs: the closest full-device grid
        // on 1518 DSPs uses 1512 of them.
        let near_full = GridConfig::new(18, 21, 4, 1, 1);
        assert_eq!(near_full.dsps_used(), 1512);
        assert_eq!(grid_compute_peak_gops(&near_full, &t), 756.0);
        assert!(grid_compute_peak_gops(&near_full, &t) < device_roofline_gops(&t));
    }

    #[test]
    fn bandwidth_scales_with_banks() {
        let mut t = HardwareTarget::arria10_like();
        assert_eq!(bandwidth_available(&t), 19_200_000_000);
        t.ddr_banks = 2;
        assert_eq!(bandwidth_available(&t), 38_400_000_000);
        t.ddr_banks = 4;
        assert_eq!(bandwidth_available(&t), 76_800_000_000);
    }

    #[test]
    fn validate_grid_checks_dsp_budget() {
        let t = HardwareTarget::arria10_like();
        assert!(validate_grid(&GridConfig::new(16, 16, 4, 1, 1), &t).is_empty());
        let bad = validate_grid(&GridConfig::new(32, 32, 2, 1, 1), &t);
        assert!(matches!(bad[0], GridViolation::DspBudget { needed: 2048, available: 1518 }));
    }

    #[test]
    fn validate_grid_checks_sram_budget() {
        let tiny = HardwareTarget {
            name: "tiny".into(),
            dsp_count: 10_000,
            sram_blocks: 4,
            clock_hz: 100_000_000,
            ddr_banks: 1,
            bank_bandwidth_bytes_per_s: 1_000_000_000,
            flops_per_dsp_per_cycle: 2,
        };
        let g = GridConfig::new(2, 2, 1, 64, 64);
        let violations = validate_grid(&g, &tiny);
        assert!(violations.iter().any(|v| matches!(v, GridViolation::SramBudget { .. })));
    }

    #[test]
    fn decompose_chains_layer_dimensions() {
        let genome = MlpGenome {
            input_size: 784,
            output_size: 10,
            hidden_layers: vec![LayerGene { neurons: 64, activation: Activation::Relu, has_bias: true }],
        };
        let w = decompose_mlp(&genome, 8);
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].m, w[0].k, w[0].n), (8, 784, 64));
        assert_eq!((w[1].m, w[1].k, w[1].n), (8, 64, 10));
        assert!(w[1].has_bias && w[1].has_activation);
    }

    #[test]
    fn decompose_no_hidden_layers() {
        let genome = MlpGenome { input_size: 5, output_size: 3, hidden_layers: vec![] };
        let w = decompose_mlp(&genome, 4);
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].m, w[0].k, w[0].n), (4, 5, 3));
    }

    #[test]
    fn true_flops_counts_bias_and_activation() {
        let mut w = GemmWorkload::new(2, 3, 4);
        assert_eq!(w.true_flops(), 48);
        w.has_bias = true;
        assert_eq!(w.true_flops(), 48 + 8);
        w.has_activation = true;
        assert_eq!(w.true_flops(), 48 + 16);
    }
}
