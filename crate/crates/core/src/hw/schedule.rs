//! Closed-form blocked-GEMM schedule and the run-level performance report.

use serde::{Deserialize, Serialize};

use super::{
    bandwidth_available, device_roofline_gops, grid_compute_peak_gops, validate_grid, GemmWorkload,
    GridConfig, GridViolation, HardwareTarget, BYTES_PER_ELEM,
};
use crate::mlp::MlpGenome;

/// Tiling of one GEMM onto one grid, with cycle and traffic totals.
///
/// The output is cut into `tile_m x tile_n` blocks (`rows*interleave_rows`
/// by `cols*interleave_cols`); m and n are zero-padded up to tile
/// multiples and k up to a `vec_width` multiple. Each tile costs
/// `ceil(k/vec_width) * interleave_rows * interleave_cols` compute cycles
/// plus a drain term, and moves its A and B operand panels in and its C
/// block out at 4 bytes per element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSchedule {
    pub tile_m: u64,
    pub tile_n: u64,
    pub tiles_m: u64,
    pub tiles_n: u64,
    pub tile_count: u64,
    pub k_padded: u64,
    pub compute_cycles_per_tile: u64,
    /// Fill/drain cost per tile: the operand pipeline flush (`rows+cols`)
    /// and the accumulator drain (`ceil(interleave_rows*interleave_cols /
    /// vec_width)` at the store path's grid-wide width) run concurrently,
    /// so the larger of the two is paid.
    pub drain_cycles_per_tile: u64,
    pub cycles_per_tile: u64,
    pub total_cycles: u64,
    pub bytes_per_tile: u64,
    pub total_bytes: u64,
    /// True (unpadded) operations for the workload, bias/activation included.
    pub true_flops: u64,
}

fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Tile a workload onto a grid and total up cycles and DRAM traffic.
pub fn block_schedule(w: &GemmWorkload, g: &GridConfig) -> BlockSchedule {
    let tile_m = g.tile_m();
    let tile_n = g.tile_n();
    let vec = g.vec_width as u64;
    let interleave = g.interleave_rows as u64 * g.interleave_cols as u64;

    let tiles_m = div_ceil(w.m, tile_m);
    let tiles_n = div_ceil(w.n, tile_n);
    let tile_count = tiles_m * tiles_n;
    let k_padded = div_ceil(w.k, vec) * vec;

    let compute_cycles_per_tile = div_ceil(w.k, vec) * interleave;
    let pipeline_flush = g.rows as u64 + g.cols as u64;
    let accumulator_drain = div_ceil(interleave, vec);
    let drain_cycles_per_tile = pipeline_flush.max(accumulator_drain);
    let cycles_per_tile = compute_cycles_per_tile + drain_cycles_per_tile;

    let bytes_per_tile =
        BYTES_PER_ELEM * (tile_m * k_padded + k_padded * tile_n) + BYTES_PER_ELEM * tile_m * tile_n;

    BlockSchedule {
        tile_m,
        tile_n,
        tiles_m,
        tiles_n,
        tile_count,
        k_padded,
        compute_cycles_per_tile,
        drain_cycles_per_tile,
        cycles_per_tile,
        total_cycles: tile_count * cycles_per_tile,
        bytes_per_tile,
        total_bytes: tile_count * bytes_per_tile,
        true_flops: w.true_flops(),
    }
}

/// Bandwidth-derated compute peak for one schedule on one target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialPerf {
    /// Streaming rate the schedule needs to never stall: bytes per tile
    /// over cycles per tile, at the target clock.
    pub bandwidth_needed_bytes_per_s: f64,
    pub bandwidth_bound: bool,
    /// `grid_compute_peak * min(1, available/needed)` in GOP/s.
    pub potential_gops: f64,
}

/// Derate a grid's compute peak by the ratio of available to needed
/// bandwidth for the given schedule.
pub fn potential_performance(g: &GridConfig, t: &HardwareTarget, sched: &BlockSchedule) -> PotentialPerf {
    let needed =
        sched.bytes_per_tile as f64 / sched.cycles_per_tile as f64 * t.clock_hz as f64;
    let available = bandwidth_available(t) as f64;
    let ratio = (available / needed).min(1.0);
    PotentialPerf {
        bandwidth_needed_bytes_per_s: needed,
        bandwidth_bound: ratio < 1.0,
        potential_gops: grid_compute_peak_gops(g, t) * ratio,
    }
}

/// Per-layer slice of a [`PerfReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPerf {
    pub layer: usize,
    pub workload: GemmWorkload,
    pub schedule: BlockSchedule,
    pub bandwidth_needed_bytes_per_s: f64,
    pub bandwidth_bound: bool,
    /// Seconds for one batch through this layer, bandwidth stretch included.
    pub time_s: f64,
}

/// Full analytical model output for one (genome, grid, target, batch) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub device_roofline_gops: f64,
    pub grid_peak_gops: f64,
    pub potential_gops: f64,
    pub effective_gops: f64,
    pub total_time_s: f64,
    pub outputs_per_s: f64,
    pub latency_s: f64,
    pub efficiency: f64,
    pub bandwidth_available_bytes_per_s: f64,
    pub bandwidth_needed_bytes_per_s: f64,
    pub bandwidth_bound: bool,
    pub batch_m: u64,
    pub total_inputs: u64,
    pub batch_runs: u64,
    pub true_flops: u64,
    pub per_layer: Vec<LayerPerf>,
}

/// Map a whole MLP run (`total_inputs` rows in batches of `batch_m`) onto
/// a grid and report throughput, latency and efficiency.
///
/// Layers execute sequentially within a batch and batches back-to-back;
/// a layer that needs more streaming bandwidth than the target provides
/// is stretched to the DRAM transfer time. The final partial batch (when
/// `total_inputs` is not a batch multiple) still occupies a full batch
/// schedule but only its real rows count as useful work.
pub fn model_run(
    genome: &MlpGenome,
    g: &GridConfig,
    t: &HardwareTarget,
    batch_m: u64,
    total_inputs: u64,
) -> Result<PerfReport, Vec<GridViolation>> {
    assert!(batch_m >= 1 && total_inputs >= 1, "batch and input counts must be positive");
    let violations = validate_grid(g, t);
    if !violations.is_empty() {
        return Err(violations);
    }

    let workloads = super::decompose_mlp(genome, batch_m);
    let full_batches = total_inputs / batch_m;
    let rem_rows = total_inputs % batch_m;
    let batch_runs = full_batches + (rem_rows > 0) as u64;

    let clock = t.clock_hz as f64;
    let available = bandwidth_available(t) as f64;

    let mut per_layer = Vec::with_capacity(workloads.len());
    let mut batch_time = 0.0_f64;
    let mut batch_compute_time = 0.0_f64;
    let mut batch_bytes = 0u64;
    let mut true_flops_total = 0u64;
    let mut any_bound = false;

    for (i, w) in workloads.iter().enumerate() {
        let sched = block_schedule(w, g);
        let pp = potential_performance(g, t, &sched);
        let compute_time = sched.total_cycles as f64 / clock;
        let dram_time = sched.total_bytes as f64 / available;
        let time_s = compute_time.max(dram_time);

        true_flops_total += full_batches * sched.true_flops;
        if rem_rows > 0 {
            let tail = GemmWorkload { m: rem_rows, ..*w };
            true_flops_total += tail.true_flops();
        }

        batch_time += time_s;
        batch_compute_time += compute_time;
        batch_bytes += sched.total_bytes;
        any_bound |= pp.bandwidth_bound;

        per_layer.push(LayerPerf {
            layer: i,
            workload: *w,
            schedule: sched,
            bandwidth_needed_bytes_per_s: pp.bandwidth_needed_bytes_per_s,
            bandwidth_bound: pp.bandwidth_bound,
            time_s,
        });
    }

    let total_time_s = batch_runs as f64 * batch_time;
    let compute_time_total = batch_runs as f64 * batch_compute_time;
    let grid_peak = grid_compute_peak_gops(g, t);

    // Potential derates the grid peak by the achieved compute duty cycle;
    // dividing true work by the same wall time keeps efficiency a pure
    // mapping metric, independent of how many DDR banks are attached.
    let potential_gops = grid_peak * compute_time_total / total_time_s;
    let effective_gops = true_flops_total as f64 / total_time_s / 1e9;

    Ok(PerfReport {
        device_roofline_gops: device_roofline_gops(t),
        grid_peak_gops: grid_peak,
        potential_gops,
        effective_gops,
        total_time_s,
        outputs_per_s: total_inputs as f64 / total_time_s,
        latency_s: batch_time,
        efficiency: effective_gops / potential_gops,
        bandwidth_available_bytes_per_s: available,
        bandwidth_needed_bytes_per_s: batch_bytes as f64 / batch_compute_time,
        bandwidth_bound: any_bound,
        batch_m,
        total_inputs,
        batch_runs,
        true_flops: true_flops_total,
        per_layer,
    })
}
