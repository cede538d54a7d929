//! Cycle-stepped reference simulator for the systolic grid.
//!
//! This deliberately shares no arithmetic with [`super::block_schedule`]:
//! it walks tiles with explicit loops, advances a per-tile pipeline one
//! cycle at a time, counts DRAM traffic element by element (row bursts)
//! and masks off padded lanes when tallying useful work. The closed-form
//! model is validated against it in the acceptance suite.

use super::{GemmWorkload, GridConfig};

/// Aggregates from one simulated workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimResult {
    pub total_cycles: u64,
    pub total_bytes: u64,
    pub true_flops: u64,
    pub tiles_simulated: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    /// The workload would exceed the stepping budget; use the analytical
    /// model for instances this large.
    InstanceTooLarge { cycle_limit: u64 },
    /// Workload or grid has a zero dimension.
    DegenerateInstance,
}

impl std::fmt::Display for SimError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimError::InstanceTooLarge { cycle_limit } => {
                write!(f, "simulation exceeded the {} cycle budget", cycle_limit)
            }
            SimError::DegenerateInstance => {
                write!(f, "workload and grid dimensions must all be nonzero")
            }
        }
    }
}

impl std::error::Error for SimError {}

/// Default stepping budget. One wave issues per cycle, so this bounds the
/// tile count times per-tile cycles.
pub const DEFAULT_CYCLE_LIMIT: u64 = 10_000_000;

/// Step one tile to completion and return the cycle it finishes on.
///
/// Wave order: for each of `ceil(k/vec)` k-groups, one wave per interleave
/// slot enters the array. A wave leaves the PE pipeline `rows + cols`
/// cycles after issue. Once the final wave has issued, the store engine
/// starts moving the `ir*ic` accumulator planes (rows*cols values each)
/// out at the grid-wide width of `rows*cols*vec` values per cycle; the
/// tile is done when the pipeline is empty and the store queue is too.
fn step_tile(g: &GridConfig, kgroups: u64) -> u64 {
    let slots = g.interleave_rows as u64 * g.interleave_cols as u64;
    let depth = g.rows as u64 + g.cols as u64;
    let store_rate = g.rows as u64 * g.cols as u64 * g.vec_width as u64;

    let waves_total = kgroups * slots;
    let mut cycle: u64 = 0;
    let mut issued: u64 = 0;
    let mut last_issue_cycle: u64 = 0;
    let mut store_queue: u64 = 0;
    let mut store_started = false;

    loop {
        cycle += 1;
        if issued < waves_total {
            issued += 1;
            last_issue_cycle = cycle;
            if issued == waves_total {
                // The store engine begins on the next cycle.
                store_queue = slots * g.rows as u64 * g.cols as u64;
                store_started = true;
            }
        } else if store_started && store_queue > 0 {
            store_queue = store_queue.saturating_sub(store_rate);
        }
        let pipeline_empty = issued == waves_total && cycle >= last_issue_cycle + depth;
        if pipeline_empty && store_queue == 0 {
            return cycle;
        }
    }
}

/// Count the useful multiply-accumulates of one tile by masking each
/// wave's lanes against the real workload extents.
fn tile_true_macs(w: &GemmWorkload, g: &GridConfig, tm0: u64, tn0: u64, kgroups: u64) -> u64 {
    let vec = g.vec_width as u64;
    let mut macs = 0u64;
    for ia in 0..g.interleave_rows as u64 {
        for ib in 0..g.interleave_cols as u64 {
            // Rows and columns of the output this slot owns.
            let r0 = tm0 + ia * g.rows as u64;
            let c0 = tn0 + ib * g.cols as u64;
            let live_rows = (g.rows as u64).min(w.m.saturating_sub(r0));
            let live_cols = (g.cols as u64).min(w.n.saturating_sub(c0));
            for kg in 0..kgroups {
                let k0 = kg * vec;
                let live_lanes = vec.min(w.k.saturating_sub(k0));
                macs += live_rows * live_cols * live_lanes;
            }
        }
    }
    macs
}

/// Simulate a workload on a grid, stepping every tile, with a hard cycle
/// budget to keep pathological instances from hanging callers.
pub fn oracle_simulate(
    w: &GemmWorkload,
    g: &GridConfig,
    cycle_limit: u64,
) -> Result<SimResult, SimError> {
    if w.m == 0 || w.k == 0 || w.n == 0 {
        return Err(SimError::DegenerateInstance);
    }
    if g.rows == 0 || g.cols == 0 || g.vec_width == 0 || g.interleave_rows == 0 || g.interleave_cols == 0
    {
        return Err(SimError::DegenerateInstance);
    }

    let tile_m = g.rows as u64 * g.interleave_rows as u64;
    let tile_n = g.cols as u64 * g.interleave_cols as u64;
    let vec = g.vec_width as u64;

    // k-groups by counting, not division.
    let mut kgroups = 0u64;
    let mut covered = 0u64;
    while covered < w.k {
        covered += vec;
        kgroups += 1;
    }
    let k_padded = covered;

    let mut total_cycles = 0u64;
    let mut total_bytes = 0u64;
    let mut true_macs = 0u64;
    let mut tiles = 0u64;

    let mut tm0 = 0u64;
    while tm0 < w.m {
        let mut tn0 = 0u64;
        while tn0 < w.n {
            let tile_cycles = step_tile(g, kgroups);
            total_cycles += tile_cycles;
            if total_cycles > cycle_limit {
                return Err(SimError::InstanceTooLarge { cycle_limit });
            }

            // A panel row bursts, B panel column bursts, C tile row bursts.
            for _row in 0..tile_m {
                total_bytes += 4 * k_padded;
            }
            for _col in 0..tile_n {
                total_bytes += 4 * k_padded;
            }
            for _row in 0..tile_m {
                total_bytes += 4 * tile_n;
            }

            true_macs += tile_true_macs(w, g, tm0, tn0, kgroups);
            tiles += 1;
            tn0 += tile_n;
        }
        tm0 += tile_m;
    }

    // Each useful MAC is a multiply plus an add; bias and activation are
    // one op each per real output element.
    let mut per_output_ops = 0u64;
    if w.has_bias {
        per_output_ops += 1;
    }
    if w.has_activation {
        per_output_ops += 1;
    }
    let true_flops = 2 * true_macs + per_output_ops * w.m * w.n;

    Ok(SimResult { total_cycles, total_bytes, true_flops, tiles_simulated: tiles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hw::block_schedule;

    #[test]
    fn stepped_unit_tile_takes_three_cycles() {
        let r = oracle_simulate(
            &GemmWorkload::new(1, 1, 1),
            &GridConfig::new(1, 1, 1, 1, 1),
            DEFAULT_CYCLE_LIMIT,
        )
        .unwrap();
        assert_eq!(r.total_cycles, 3);
        assert_eq!(r.tiles_simulated, 1);
        assert_eq!(r.true_flops, 2);
        // 1 A elem + 1 B elem + 1 C elem at 4 bytes
        assert_eq!(r.total_bytes, 12);
    }

    #[test]
    fn stepped_interleaved_tile_matches_hand_count() {
        let r = oracle_simulate(
            &GemmWorkload::new(8, 8, 8),
            &GridConfig::new(2, 2, 2, 2, 2),
            DEFAULT_CYCLE_LIMIT,
        )
        .unwrap();
        assert_eq!(r.tiles_simulated, 4);
        assert_eq!(r.total_cycles, 80);
        assert_eq!(r.true_flops, 2 * 8 * 8 * 8);
    }

    #[test]
    fn padded_lanes_do_not_count_as_work() {
        // k=5 on vec 4 pads to 8; only 5 lanes carry real products.
        let w = GemmWorkload::new(3, 5, 3);
        let g = GridConfig::new(2, 2, 4, 1, 1);
        let r = oracle_simulate(&w, &g, DEFAULT_CYCLE_LIMIT).unwrap();
        assert_eq!(r.true_flops, 2 * 3 * 5 * 3);
        let s = block_schedule(&w, &g);
        assert_eq!(r.total_cycles, s.total_cycles);
        assert_eq!(r.total_bytes, s.total_bytes);
    }

    #[test]
    fn agrees_with_closed_form_on_a_spot_grid() {
        let w = GemmWorkload { m: 37, k: 91, n: 23, has_bias: true, has_activation: true };
        let g = GridConfig::new(3, 5, 4, 2, 3);
        let r = oracle_simulate(&w, &g, DEFAULT_CYCLE_LIMIT).unwrap();
        let s = block_schedule(&w, &g);
        assert_eq!(r.total_cycles, s.total_cycles);
        assert_eq!(r.total_bytes, s.total_bytes);
        assert_eq!(r.true_flops, s.true_flops);
    }

    #[test]
    fn wide_interleave_is_store_bound() {
        // interleave 8x8 on vec 1: store drain (64 cycles) exceeds the
        // pipeline flush (2 cycles).
        let w = GemmWorkload::new(8, 1, 8);
        let g = GridConfig::new(1, 1, 1, 8, 8);
        let r = oracle_simulate(&w, &g, DEFAULT_CYCLE_LIMIT).unwrap();
        // 64 issue cycles + 64 store cycles
        assert_eq!(r.total_cycles, 128);
        let s = block_schedule(&w, &g);
        assert_eq!(s.total_cycles, r.total_cycles);
    }

    #[test]
    fn oversized_instances_are_rejected() {
        let w = GemmWorkload::new(100_000, 100_000, 100_000);
        let g = GridConfig::new(2, 2, 2, 1, 1);
        let err = oracle_simulate(&w, &g, 1_000_000).unwrap_err();
        assert!(matches!(err, SimError::InstanceTooLarge { cycle_limit: 1_000_000 }));
    }

    #[test]
    fn degenerate_instances_are_rejected() {
        let g = GridConfig::new(2, 2, 2, 1, 1);
        let err = oracle_simulate(&GemmWorkload::new(0, 4, 4), &g, 1000).unwrap_err();
        assert!(matches!(err, SimError::DegenerateInstance));
    }
}
