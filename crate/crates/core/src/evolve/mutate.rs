//! Population initialization and the mutation operator set.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Candidate, SearchBounds};
use crate::hw::{validate_grid, GridConfig, HardwareTarget};
use crate::mlp::{LayerGene, MlpGenome};

/// Per-operator firing probabilities. Each applicable operator fires
/// independently; when none fires, one is drawn so every mutation call
/// changes at least one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationRates {
    pub add_layer: f64,
    pub remove_layer: f64,
    pub resize_layer: f64,
    pub change_activation: f64,
    pub toggle_bias: f64,
    pub resize_grid: f64,
    pub change_batch: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        MutationRates {
            add_layer: 0.2,
            remove_layer: 0.2,
            resize_layer: 0.2,
            change_activation: 0.2,
            toggle_bias: 0.2,
            resize_grid: 0.2,
            change_batch: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitError {
    BadBounds(String),
    /// No valid grid found within the retry budget; the bounds likely
    /// admit nothing the device can host.
    NoValidGrid { attempts: u32 },
}

impl std::fmt::Display for InitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitError::BadBounds(msg) => write!(f, "inconsistent search bounds: {}", msg),
            InitError::NoValidGrid { attempts } => {
                write!(f, "no valid grid for the target after {} attempts", attempts)
            }
        }
    }
}

impl std::error::Error for InitError {}

/// Powers of two inside [lo, hi]; empty when the range contains none.
fn pow2_in(lo: u64, hi: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut p = 1u64;
    while p <= hi {
        if p >= lo {
            v.push(p);
        }
        p = p.saturating_mul(2);
        if p == 0 {
            break;
        }
    }
    v
}

fn sample_pow2(rng: &mut ChaCha8Rng, lo: u64, hi: u64) -> u64 {
    let choices = pow2_in(lo, hi);
    match choices.as_slice() {
        [] => lo,
        list => *list.choose(rng).expect("non-empty"),
    }
}

fn sample_layer(rng: &mut ChaCha8Rng, bounds: &SearchBounds) -> LayerGene {
    LayerGene {
        neurons: rng.random_range(bounds.min_neurons..=bounds.max_neurons),
        activation: *bounds.activations.choose(rng).expect("validated non-empty"),
        has_bias: rng.random_bool(0.5),
    }
}

fn sample_grid(rng: &mut ChaCha8Rng, bounds: &SearchBounds) -> GridConfig {
    GridConfig {
        rows: sample_pow2(rng, bounds.rows.0 as u64, bounds.rows.1 as u64) as u32,
        cols: sample_pow2(rng, bounds.cols.0 as u64, bounds.cols.1 as u64) as u32,
        vec_width: sample_pow2(rng, bounds.vec_width.0 as u64, bounds.vec_width.1 as u64) as u32,
        interleave_rows: sample_pow2(
            rng,
            bounds.interleave_rows.0 as u64,
            bounds.interleave_rows.1 as u64,
        ) as u32,
        interleave_cols: sample_pow2(
            rng,
            bounds.interleave_cols.0 as u64,
            bounds.interleave_cols.1 as u64,
        ) as u32,
    }
}

const INIT_GRID_RETRIES: u32 = 1000;

/// Sample `size` valid candidates uniformly within bounds. Grids that
/// violate the target's budgets are resampled up to a retry budget.
pub fn init_population(
    bounds: &SearchBounds,
    target: &HardwareTarget,
    input_size: usize,
    output_size: usize,
    size: usize,
    seed: u64,
) -> Result<Vec<Candidate>, InitError> {
    bounds.validate().map_err(InitError::BadBounds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut population = Vec::with_capacity(size);
    for id in 0..size as u64 {
        let n_layers = rng.random_range(bounds.min_layers..=bounds.max_layers);
        let hidden_layers = (0..n_layers).map(|_| sample_layer(&mut rng, bounds)).collect();
        let genome = MlpGenome { input_size, output_size, hidden_layers };

        let mut found = None;
        for _ in 0..INIT_GRID_RETRIES {
            let grid = sample_grid(&mut rng, bounds);
            if validate_grid(&grid, target).is_empty() {
                found = Some(grid);
                break;
            }
        }
        let grid = found.ok_or(InitError::NoValidGrid { attempts: INIT_GRID_RETRIES })?;
        let batch_m = sample_pow2(&mut rng, bounds.batch_m.0, bounds.batch_m.1);
        population.push(Candidate { id, parent_id: None, genome, grid, batch_m });
    }
    Ok(population)
}

/// The mutation operator vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    AddLayer,
    RemoveLayer,
    ResizeLayer,
    ChangeActivation,
    ToggleBias,
    ResizeGrid,
    ChangeBatch,
}

fn rate_of(op: Op, rates: &MutationRates) -> f64 {
    match op {
        Op::AddLayer => rates.add_layer,
        Op::RemoveLayer => rates.remove_layer,
        Op::ResizeLayer => rates.resize_layer,
        Op::ChangeActivation => rates.change_activation,
        Op::ToggleBias => rates.toggle_bias,
        Op::ResizeGrid => rates.resize_grid,
        Op::ChangeBatch => rates.change_batch,
    }
}

/// Operators that can move the candidate at all given the bounds.
fn applicable(c: &Candidate, bounds: &SearchBounds) -> Vec<Op> {
    let mut ops = Vec::new();
    let layers = c.genome.hidden_layers.len();
    if layers < bounds.max_layers {
        ops.push(Op::AddLayer);
    }
    if layers > bounds.min_layers {
        ops.push(Op::RemoveLayer);
    }
    if layers > 0 && bounds.min_neurons < bounds.max_neurons {
        ops.push(Op::ResizeLayer);
    }
    if layers > 0 && bounds.activations.len() > 1 {
        ops.push(Op::ChangeActivation);
    }
    if layers > 0 {
        ops.push(Op::ToggleBias);
    }
    ops.push(Op::ResizeGrid);
    if pow2_in(bounds.batch_m.0, bounds.batch_m.1).len() > 1 {
        ops.push(Op::ChangeBatch);
    }
    ops
}

/// Halve or double one value on its power-of-two ladder, clamped.
fn step_pow2(rng: &mut ChaCha8Rng, value: u64, lo: u64, hi: u64) -> u64 {
    let up = rng.random_bool(0.5);
    let stepped = if up { value.saturating_mul(2) } else { value / 2 };
    if stepped >= lo.max(1) && stepped <= hi {
        return stepped;
    }
    // blocked in the drawn direction; try the other
    let other = if up { value / 2 } else { value.saturating_mul(2) };
    if other >= lo.max(1) && other <= hi {
        return other;
    }
    value
}

fn apply_op(rng: &mut ChaCha8Rng, c: &mut Candidate, op: Op, bounds: &SearchBounds) {
    match op {
        Op::AddLayer => {
            let at = rng.random_range(0..=c.genome.hidden_layers.len());
            let layer = sample_layer(rng, bounds);
            c.genome.hidden_layers.insert(at, layer);
        }
        Op::RemoveLayer => {
            let at = rng.random_range(0..c.genome.hidden_layers.len());
            c.genome.hidden_layers.remove(at);
        }
        Op::ResizeLayer => {
            let at = rng.random_range(0..c.genome.hidden_layers.len());
            let n = c.genome.hidden_layers[at].neurons;
            let factor = *[0.5, 0.8, 1.25, 2.0].choose(rng).expect("non-empty");
            let mut next = ((n as f64 * factor).round() as usize)
                .clamp(bounds.min_neurons, bounds.max_neurons);
            if next == n {
                // geometric step rounded back onto itself; nudge one unit
                next = if factor > 1.0 { n + 1 } else { n.saturating_sub(1) }
                    .clamp(bounds.min_neurons, bounds.max_neurons);
            }
            c.genome.hidden_layers[at].neurons = next;
        }
        Op::ChangeActivation => {
            let at = rng.random_range(0..c.genome.hidden_layers.len());
            let current = c.genome.hidden_layers[at].activation;
            let others: Vec<_> =
                bounds.activations.iter().copied().filter(|a| *a != current).collect();
            if let Some(&next) = others.choose(rng) {
                c.genome.hidden_layers[at].activation = next;
            }
        }
        Op::ToggleBias => {
            let at = rng.random_range(0..c.genome.hidden_layers.len());
            c.genome.hidden_layers[at].has_bias = !c.genome.hidden_layers[at].has_bias;
        }
        Op::ResizeGrid => {
            // pick a dimension that can move; give up after a few draws
            for _ in 0..5 {
                let dim = rng.random_range(0..5);
                let (value, lo, hi) = match dim {
                    0 => (c.grid.rows as u64, bounds.rows.0 as u64, bounds.rows.1 as u64),
                    1 => (c.grid.cols as u64, bounds.cols.0 as u64, bounds.cols.1 as u64),
                    2 => (
                        c.grid.vec_width as u64,
                        bounds.vec_width.0 as u64,
                        bounds.vec_width.1 as u64,
                    ),
                    3 => (
                        c.grid.interleave_rows as u64,
                        bounds.interleave_rows.0 as u64,
                        bounds.interleave_rows.1 as u64,
                    ),
                    _ => (
                        c.grid.interleave_cols as u64,
                        bounds.interleave_cols.0 as u64,
                        bounds.interleave_cols.1 as u64,
                    ),
                };
                let next = step_pow2(rng, value, lo, hi);
                if next != value {
                    match dim {
                        0 => c.grid.rows = next as u32,
                        1 => c.grid.cols = next as u32,
                        2 => c.grid.vec_width = next as u32,
                        3 => c.grid.interleave_rows = next as u32,
                        _ => c.grid.interleave_cols = next as u32,
                    }
                    return;
                }
            }
        }
        Op::ChangeBatch => {
            c.batch_m = step_pow2(rng, c.batch_m, bounds.batch_m.0, bounds.batch_m.1);
        }
    }
}

/// A mutation result; `mutated` is false when no valid offspring was
/// found within the retry budget and the candidate is a parent clone.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationOutcome {
    pub candidate: Candidate,
    pub mutated: bool,
}

const MUTATE_RETRIES: u32 = 32;

/// Mutate a candidate: every applicable operator fires with its
/// configured probability, and at least one always applies. Offspring
/// whose grid violates the target are resampled; on exhaustion the
/// parent comes back unmutated (cloned under the new id).
pub fn mutate(
    parent: &Candidate,
    rates: &MutationRates,
    bounds: &SearchBounds,
    target: &HardwareTarget,
    next_id: u64,
    seed: u64,
) -> MutationOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MUTATE_RETRIES {
        let mut child = Candidate {
            id: next_id,
            parent_id: Some(parent.id),
            genome: parent.genome.clone(),
            grid: parent.grid,
            batch_m: parent.batch_m,
        };
        let ops = applicable(&child, bounds);
        let mut fired = false;
        for &op in &ops {
            if rng.random_range(0.0..1.0) < rate_of(op, rates) {
                apply_op(&mut rng, &mut child, op, bounds);
                fired = true;
            }
        }
        if !fired {
            let weights: Vec<f64> = ops.iter().map(|&op| rate_of(op, rates).max(1e-9)).collect();
            let total: f64 = weights.iter().sum();
            let mut draw = rng.random_range(0.0..total);
            let mut chosen = ops[0];
            for (&op, &w) in ops.iter().zip(&weights) {
                if draw < w {
                    chosen = op;
                    break;
                }
                draw -= w;
            }
            apply_op(&mut rng, &mut child, chosen, bounds);
        }
        if validate_grid(&child.grid, target).is_empty() {
            return MutationOutcome { candidate: child, mutated: true };
        }
    }
    let clone = Candidate {
        id: next_id,
        parent_id: Some(parent.id),
        genome: parent.genome.clone(),
        grid: parent.grid,
        batch_m: parent.batch_m,
    };
    MutationOutcome { candidate: clone, mutated: false }
}
