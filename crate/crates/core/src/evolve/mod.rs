//! Steady-state evolutionary search over joint (MLP, grid) candidates.
//!
//! One offspring is produced per step by mutating a tournament-selected
//! parent; the offspring replaces the population's worst member
//! (single-objective) or the worst-ranked most-crowded member
//! (multi-objective). Evaluation results are cached by structural
//! identity so no candidate is ever scored twice.

mod mutate;
mod pareto;
mod search;

pub use mutate::{init_population, mutate, InitError, MutationOutcome, MutationRates};
pub use pareto::{
    crowding_distances, dominates, nondominated_ranks, pareto_front, scalarize, ParetoFront,
    SchemaError,
};
pub use search::{
    run_search, steady_state_step, EvalEvent, EvalOutcome, Evaluator, FnEvaluator, RunStats,
    SearchConfig, SearchError, SearchOutcome, SearchState,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::hw::GridConfig;
use crate::mlp::{Activation, MlpGenome};

/// One co-design individual: a network, the grid that runs it, and the
/// batch size it is scheduled at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u64,
    pub parent_id: Option<u64>,
    pub genome: MlpGenome,
    pub grid: GridConfig,
    pub batch_m: u64,
}

impl Candidate {
    /// Structural identity: everything except id/parentage. Two
    /// candidates with equal keys are the same design and share one
    /// cache entry.
    pub fn cache_key(&self) -> CacheKey {
        CacheKey { genome: self.genome.clone(), grid: self.grid, batch_m: self.batch_m }
    }
}

/// Canonical structural key for the evaluation cache.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub genome: MlpGenome,
    pub grid: GridConfig,
    pub batch_m: u64,
}

/// Objectives the framework can score. `TrueFlops` exists as an optional
/// minimize objective; the paper names floating-point operations among
/// the optimization targets without showing a run that uses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Accuracy,
    OutputsPerS,
    LatencyS,
    EffectiveGops,
    Efficiency,
    TrueFlops,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Accuracy => "accuracy",
            Objective::OutputsPerS => "outputs_per_s",
            Objective::LatencyS => "latency_s",
            Objective::EffectiveGops => "effective_gops",
            Objective::Efficiency => "efficiency",
            Objective::TrueFlops => "true_flops",
        }
    }

    pub fn parse(s: &str) -> Option<Objective> {
        match s {
            "accuracy" => Some(Objective::Accuracy),
            "outputs_per_s" => Some(Objective::OutputsPerS),
            "latency_s" => Some(Objective::LatencyS),
            "effective_gops" => Some(Objective::EffectiveGops),
            "efficiency" => Some(Objective::Efficiency),
            "true_flops" => Some(Objective::TrueFlops),
            _ => None,
        }
    }

    /// Natural optimization direction.
    pub fn default_orientation(&self) -> Orientation {
        match self {
            Objective::LatencyS | Objective::TrueFlops => Orientation::Minimize,
            _ => Orientation::Maximize,
        }
    }

    /// Only accuracy needs a trained network; everything else comes from
    /// the hardware model.
    pub fn needs_training(&self) -> bool {
        matches!(self, Objective::Accuracy)
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Maximize,
    Minimize,
}

/// One term of the fitness schema: which objective, which direction, and
/// the weight it carries when scalarized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerm {
    pub objective: Objective,
    pub orientation: Orientation,
    pub weight: f64,
}

/// The run's fitness schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub terms: Vec<ObjectiveTerm>,
}

impl ObjectiveSpec {
    pub fn new(terms: Vec<ObjectiveTerm>) -> Self {
        ObjectiveSpec { terms }
    }

    /// Plain accuracy maximization, the single-objective default.
    pub fn accuracy_only() -> Self {
        ObjectiveSpec {
            terms: vec![ObjectiveTerm {
                objective: Objective::Accuracy,
                orientation: Orientation::Maximize,
                weight: 1.0,
            }],
        }
    }

    /// Accuracy and throughput, both maximized: the paper's trade-off run.
    pub fn accuracy_vs_throughput() -> Self {
        ObjectiveSpec {
            terms: vec![
                ObjectiveTerm {
                    objective: Objective::Accuracy,
                    orientation: Orientation::Maximize,
                    weight: 1.0,
                },
                ObjectiveTerm {
                    objective: Objective::OutputsPerS,
                    orientation: Orientation::Maximize,
                    weight: 1.0,
                },
            ],
        }
    }

    pub fn objectives(&self) -> impl Iterator<Item = Objective> + '_ {
        self.terms.iter().map(|t| t.objective)
    }

    pub fn is_multi(&self) -> bool {
        self.terms.len() > 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalStatus {
    Ok,
    Failed(String),
}

impl EvalStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, EvalStatus::Ok)
    }
}

/// One objective's measured value, tagged with its direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub objective: Objective,
    pub orientation: Orientation,
    pub value: f64,
}

/// A candidate's multi-objective score. Values are finite whenever the
/// status is ok; raw worker payloads ride along keyed by worker kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessVector {
    pub values: Vec<ObjectiveValue>,
    pub status: EvalStatus,
    pub payloads: serde_json::Map<String, serde_json::Value>,
}

impl FitnessVector {
    pub fn failed(reason: impl Into<String>) -> Self {
        FitnessVector {
            values: Vec::new(),
            status: EvalStatus::Failed(reason.into()),
            payloads: serde_json::Map::new(),
        }
    }

    pub fn from_values(spec: &ObjectiveSpec, values: &[(Objective, f64)]) -> Self {
        let values = spec
            .terms
            .iter()
            .map(|t| ObjectiveValue {
                objective: t.objective,
                orientation: t.orientation,
                value: values
                    .iter()
                    .find(|(o, _)| *o == t.objective)
                    .map(|(_, v)| *v)
                    .expect("value provided for every objective in the spec"),
            })
            .collect();
        FitnessVector { values, status: EvalStatus::Ok, payloads: serde_json::Map::new() }
    }

    pub fn get(&self, objective: Objective) -> Option<f64> {
        self.values.iter().find(|v| v.objective == objective).map(|v| v.value)
    }

    pub fn same_schema(&self, other: &FitnessVector) -> bool {
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.objective == b.objective && a.orientation == b.orientation)
    }
}

/// Structural-identity evaluation cache with hit/miss counters.
#[derive(Debug, Default)]
pub struct EvalCache {
    map: HashMap<CacheKey, FitnessVector>,
    hits: u64,
    misses: u64,
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, key: &CacheKey) -> Option<FitnessVector> {
        let found = self.map.get(key).cloned();
        if found.is_some() {
            self.hits += 1;
        } else {
            self.misses += 1;
        }
        found
    }

    /// Insert a freshly evaluated result. Panics on double evaluation of
    /// the same structural key: the engine must check the cache first.
    pub fn insert(&mut self, key: CacheKey, fitness: FitnessVector) {
        let prior = self.map.insert(key, fitness);
        assert!(prior.is_none(), "structural key evaluated twice");
    }

    pub fn contains(&self, key: &CacheKey) -> bool {
        self.map.contains_key(key)
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Joint search-space bounds for genomes, grids, and batch size.
/// Grid dimensions and batch size are sampled and stepped in powers of
/// two; neuron counts move on a geometric ladder but may take any value
/// in range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub min_layers: usize,
    pub max_layers: usize,
    pub min_neurons: usize,
    pub max_neurons: usize,
    pub activations: Vec<Activation>,
    pub rows: (u32, u32),
    pub cols: (u32, u32),
    pub vec_width: (u32, u32),
    pub interleave_rows: (u32, u32),
    pub interleave_cols: (u32, u32),
    pub batch_m: (u64, u64),
}

impl SearchBounds {
    /// Bounds must be non-empty in every dimension.
    pub fn validate(&self) -> Result<(), String> {
        let ordered = [
            ("layers", self.min_layers as u64, self.max_layers as u64),
            ("neurons", self.min_neurons as u64, self.max_neurons as u64),
            ("rows", self.rows.0 as u64, self.rows.1 as u64),
            ("cols", self.cols.0 as u64, self.cols.1 as u64),
            ("vec_width", self.vec_width.0 as u64, self.vec_width.1 as u64),
            ("interleave_rows", self.interleave_rows.0 as u64, self.interleave_rows.1 as u64),
            ("interleave_cols", self.interleave_cols.0 as u64, self.interleave_cols.1 as u64),
            ("batch_m", self.batch_m.0, self.batch_m.1),
        ];
        for (name, lo, hi) in ordered {
            if lo > hi {
                return Err(format!("bounds for {} are reversed ({} > {})", name, lo, hi));
            }
            if lo == 0 && name != "layers" {
                return Err(format!("bounds for {} must start at 1", name));
            }
        }
        if self.min_neurons < 1 {
            return Err("neuron bounds must start at 1".to_string());
        }
        if self.activations.is_empty() {
            return Err("activation set is empty".to_string());
        }
        Ok(())
    }
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            min_layers: 1,
            max_layers: 4,
            min_neurons: 4,
            max_neurons: 256,
            activations: vec![Activation::Relu, Activation::Sigmoid, Activation::Tanh],
            rows: (2, 16),
            cols: (2, 16),
            vec_width: (1, 8),
            interleave_rows: (1, 16),
            interleave_cols: (1, 16),
            batch_m: (1, 256),
        }
    }
}
