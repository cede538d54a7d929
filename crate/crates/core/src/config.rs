//! Run configuration: one TOML document with sections mirroring the
//! dataset / network / hardware / objectives / evolution breakdown, plus
//! resolution into the engine's own types.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::LabelColumn;
use crate::evolve::{
    MutationRates, Objective, ObjectiveSpec, ObjectiveTerm, Orientation, SearchBounds,
    SearchConfig,
};
use crate::hw::HardwareTarget;
use crate::mlp::{Activation, Optimizer, TrainConfig};
use crate::worker::SplitSpec;

#[derive(Debug)]
pub enum ConfigError {
    Toml(String),
    Invalid { field: String, detail: String },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Toml(detail) => write!(f, "config does not parse: {}", detail),
            ConfigError::Invalid { field, detail } => {
                write!(f, "config field {} is invalid: {}", field, detail)
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, detail: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), detail: detail.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub path: String,
    /// Label column by header name; mutually exclusive with label_index.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub label_index: Option<usize>,
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default)]
    pub eval: EvalSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// "kfold", "holdout" or "train_only".
    pub mode: String,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub test_fraction: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            mode: "holdout".to_string(),
            k: None,
            test_fraction: Some(0.2),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// 0 means: infer from the dataset.
    #[serde(default)]
    pub input_size: usize,
    #[serde(default)]
    pub output_size: usize,
    #[serde(default = "default_min_layers")]
    pub min_layers: usize,
    #[serde(default = "default_max_layers")]
    pub max_layers: usize,
    #[serde(default = "default_min_neurons")]
    pub min_neurons: usize,
    #[serde(default = "default_max_neurons")]
    pub max_neurons: usize,
    #[serde(default = "default_activations")]
    pub activations: Vec<String>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            input_size: 0,
            output_size: 0,
            min_layers: default_min_layers(),
            max_layers: default_max_layers(),
            min_neurons: default_min_neurons(),
            max_neurons: default_max_neurons(),
            activations: default_activations(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareSection {
    /// Device preset: "arria10" or "stratix10".
    pub target: String,
    #[serde(default)]
    pub ddr_banks: Option<u64>,
    #[serde(default)]
    pub clock_mhz: Option<u64>,
    #[serde(default = "default_rows")]
    pub rows: [u32; 2],
    #[serde(default = "default_rows")]
    pub cols: [u32; 2],
    #[serde(default = "default_vec_width")]
    pub vec_width: [u32; 2],
    #[serde(default = "default_interleave")]
    pub interleave_rows: [u32; 2],
    #[serde(default = "default_interleave")]
    pub interleave_cols: [u32; 2],
    #[serde(default = "default_batch")]
    pub batch_m: [u64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveEntry {
    pub name: String,
    /// "maximize" / "minimize"; defaults to the objective's natural one.
    #[serde(default)]
    pub orientation: Option<String>,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub population: usize,
    /// Steady-state steps after initialization.
    pub budget: u64,
    pub seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_tournament")]
    pub tournament: usize,
    #[serde(default)]
    pub rates: RatesSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub add_layer: f64,
    pub remove_layer: f64,
    pub resize_layer: f64,
    pub change_activation: f64,
    pub toggle_bias: f64,
    pub resize_grid: f64,
    pub change_batch: f64,
}

impl Default for RatesSection {
    fn default() -> Self {
        let r = MutationRates::default();
        RatesSection {
            add_layer: r.add_layer,
            remove_layer: r.remove_layer,
            resize_layer: r.resize_layer,
            change_activation: r.change_activation,
            toggle_bias: r.toggle_bias,
            resize_grid: r.resize_grid,
            change_batch: r.change_batch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// "adam" or "sgd".
    #[serde(default = "default_optimizer")]
    pub optimizer: String,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            learning_rate: default_learning_rate(),
            optimizer: default_optimizer(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

fn default_true() -> bool {
    true
}
fn default_min_layers() -> usize {
    1
}
fn default_max_layers() -> usize {
    4
}
fn default_min_neurons() -> usize {
    4
}
fn default_max_neurons() -> usize {
    256
}
fn default_activations() -> Vec<String> {
    vec!["relu".to_string(), "sigmoid".to_string(), "tanh".to_string()]
}
fn default_rows() -> [u32; 2] {
    [2, 16]
}
fn default_vec_width() -> [u32; 2] {
    [1, 8]
}
fn default_interleave() -> [u32; 2] {
    [1, 16]
}
fn default_batch() -> [u64; 2] {
    [1, 256]
}
fn default_weight() -> f64 {
    1.0
}
fn default_parallelism() -> usize {
    1
}
fn default_tournament() -> usize {
    3
}
fn default_epochs() -> usize {
    60
}
fn default_batch_size() -> usize {
    32
}
fn default_learning_rate() -> f64 {
    1e-3
}
fn default_optimizer() -> String {
    "adam".to_string()
}

/// The whole run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub network: NetworkSection,
    pub hardware: HardwareSection,
    pub objectives: Vec<ObjectiveEntry>,
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub train: TrainSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str(s).map_err(|e| ConfigError::Toml(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("dataset.path", format!("{}: {}", path.display(), e)))?;
        RunConfig::from_toml_str(&text)
    }

    pub fn label_column(&self) -> Result<LabelColumn, ConfigError> {
        match (&self.dataset.label, self.dataset.label_index) {
            (Some(name), None) => Ok(LabelColumn::Name(name.clone())),
            (None, Some(index)) => Ok(LabelColumn::Index(index)),
            (Some(_), Some(_)) => Err(invalid(
                "dataset.label",
                "label and label_index are mutually exclusive",
            )),
            (None, None) => Err(invalid("dataset.label", "one of label or label_index required")),
        }
    }

    pub fn split_spec(&self) -> Result<SplitSpec, ConfigError> {
        let eval = &self.dataset.eval;
        match eval.mode.as_str() {
            "kfold" => {
                let k = eval
                    .k
                    .ok_or_else(|| invalid("dataset.eval.k", "kfold mode requires k"))?;
                Ok(SplitSpec::KFold { k, seed: eval.seed })
            }
            "holdout" => {
                let f = eval.test_fraction.ok_or_else(|| {
                    invalid("dataset.eval.test_fraction", "holdout mode requires test_fraction")
                })?;
                if !(f > 0.0 && f < 1.0) {
                    return Err(invalid(
                        "dataset.eval.test_fraction",
                        format!("{} outside (0, 1)", f),
                    ));
                }
                Ok(SplitSpec::Holdout { test_fraction: f, seed: eval.seed })
            }
            "train_only" => Ok(SplitSpec::TrainOnly),
            other => Err(invalid(
                "dataset.eval.mode",
                format!("{:?} is not one of kfold, holdout, train_only", other),
            )),
        }
    }

    pub fn bounds(&self) -> Result<SearchBounds, ConfigError> {
        let mut activations = Vec::new();
        for name in &self.network.activations {
            let a = Activation::parse(name).ok_or_else(|| {
                invalid("network.activations", format!("unknown activation {:?}", name))
            })?;
            if !activations.contains(&a) {
                activations.push(a);
            }
        }
        let hw = &self.hardware;
        let bounds = SearchBounds {
            min_layers: self.network.min_layers,
            max_layers: self.network.max_layers,
            min_neurons: self.network.min_neurons,
            max_neurons: self.network.max_neurons,
            activations,
            rows: (hw.rows[0], hw.rows[1]),
            cols: (hw.cols[0], hw.cols[1]),
            vec_width: (hw.vec_width[0], hw.vec_width[1]),
            interleave_rows: (hw.interleave_rows[0], hw.interleave_rows[1]),
            interleave_cols: (hw.interleave_cols[0], hw.interleave_cols[1]),
            batch_m: (hw.batch_m[0], hw.batch_m[1]),
        };
        bounds.validate().map_err(|detail| invalid("network/hardware bounds", detail))?;
        Ok(bounds)
    }

    pub fn target(&self) -> Result<HardwareTarget, ConfigError> {
        let mut target = match self.hardware.target.as_str() {
            "arria10" => HardwareTarget::arria10_like(),
            "stratix10" => HardwareTarget::stratix10_like(),
            other => {
                return Err(invalid(
                    "hardware.target",
                    format!("{:?} is not a known preset (arria10, stratix10)", other),
                ))
            }
        };
        if let Some(banks) = self.hardware.ddr_banks {
            if banks == 0 {
                return Err(invalid("hardware.ddr_banks", "must be at least 1"));
            }
            target.ddr_banks = banks;
        }
        if let Some(mhz) = self.hardware.clock_mhz {
            if mhz == 0 {
                return Err(invalid("hardware.clock_mhz", "must be positive"));
            }
            target.clock_hz = mhz * 1_000_000;
        }
        Ok(target)
    }

    pub fn objective_spec(&self) -> Result<ObjectiveSpec, ConfigError> {
        if self.objectives.is_empty() {
            return Err(invalid("objectives", "at least one objective required"));
        }
        let mut terms = Vec::new();
        for entry in &self.objectives {
            let objective = Objective::parse(&entry.name).ok_or_else(|| {
                invalid("objectives.name", format!("unknown objective {:?}", entry.name))
            })?;
            if terms.iter().any(|t: &ObjectiveTerm| t.objective == objective) {
                return Err(invalid(
                    "objectives",
                    format!("objective {:?} listed twice", entry.name),
                ));
            }
            let orientation = match entry.orientation.as_deref() {
                None => objective.default_orientation(),
                Some("maximize") => Orientation::Maximize,
                Some("minimize") => Orientation::Minimize,
                Some(other) => {
                    return Err(invalid(
                        "objectives.orientation",
                        format!("{:?} is not maximize or minimize", other),
                    ))
                }
            };
            if !(entry.weight > 0.0) {
                return Err(invalid("objectives.weight", "weights must be positive"));
            }
            terms.push(ObjectiveTerm { objective, orientation, weight: entry.weight });
        }
        Ok(ObjectiveSpec::new(terms))
    }

    pub fn train_config(&self) -> Result<TrainConfig, ConfigError> {
        let optimizer = match self.train.optimizer.as_str() {
            "adam" => Optimizer::Adam,
            "sgd" => Optimizer::Sgd,
            other => {
                return Err(invalid(
                    "train.optimizer",
                    format!("{:?} is not adam or sgd", other),
                ))
            }
        };
        if self.train.epochs == 0 || self.train.batch_size == 0 {
            return Err(invalid("train", "epochs and batch_size must be positive"));
        }
        if !(self.train.learning_rate > 0.0) {
            return Err(invalid("train.learning_rate", "must be positive"));
        }
        Ok(TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            optimizer,
            seed: self.train.seed,
        })
    }

    /// Assemble the engine configuration once dataset dimensions are
    /// known. Explicit sizes in the config win over inferred ones.
    pub fn search_config(
        &self,
        inferred_inputs: usize,
        inferred_outputs: usize,
    ) -> Result<SearchConfig, ConfigError> {
        let input_size = if self.network.input_size > 0 {
            self.network.input_size
        } else {
            inferred_inputs
        };
        let output_size = if self.network.output_size > 0 {
            self.network.output_size
        } else {
            inferred_outputs
        };
        if input_size == 0 || output_size == 0 {
            return Err(invalid("network", "input_size and output_size must resolve nonzero"));
        }
        let ev = &self.evolution;
        if ev.population < 2 {
            return Err(invalid("evolution.population", "must be at least 2"));
        }
        let r = &ev.rates;
        for (name, v) in [
            ("add_layer", r.add_layer),
            ("remove_layer", r.remove_layer),
            ("resize_layer", r.resize_layer),
            ("change_activation", r.change_activation),
            ("toggle_bias", r.toggle_bias),
            ("resize_grid", r.resize_grid),
            ("change_batch", r.change_batch),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(
                    "evolution.rates",
                    format!("{} = {} outside [0, 1]", name, v),
                ));
            }
        }
        Ok(SearchConfig {
            bounds: self.bounds()?,
            rates: MutationRates {
                add_layer: r.add_layer,
                remove_layer: r.remove_layer,
                resize_layer: r.resize_layer,
                change_activation: r.change_activation,
                toggle_bias: r.toggle_bias,
                resize_grid: r.resize_grid,
                change_batch: r.change_batch,
            },
            objectives: self.objective_spec()?,
            target: self.target()?,
            input_size,
            output_size,
            population_size: ev.population,
            budget_steps: ev.budget,
            tournament_size: ev.tournament,
            parallelism: ev.parallelism,
            seed: ev.seed,
        })
    }
}

/// Built-in template for `gen-config`: a complete, commented document
/// the generator then specializes to a dataset.
pub const DEFAULT_TEMPLATE: &str = r#"[dataset]
path = "data/example.csv"
label = "class"
has_header = true

[dataset.eval]
mode = "kfold"
k = 5
seed = 7

[network]
input_size = 0
output_size = 0
min_layers = 1
max_layers = 4
min_neurons = 4
max_neurons = 256
activations = ["relu", "sigmoid", "tanh"]

[hardware]
target = "arria10"
rows = [2, 16]
cols = [2, 16]
vec_width = [1, 8]
interleave_rows = [1, 16]
interleave_cols = [1, 16]
batch_m = [1, 256]

[[objectives]]
name = "accuracy"
weight = 1.0

[[objectives]]
name = "outputs_per_s"
weight = 1.0

[evolution]
population = 20
budget = 500
seed = 7
parallelism = 1
tournament = 3

[train]
epochs = 60
batch_size = 32
learning_rate = 0.001
optimizer = "adam"
seed = 0

[output]
dir = "runs/latest"
"#;

/// Fill a template with a dataset's inferred dimensions and path. The
/// template's own label column is used to load the dataset; output is
/// deterministic for identical inputs.
pub fn generate_config(
    dataset_path: &Path,
    template: Option<&str>,
) -> Result<String, ConfigError> {
    let mut cfg = RunConfig::from_toml_str(template.unwrap_or(DEFAULT_TEMPLATE))?;
    let label = cfg.label_column()?;
    let ds = crate::dataset::load_csv(dataset_path, &label, cfg.dataset.has_header)
        .map_err(|e| invalid("dataset.path", e.to_string()))?;
    cfg.dataset.path = dataset_path.display().to_string();
    cfg.network.input_size = ds.n_features;
    cfg.network.output_size = ds.n_classes;
    Ok(cfg.to_toml_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn minimal_toml() -> String {
        r#"
[dataset]
path = "data/x.csv"
label = "y"

[hardware]
target = "arria10"

[[objectives]]
name = "accuracy"

[evolution]
population = 10
budget = 100
seed = 3

[output]
dir = "runs/t"
"#
        .to_string()
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = RunConfig::from_toml_str(&minimal_toml()).unwrap();
        assert_eq!(cfg.network.min_layers, 1);
        assert_eq!(cfg.train.epochs, 60);
        assert_eq!(cfg.evolution.tournament, 3);
        let spec = cfg.objective_spec().unwrap();
        assert_eq!(spec.terms.len(), 1);
        assert_eq!(spec.terms[0].orientation, Orientation::Maximize);
        let split = cfg.split_spec().unwrap();
        assert!(matches!(split, SplitSpec::Holdout { test_fraction, .. } if test_fraction == 0.2));
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = RunConfig::from_toml_str(DEFAULT_TEMPLATE).unwrap();
        let text = cfg.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_and_missing_keys_are_named() {
        let with_typo = minimal_toml().replace("population = 10", "populaton = 10");
        let err = RunConfig::from_toml_str(&with_typo).unwrap_err().to_string();
        assert!(err.contains("populaton"), "error was: {}", err);

        let missing = minimal_toml().replace("budget = 100\n", "");
        let err = RunConfig::from_toml_str(&missing).unwrap_err().to_string();
        assert!(err.contains("budget"), "error was: {}", err);
    }

    #[test]
    fn target_overrides_apply() {
        let mut cfg = RunConfig::from_toml_str(&minimal_toml()).unwrap();
        cfg.hardware.ddr_banks = Some(4);
        cfg.hardware.clock_mhz = Some(300);
        let t = cfg.target().unwrap();
        assert_eq!(t.ddr_banks, 4);
        assert_eq!(t.clock_hz, 300_000_000);
        cfg.hardware.target = "virtex".to_string();
        assert!(cfg.target().is_err());
    }

    #[test]
    fn objective_validation_catches_duplicates_and_unknowns() {
        let mut cfg = RunConfig::from_toml_str(&minimal_toml()).unwrap();
        cfg.objectives.push(ObjectiveEntry {
            name: "accuracy".to_string(),
            orientation: None,
            weight: 1.0,
        });
        assert!(cfg.objective_spec().unwrap_err().to_string().contains("twice"));
        cfg.objectives[1].name = "power".to_string();
        assert!(cfg.objective_spec().unwrap_err().to_string().contains("power"));
        cfg.objectives.truncate(1);
        cfg.objectives[0].orientation = Some("sideways".to_string());
        assert!(cfg.objective_spec().is_err());
    }

    #[test]
    fn label_column_exclusivity() {
        let mut cfg = RunConfig::from_toml_str(&minimal_toml()).unwrap();
        assert!(matches!(cfg.label_column().unwrap(), LabelColumn::Name(_)));
        cfg.dataset.label_index = Some(0);
        assert!(cfg.label_column().is_err());
        cfg.dataset.label = None;
        assert!(matches!(cfg.label_column().unwrap(), LabelColumn::Index(0)));
    }

    #[test]
    fn generate_config_infers_sizes_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("two.csv");
        let mut f = std::fs::File::create(&csv_path).unwrap();
        write!(f, "a,b,class\n0,1,0\n1,0,1\n0.5,0.5,1\n").unwrap();
        let one = generate_config(&csv_path, None).unwrap();
        let two = generate_config(&csv_path, None).unwrap();
        assert_eq!(one, two);
        let cfg = RunConfig::from_toml_str(&one).unwrap();
        assert_eq!(cfg.network.input_size, 2);
        assert_eq!(cfg.network.output_size, 2);
        assert_eq!(cfg.dataset.path, csv_path.display().to_string());
    }

    #[test]
    fn generate_config_fails_on_unloadable_dataset() {
        let err = generate_config(Path::new("/nonexistent/x.csv"), None).unwrap_err();
        assert!(err.to_string().contains("dataset.path"));
    }

    #[test]
    fn search_config_assembles_and_validates_rates() {
        let cfg = RunConfig::from_toml_str(&minimal_toml()).unwrap();
        let sc = cfg.search_config(13, 3).unwrap();
        assert_eq!(sc.input_size, 13);
        assert_eq!(sc.output_size, 3);
        assert_eq!(sc.population_size, 10);
        assert_eq!(sc.budget_steps, 100);

        let mut bad = cfg.clone();
        bad.evolution.rates.add_layer = 1.5;
        assert!(bad.search_config(13, 3).is_err());
        let mut bad = cfg;
        bad.network.input_size = 0;
        assert!(bad.search_config(0, 3).is_err());
    }

    #[test]
    fn split_spec_modes_validate() {
        let mut cfg = RunConfig::from_toml_str(&minimal_toml()).unwrap();
        cfg.dataset.eval =
            EvalSection { mode: "kfold".to_string(), k: Some(10), test_fraction: None, seed: 1 };
        assert!(matches!(cfg.split_spec().unwrap(), SplitSpec::KFold { k: 10, seed: 1 }));
        cfg.dataset.eval.k = None;
        assert!(cfg.split_spec().is_err());
        cfg.dataset.eval.mode = "bootstrap".to_string();
        assert!(cfg.split_spec().is_err());
    }
}
