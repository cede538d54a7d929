//! Job execution on the worker side: the three evaluation kinds and the
//! context (datasets, targets) they draw on.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::protocol::{
    EvalRequest, EvalResult, Measured, PhaseTiming, SplitSpec, WorkerKind,
};
use crate::dataset::{make_folds, normalize_apply, normalize_fit, Dataset};
use crate::evolve::{EvalStatus, Objective};
use crate::hw::{model_run, validate_grid, HardwareTarget};
use crate::mlp::{accuracy, kfold_accuracy, train};

/// Immutable resources a worker holds. Datasets are shared by Arc so
/// parallel slots evaluate against one copy.
#[derive(Clone, Default)]
pub struct WorkerContext {
    pub datasets: HashMap<String, Arc<Dataset>>,
    pub targets: HashMap<String, HardwareTarget>,
}

impl WorkerContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_dataset(mut self, ds: Dataset) -> Self {
        self.datasets.insert(ds.name.clone(), Arc::new(ds));
        self
    }

    pub fn with_target(mut self, t: HardwareTarget) -> Self {
        self.targets.insert(t.name.clone(), t);
        self
    }

    pub fn dataset_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.datasets.keys().cloned().collect();
        names.sort();
        names
    }

    pub fn target_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.targets.keys().cloned().collect();
        names.sort();
        names
    }
}

/// Train and score the candidate network per the request's split spec.
pub fn simulation_evaluate(ctx: &WorkerContext, worker_id: &str, req: &EvalRequest) -> EvalResult {
    let kind = WorkerKind::Simulation;
    let Some(ds) = ctx.datasets.get(&req.dataset.name) else {
        return EvalResult::failed(
            req.job_id,
            worker_id,
            kind,
            format!("unknown dataset {:?}", req.dataset.name),
        );
    };
    let genome = &req.candidate.genome;
    if genome.input_size != ds.n_features {
        return EvalResult::failed(
            req.job_id,
            worker_id,
            kind,
            format!(
                "shape mismatch: genome expects {} inputs, dataset {:?} has {} features",
                genome.input_size, ds.name, ds.n_features
            ),
        );
    }
    if genome.output_size != ds.n_classes {
        return EvalResult::failed(
            req.job_id,
            worker_id,
            kind,
            format!(
                "shape mismatch: genome emits {} classes, dataset {:?} has {}",
                genome.output_size, ds.name, ds.n_classes
            ),
        );
    }

    let start = Instant::now();
    let (acc, payload) = match &req.dataset.split {
        SplitSpec::KFold { k, seed } => {
            let plan = match make_folds(ds, *k, *seed) {
                Ok(plan) => plan,
                Err(e) => {
                    return EvalResult::failed(req.job_id, worker_id, kind, e.to_string());
                }
            };
            let report = kfold_accuracy(genome, ds, &plan, &req.train);
            if report.failed_folds == plan.k {
                return EvalResult::failed(
                    req.job_id,
                    worker_id,
                    kind,
                    "training diverged on every fold",
                );
            }
            let folds: Vec<serde_json::Value> = report
                .per_fold
                .iter()
                .map(|f| match &f.result {
                    Ok(a) => json!({"fold": f.fold, "accuracy": a}),
                    Err(e) => json!({"fold": f.fold, "error": e.to_string()}),
                })
                .collect();
            (
                report.mean_accuracy,
                json!({"split": "kfold", "k": k, "folds": folds,
                       "failed_folds": report.failed_folds}),
            )
        }
        SplitSpec::Holdout { test_fraction, seed } => {
            if !(*test_fraction > 0.0 && *test_fraction < 1.0) {
                return EvalResult::failed(
                    req.job_id,
                    worker_id,
                    kind,
                    format!("holdout fraction {} outside (0, 1)", test_fraction),
                );
            }
            let n = ds.n_rows();
            let n_test = ((n as f64) * test_fraction).round().max(1.0) as usize;
            if n_test >= n {
                return EvalResult::failed(
                    req.job_id,
                    worker_id,
                    kind,
                    "holdout split leaves no training rows",
                );
            }
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            order.shuffle(&mut rng);
            let (test_idx, train_idx) = order.split_at(n_test);
            let mut train_idx = train_idx.to_vec();
            let mut test_idx = test_idx.to_vec();
            train_idx.sort_unstable();
            test_idx.sort_unstable();
            let (train_x_raw, train_y) = ds.rows(&train_idx);
            let (test_x_raw, test_y) = ds.rows(&test_idx);
            let stats = normalize_fit(&train_x_raw);
            let train_x = normalize_apply(&stats, &train_x_raw);
            let test_x = normalize_apply(&stats, &test_x_raw);
            match train(genome, &train_x, &train_y, &req.train) {
                Ok(model) => {
                    let a = accuracy(&model, &test_x, &test_y);
                    (
                        a,
                        json!({"split": "holdout", "test_rows": test_idx.len(),
                               "train_rows": train_idx.len(),
                               "final_loss": model.meta.final_loss,
                               "epochs_run": model.meta.epochs_run}),
                    )
                }
                Err(e) => {
                    return EvalResult::failed(req.job_id, worker_id, kind, e.to_string());
                }
            }
        }
        SplitSpec::TrainOnly => {
            let idx: Vec<usize> = (0..ds.n_rows()).collect();
            let (x_raw, y) = ds.rows(&idx);
            let stats = normalize_fit(&x_raw);
            let x = normalize_apply(&stats, &x_raw);
            match train(genome, &x, &y, &req.train) {
                Ok(model) => {
                    let a = accuracy(&model, &x, &y);
                    (
                        a,
                        json!({"split": "train_only", "rows": ds.n_rows(),
                               "final_loss": model.meta.final_loss,
                               "epochs_run": model.meta.epochs_run}),
                    )
                }
                Err(e) => {
                    return EvalResult::failed(req.job_id, worker_id, kind, e.to_string());
                }
            }
        }
    };
    let elapsed = start.elapsed().as_secs_f64();

    let objectives = req
        .objectives
        .iter()
        .filter(|o| o.needs_training())
        .map(|&objective| Measured { objective, value: acc })
        .collect();
    EvalResult {
        job_id: req.job_id,
        status: EvalStatus::Ok,
        objectives,
        timings: vec![PhaseTiming { phase: "train".to_string(), seconds: elapsed }],
        worker: worker_id.to_string(),
        kind,
        payload,
    }
}

/// Run the analytical hardware model; pure and fast.
pub fn hwdb_evaluate(ctx: &WorkerContext, worker_id: &str, req: &EvalRequest) -> EvalResult {
    let kind = WorkerKind::HardwareDb;
    let Some(target) = ctx.targets.get(&req.target) else {
        return EvalResult::failed(
            req.job_id,
            worker_id,
            kind,
            format!("unknown target {:?}", req.target),
        );
    };
    let candidate = &req.candidate;
    let violations = validate_grid(&candidate.grid, target);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return EvalResult::failed(
            req.job_id,
            worker_id,
            kind,
            format!("invalid grid for {}: {}", target.name, list.join("; ")),
        );
    }
    let start = Instant::now();
    let report = match model_run(
        &candidate.genome,
        &candidate.grid,
        target,
        candidate.batch_m,
        req.total_inputs.max(1),
    ) {
        Ok(r) => r,
        Err(violations) => {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return EvalResult::failed(req.job_id, worker_id, kind, list.join("; "));
        }
    };
    let elapsed = start.elapsed().as_secs_f64();

    let objectives = req
        .objectives
        .iter()
        .filter(|o| !o.needs_training())
        .map(|&objective| {
            let value = match objective {
                Objective::OutputsPerS => report.outputs_per_s,
                Objective::LatencyS => report.latency_s,
                Objective::EffectiveGops => report.effective_gops,
                Objective::Efficiency => report.efficiency,
                Objective::TrueFlops => report.true_flops as f64,
                Objective::Accuracy => unreachable!("accuracy routed to simulation"),
            };
            Measured { objective, value }
        })
        .collect();
    EvalResult {
        job_id: req.job_id,
        status: EvalStatus::Ok,
        objectives,
        timings: vec![PhaseTiming { phase: "model".to_string(), seconds: elapsed }],
        worker: worker_id.to_string(),
        kind,
        payload: serde_json::to_value(&report).expect("performance report serializes"),
    }
}

/// Interface stub: always fails as unsupported, but documents the fields
/// a synthesis-backed worker would report.
pub fn physical_evaluate(_ctx: &WorkerContext, worker_id: &str, req: &EvalRequest) -> EvalResult {
    EvalResult {
        job_id: req.job_id,
        status: EvalStatus::Failed(
            "unsupported: physical synthesis is outside this artifact".to_string(),
        ),
        objectives: Vec::new(),
        timings: Vec::new(),
        worker: worker_id.to_string(),
        kind: WorkerKind::Physical,
        payload: json!({
            "interface": {
                "alm": null,
                "m20k": null,
                "dsp": null,
                "fmax": null,
            },
            "note": "a synthesis-backed worker would fill these utilization and clock fields",
        }),
    }
}

/// Pluggable job execution, so tests can inject crashes. Returning
/// `None` simulates a worker process dying mid-job: no reply is sent and
/// the worker stops heartbeating.
pub trait JobRunner: Send + Sync {
    fn run(&self, worker_id: &str, req: &EvalRequest) -> Option<EvalResult>;
}

/// The production runner: dispatch by this worker's kind.
pub struct ContextRunner {
    pub ctx: WorkerContext,
    pub kind: WorkerKind,
}

impl JobRunner for ContextRunner {
    fn run(&self, worker_id: &str, req: &EvalRequest) -> Option<EvalResult> {
        Some(match self.kind {
            WorkerKind::Simulation => simulation_evaluate(&self.ctx, worker_id, req),
            WorkerKind::HardwareDb => hwdb_evaluate(&self.ctx, worker_id, req),
            WorkerKind::Physical => physical_evaluate(&self.ctx, worker_id, req),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::read_csv;
    use crate::dataset::LabelColumn;
    use crate::evolve::Candidate;
    use crate::hw::GridConfig;
    use crate::mlp::{Activation, LayerGene, MlpGenome, Optimizer, TrainConfig};

    fn xor_dataset() -> Dataset {
        let csv = "x1,x2,y\n0,0,0\n0,1,1\n1,0,1\n1,1,0\n";
        read_csv(csv.as_bytes(), "xor", &LabelColumn::Name("y".to_string()), true).unwrap()
    }

    fn blob_dataset() -> Dataset {
        // two well-separated clusters, 12 rows
        let mut body = String::from("a,b,label\n");
        for i in 0..6 {
            body.push_str(&format!("{},{},0\n", i as f64 * 0.01, 0.0));
            body.push_str(&format!("{},{},1\n", 5.0 + i as f64 * 0.01, 5.0));
        }
        read_csv(body.as_bytes(), "blobs", &LabelColumn::Name("label".to_string()), true).unwrap()
    }

    fn xor_request() -> EvalRequest {
        EvalRequest {
            job_id: 1,
            candidate: Candidate {
                id: 0,
                parent_id: None,
                genome: MlpGenome {
                    input_size: 2,
                    output_size: 2,
                    hidden_layers: vec![LayerGene {
                        neurons: 4,
                        activation: Activation::Tanh,
                        has_bias: true,
                    }],
                },
                grid: GridConfig::new(4, 4, 2, 2, 2),
                batch_m: 4,
            },
            objectives: vec![Objective::Accuracy],
            dataset: DatasetRef { name: "xor".to_string(), split: SplitSpec::TrainOnly },
            target: "arria10".to_string(),
            train: TrainConfig {
                epochs: 600,
                batch_size: 4,
                learning_rate: 0.05,
                optimizer: Optimizer::Adam,
                seed: 2,
            },
            total_inputs: 4,
        }
    }

    use super::super::protocol::DatasetRef;

    #[test]
    fn simulation_learns_xor_and_is_deterministic() {
        let ctx = WorkerContext::new().with_dataset(xor_dataset());
        let a = simulation_evaluate(&ctx, "sim-1", &xor_request());
        let b = simulation_evaluate(&ctx, "sim-1", &xor_request());
        assert_eq!(a.with_zeroed_timings(), b.with_zeroed_timings());
        assert!(a.status.is_ok());
        assert_eq!(a.value_of(Objective::Accuracy), Some(1.0));
        assert_eq!(a.payload["split"], "train_only");
    }

    #[test]
    fn simulation_rejects_unknown_dataset_and_shape_mismatch() {
        let ctx = WorkerContext::new().with_dataset(xor_dataset());
        let mut req = xor_request();
        req.dataset.name = "mnist".to_string();
        let r = simulation_evaluate(&ctx, "sim-1", &req);
        assert!(matches!(&r.status, EvalStatus::Failed(m) if m.contains("unknown dataset")));

        let mut req = xor_request();
        req.candidate.genome.input_size = 7;
        let r = simulation_evaluate(&ctx, "sim-1", &req);
        assert!(matches!(&r.status, EvalStatus::Failed(m) if m.contains("shape mismatch")));
    }

    #[test]
    fn simulation_kfold_reports_per_fold_payload() {
        let ctx = WorkerContext::new().with_dataset(blob_dataset());
        let mut req = xor_request();
        req.dataset =
            DatasetRef { name: "blobs".to_string(), split: SplitSpec::KFold { k: 3, seed: 5 } };
        req.train.epochs = 200;
        let r = simulation_evaluate(&ctx, "sim-1", &req);
        assert!(r.status.is_ok());
        assert_eq!(r.payload["folds"].as_array().unwrap().len(), 3);
        let acc = r.value_of(Objective::Accuracy).unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }

    #[test]
    fn simulation_holdout_scores_on_held_out_rows() {
        let ctx = WorkerContext::new().with_dataset(blob_dataset());
        let mut req = xor_request();
        req.dataset = DatasetRef {
            name: "blobs".to_string(),
            split: SplitSpec::Holdout { test_fraction: 0.25, seed: 3 },
        };
        req.train.epochs = 300;
        let r = simulation_evaluate(&ctx, "sim-1", &req);
        assert!(r.status.is_ok());
        assert_eq!(r.payload["test_rows"], 3);
        assert_eq!(r.payload["train_rows"], 9);
        assert!(r.value_of(Objective::Accuracy).unwrap() >= 2.0 / 3.0);
    }

    #[test]
    fn hwdb_returns_model_objectives_with_invariants() {
        let ctx = WorkerContext::new().with_target(HardwareTarget::arria10_like());
        let mut req = xor_request();
        req.objectives = vec![
            Objective::OutputsPerS,
            Objective::LatencyS,
            Objective::EffectiveGops,
            Objective::Efficiency,
        ];
        req.total_inputs = 1024;
        req.candidate.batch_m = 64;
        let a = hwdb_evaluate(&ctx, "hw-1", &req);
        let b = hwdb_evaluate(&ctx, "hw-2", &req);
        assert!(a.status.is_ok());
        assert_eq!(a.objectives, b.objectives);
        let eff_gops = a.value_of(Objective::EffectiveGops).unwrap();
        let potential = a.payload["potential_gops"].as_f64().unwrap();
        assert!(eff_gops <= potential + 1e-9);
        let eff = a.value_of(Objective::Efficiency).unwrap();
        assert!(eff > 0.0 && eff <= 1.0);
    }

    #[test]
    fn hwdb_rejects_unknown_target_and_invalid_grid() {
        let ctx = WorkerContext::new().with_target(HardwareTarget::arria10_like());
        let mut req = xor_request();
        req.target = "virtex".to_string();
        let r = hwdb_evaluate(&ctx, "hw-1", &req);
        assert!(matches!(&r.status, EvalStatus::Failed(m) if m.contains("unknown target")));

        let mut req = xor_request();
        req.candidate.grid = GridConfig::new(64, 64, 8, 1, 1);
        let r = hwdb_evaluate(&ctx, "hw-1", &req);
        assert!(matches!(&r.status, EvalStatus::Failed(m) if m.contains("invalid grid")));
    }

    #[test]
    fn physical_stub_documents_interface_fields() {
        let ctx = WorkerContext::new();
        let r = physical_evaluate(&ctx, "phys-1", &xor_request());
        assert!(matches!(&r.status, EvalStatus::Failed(m) if m.contains("unsupported")));
        let iface = r.payload["interface"].as_object().unwrap();
        for field in ["alm", "m20k", "dsp", "fmax"] {
            assert!(iface.contains_key(field), "stub payload missing {}", field);
        }
    }
}
