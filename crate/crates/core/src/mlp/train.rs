//! Mini-batch backpropagation training and k-fold evaluation.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{accuracy, forward_cached, init_network, TrainedModel};
use super::{MlpGenome, TrainError};
use crate::dataset::{normalize_apply, normalize_fit, Dataset, FoldPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

/// Training hyperparameters. The paper discloses none, so these are this
/// framework's own defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: Optimizer::Adam,
            seed: 0,
        }
    }
}

/// Backprop gradients and mean cross-entropy for one batch. Bias slots
/// mirror the model: `None` where the layer has no bias.
pub(super) fn compute_gradients(
    model: &TrainedModel,
    x: &Array2<f64>,
    labels: &[usize],
) -> (Vec<Array2<f64>>, Vec<Option<Array1<f64>>>, f64) {
    let cache = forward_cached(model, x);
    let n_layers = model.weights.len();
    let probs = &cache.acts[n_layers];
    let m = x.nrows() as f64;

    let mut loss = 0.0;
    for (row, &label) in probs.axis_iter(Axis(0)).zip(labels) {
        loss -= row[label].max(1e-12).ln();
    }
    loss /= m;

    // Softmax + cross-entropy collapses to (p - onehot) / m at the output.
    let mut delta = probs.clone();
    for (i, &label) in labels.iter().enumerate() {
        delta[[i, label]] -= 1.0;
    }
    delta /= m;

    let mut d_weights = vec![Array2::zeros((0, 0)); n_layers];
    let mut d_biases: Vec<Option<Array1<f64>>> = vec![None; n_layers];
    for l in (0..n_layers).rev() {
        d_weights[l] = cache.acts[l].t().dot(&delta);
        if model.biases[l].is_some() {
            d_biases[l] = Some(delta.sum_axis(Axis(0)));
        }
        if l > 0 {
            let da = delta.dot(&model.weights[l].t());
            let act = model.genome.hidden_layers[l - 1].activation;
            delta = da * cache.zs[l - 1].mapv(|z| act.derivative(z));
        }
    }
    (d_weights, d_biases, loss)
}

struct AdamState {
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Option<Array1<f64>>>,
    v_b: Vec<Option<Array1<f64>>>,
    t: i32,
}

impl AdamState {
    fn new(model: &TrainedModel) -> Self {
        AdamState {
            m_w: model.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            v_w: model.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            m_b: model.biases.iter().map(|b| b.as_ref().map(|b| Array1::zeros(b.len()))).collect(),
            v_b: model.biases.iter().map(|b| b.as_ref().map(|b| Array1::zeros(b.len()))).collect(),
            t: 0,
        }
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn apply_update(
    model: &mut TrainedModel,
    d_weights: &[Array2<f64>],
    d_biases: &[Option<Array1<f64>>],
    lr: f64,
    adam: &mut Option<AdamState>,
) {
    match adam {
        None => {
            for (w, dw) in model.weights.iter_mut().zip(d_weights) {
                *w -= &(dw * lr);
            }
            for (b, db) in model.biases.iter_mut().zip(d_biases) {
                if let (Some(b), Some(db)) = (b.as_mut(), db.as_ref()) {
                    *b -= &(db * lr);
                }
            }
        }
        Some(state) => {
            state.t += 1;
            let c1 = 1.0 - ADAM_BETA1.powi(state.t);
            let c2 = 1.0 - ADAM_BETA2.powi(state.t);
            for l in 0..model.weights.len() {
                let dw = &d_weights[l];
                state.m_w[l] = &state.m_w[l] * ADAM_BETA1 + dw * (1.0 - ADAM_BETA1);
                state.v_w[l] = &state.v_w[l] * ADAM_BETA2 + &dw.mapv(|g| g * g) * (1.0 - ADAM_BETA2);
                let update = (&state.m_w[l] / c1) / ((&state.v_w[l] / c2).mapv(f64::sqrt) + ADAM_EPS);
                model.weights[l] -= &(update * lr);

                if let (Some(b), Some(db)) = (model.biases[l].as_mut(), d_biases[l].as_ref()) {
                    let m_b = state.m_b[l].as_mut().expect("bias state mirrors model");
                    let v_b = state.v_b[l].as_mut().expect("bias state mirrors model");
                    *m_b = &*m_b * ADAM_BETA1 + db * (1.0 - ADAM_BETA1);
                    *v_b = &*v_b * ADAM_BETA2 + &db.mapv(|g| g * g) * (1.0 - ADAM_BETA2);
                    let update = (&*m_b / c1) / ((&*v_b / c2).mapv(f64::sqrt) + ADAM_EPS);
                    *b -= &(update * lr);
                }
            }
        }
    }
}

fn params_finite(model: &TrainedModel) -> bool {
    model.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
        && model
            .biases
            .iter()
            .flatten()
            .all(|b| b.iter().all(|v| v.is_finite()))
}

/// Train a genome on normalized rows with mini-batch cross-entropy
/// backpropagation. Deterministic in (genome, data, cfg.seed); batch
/// order reshuffles every epoch from a seed-derived stream.
pub fn train(
    genome: &MlpGenome,
    features: &Array2<f64>,
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<TrainedModel, TrainError> {
    if features.nrows() == 0 {
        return Err(TrainError::EmptyTrainingSet);
    }
    if features.ncols() != genome.input_size {
        return Err(TrainError::ShapeMismatch { expected: genome.input_size, got: features.ncols() });
    }
    assert_eq!(features.nrows(), labels.len(), "feature rows and labels must align");
    assert!(cfg.epochs >= 1 && cfg.batch_size >= 1, "TrainConfig invariants");

    let mut model = init_network(genome, cfg.seed);
    // Distinct stream for shuffling so init stays comparable across cfgs.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut adam = match cfg.optimizer {
        Optimizer::Adam => Some(AdamState::new(&model)),
        Optimizer::Sgd => None,
    };

    let n = features.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let bx = features.select(Axis(0), chunk);
            let by: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (dw, db, loss) = compute_gradients(&model, &bx, &by);
            epoch_loss += loss * chunk.len() as f64;
            apply_update(&mut model, &dw, &db, cfg.learning_rate, &mut adam);
        }
        epoch_loss /= n as f64;
        if !epoch_loss.is_finite() || !params_finite(&model) {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        model.meta.loss_history.push(epoch_loss);
    }

    model.meta.epochs_run = cfg.epochs;
    model.meta.final_loss = *model.meta.loss_history.last().expect("epochs >= 1");
    Ok(model)
}

/// One fold's outcome inside a [`KfoldReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub result: Result<f64, TrainError>,
}

/// Per-fold accuracies with their mean. Failed folds are excluded from
/// the mean and counted; an all-failed report has mean 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KfoldReport {
    pub per_fold: Vec<FoldOutcome>,
    pub mean_accuracy: f64,
    pub failed_folds: usize,
}

/// Train and score the genome on every fold of the plan. Normalization
/// statistics are fit on each fold's training side only.
pub fn kfold_accuracy(
    genome: &MlpGenome,
    ds: &Dataset,
    plan: &FoldPlan,
    cfg: &TrainConfig,
) -> KfoldReport {
    assert_eq!(plan.assignments.len(), ds.features.nrows(), "plan must belong to the dataset");
    let mut per_fold = Vec::with_capacity(plan.k);
    let mut sum = 0.0;
    let mut ok = 0usize;

    for fold in 0..plan.k {
        let (train_idx, test_idx) = plan.split(fold);
        let train_x_raw = ds.features.select(Axis(0), &train_idx);
        let test_x_raw = ds.features.select(Axis(0), &test_idx);
        let train_y: Vec<usize> = train_idx.iter().map(|&i| ds.labels[i]).collect();
        let test_y: Vec<usize> = test_idx.iter().map(|&i| ds.labels[i]).collect();

        let stats = normalize_fit(&train_x_raw);
        let train_x = normalize_apply(&stats, &train_x_raw);
        let test_x = normalize_apply(&stats, &test_x_raw);

        let result = train(genome, &train_x, &train_y, cfg)
            .map(|model| accuracy(&model, &test_x, &test_y));
        if let Ok(acc) = &result {
            sum += acc;
            ok += 1;
        }
        per_fold.push(FoldOutcome { fold, result });
    }

    KfoldReport {
        mean_accuracy: if ok > 0 { sum / ok as f64 } else { 0.0 },
        failed_folds: plan.k - ok,
        per_fold,
    }
}
