//! Concrete networks: initialization, inference, accuracy, serialization.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Activation, MlpGenome, TrainError};

/// Provenance of a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainMeta {
    pub epochs_run: usize,
    pub final_loss: f64,
    pub seed: u64,
    /// Mean cross-entropy after each epoch.
    pub loss_history: Vec<f64>,
}

/// A genome realized as dense parameters. Layer i maps fan_in_i to
/// neurons_i; the final layer maps to output_size and always carries a
/// bias. Hidden biases are `None` where the gene's has_bias is false.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub genome: MlpGenome,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Option<Array1<f64>>>,
    pub meta: TrainMeta,
}

/// Per-layer bias presence, classification head included (always biased).
fn bias_flags(genome: &MlpGenome) -> Vec<bool> {
    genome.hidden_layers.iter().map(|l| l.has_bias).chain(std::iter::once(true)).collect()
}

/// Glorot-style uniform initialization: weights from
/// `U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out)))`, biases zero.
/// Deterministic in the seed; parameters fill layer by layer, row-major.
pub fn init_network(genome: &MlpGenome, seed: u64) -> TrainedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = genome.layer_shapes();
    let flags = bias_flags(genome);

    let mut weights = Vec::with_capacity(shapes.len());
    let mut biases = Vec::with_capacity(shapes.len());
    for (&(fan_in, fan_out), &has_bias) in shapes.iter().zip(&flags) {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w = Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-limit..limit));
        weights.push(w);
        biases.push(if has_bias { Some(Array1::zeros(fan_out)) } else { None });
    }

    TrainedModel {
        genome: genome.clone(),
        weights,
        biases,
        meta: TrainMeta { epochs_run: 0, final_loss: f64::NAN, seed, loss_history: Vec::new() },
    }
}

/// Numerically stable row-wise softmax.
pub(super) fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Forward pass keeping per-layer pre-activations and activations; the
/// training loop backpropagates through these caches.
pub(super) struct ForwardCache {
    /// `acts[0]` is the input batch; `acts[l+1]` is layer l's output.
    pub acts: Vec<Array2<f64>>,
    /// Pre-activation z of each layer.
    pub zs: Vec<Array2<f64>>,
}

pub(super) fn forward_cached(model: &TrainedModel, batch: &Array2<f64>) -> ForwardCache {
    let n_layers = model.weights.len();
    let mut acts = Vec::with_capacity(n_layers + 1);
    let mut zs = Vec::with_capacity(n_layers);
    acts.push(batch.clone());

    for l in 0..n_layers {
        let mut z = acts[l].dot(&model.weights[l]);
        if let Some(b) = &model.biases[l] {
            z += b;
        }
        let a = if l + 1 == n_layers {
            softmax_rows(&z)
        } else {
            let act = model.genome.hidden_layers[l].activation;
            z.mapv(|v| act.apply(v))
        };
        zs.push(z);
        acts.push(a);
    }
    ForwardCache { acts, zs }
}

/// Class-probability inference. Every output row sums to 1 within 1e-6.
pub fn forward(model: &TrainedModel, batch: &Array2<f64>) -> Result<Array2<f64>, TrainError> {
    if batch.ncols() != model.genome.input_size {
        return Err(TrainError::ShapeMismatch {
            expected: model.genome.input_size,
            got: batch.ncols(),
        });
    }
    Ok(forward_cached(model, batch).acts.pop().expect("forward produces an output"))
}

/// Argmax with ties broken toward the lowest class index.
pub(super) fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Fraction of rows whose predicted class matches the label.
pub fn accuracy(model: &TrainedModel, features: &Array2<f64>, labels: &[usize]) -> f64 {
    assert!(!labels.is_empty(), "accuracy needs a non-empty test set");
    assert_eq!(features.nrows(), labels.len(), "feature rows and labels must align");
    let probs = forward(model, features).expect("test set width matches the genome");
    let mut hits = 0usize;
    for (row, &label) in probs.axis_iter(Axis(0)).zip(labels) {
        if argmax_row(row.as_slice().expect("row is contiguous")) == label {
            hits += 1;
        }
    }
    hits as f64 / labels.len() as f64
}

/// Portable text-format errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelFormatError {
    BadHeader,
    UnexpectedEnd,
    BadField { line: usize, detail: String },
}

impl std::fmt::Display for ModelFormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelFormatError::BadHeader => write!(f, "not a portable model file (bad header)"),
            ModelFormatError::UnexpectedEnd => write!(f, "file ended before all parameters were read"),
            ModelFormatError::BadField { line, detail } => {
                write!(f, "line {}: {}", line, detail)
            }
        }
    }
}

impl std::error::Error for ModelFormatError {}

impl TrainedModel {
    /// Serialize to the portable text format: a header, one `layer` line
    /// per layer (shape, activation, bias flag), then the weight matrix
    /// row-major on one line and the bias on the next (or `nobias`).
    /// f64 values print in Rust's shortest round-trip form.
    pub fn to_portable_text(&self) -> String {
        let mut out = String::from("mlp-portable v1\n");
        out.push_str(&format!(
            "genome input {} output {} hidden {}\n",
            self.genome.input_size,
            self.genome.output_size,
            self.genome.hidden_layers.len()
        ));
        for (l, w) in self.weights.iter().enumerate() {
            let (act, bias) = if l < self.genome.hidden_layers.len() {
                let gene = &self.genome.hidden_layers[l];
                (gene.activation.name(), gene.has_bias)
            } else {
                ("softmax", true)
            };
            out.push_str(&format!(
                "layer {} in {} out {} activation {} bias {}\n",
                l,
                w.nrows(),
                w.ncols(),
                act,
                bias as u8
            ));
            let flat: Vec<String> = w.iter().map(|v| v.to_string()).collect();
            out.push_str(&flat.join(" "));
            out.push('\n');
            match &self.biases[l] {
                Some(b) => {
                    let flat: Vec<String> = b.iter().map(|v| v.to_string()).collect();
                    out.push_str(&flat.join(" "));
                    out.push('\n');
                }
                None => out.push_str("nobias\n"),
            }
        }
        out
    }

    pub fn from_portable_text(text: &str) -> Result<TrainedModel, ModelFormatError> {
        let mut lines = text.lines().enumerate();
        let bad = |line: usize, detail: &str| ModelFormatError::BadField {
            line: line + 1,
            detail: detail.to_string(),
        };

        let (_, header) = lines.next().ok_or(ModelFormatError::BadHeader)?;
        if header.trim() != "mlp-portable v1" {
            return Err(ModelFormatError::BadHeader);
        }
        let (gline_no, gline) = lines.next().ok_or(ModelFormatError::UnexpectedEnd)?;
        let gparts: Vec<&str> = gline.split_whitespace().collect();
        if gparts.len() != 7 || gparts[0] != "genome" {
            return Err(bad(gline_no, "expected `genome input N output N hidden N`"));
        }
        let parse_usize = |s: &str, line: usize| {
            s.parse::<usize>().map_err(|_| bad(line, &format!("bad count `{}`", s)))
        };
        let input_size = parse_usize(gparts[2], gline_no)?;
        let output_size = parse_usize(gparts[4], gline_no)?;
        let n_hidden = parse_usize(gparts[6], gline_no)?;

        let mut hidden_layers = Vec::with_capacity(n_hidden);
        let mut weights = Vec::with_capacity(n_hidden + 1);
        let mut biases = Vec::with_capacity(n_hidden + 1);

        for l in 0..n_hidden + 1 {
            let (lno, lline) = lines.next().ok_or(ModelFormatError::UnexpectedEnd)?;
            let p: Vec<&str> = lline.split_whitespace().collect();
            if p.len() != 10 || p[0] != "layer" {
                return Err(bad(lno, "expected a `layer` line"));
            }
            let fan_in = parse_usize(p[3], lno)?;
            let fan_out = parse_usize(p[5], lno)?;
            let act_name = p[7];
            let has_bias = p[9] == "1";
            if l < n_hidden {
                let activation = Activation::parse(act_name)
                    .ok_or_else(|| bad(lno, &format!("unknown activation `{}`", act_name)))?;
                hidden_layers.push(super::LayerGene { neurons: fan_out, activation, has_bias });
            } else if act_name != "softmax" || !has_bias {
                return Err(bad(lno, "output layer must be `softmax` with bias"));
            }

            let (wno, wline) = lines.next().ok_or(ModelFormatError::UnexpectedEnd)?;
            let vals: Result<Vec<f64>, _> = wline
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| bad(wno, &format!("bad value `{}`", s))))
                .collect();
            let vals = vals?;
            if vals.len() != fan_in * fan_out {
                return Err(bad(wno, "weight count does not match the layer shape"));
            }
            weights.push(
                Array2::from_shape_vec((fan_in, fan_out), vals).expect("shape checked above"),
            );

            let (bno, bline) = lines.next().ok_or(ModelFormatError::UnexpectedEnd)?;
            if bline.trim() == "nobias" {
                if has_bias {
                    return Err(bad(bno, "layer declared a bias but none follows"));
                }
                biases.push(None);
            } else {
                let vals: Result<Vec<f64>, _> = bline
                    .split_whitespace()
                    .map(|s| s.parse::<f64>().map_err(|_| bad(bno, &format!("bad value `{}`", s))))
                    .collect();
                let vals = vals?;
                if vals.len() != fan_out {
                    return Err(bad(bno, "bias length does not match the layer width"));
                }
                biases.push(Some(Array1::from_vec(vals)));
            }
        }

        Ok(TrainedModel {
            genome: MlpGenome { input_size, output_size, hidden_layers },
            weights,
            biases,
            meta: TrainMeta { epochs_run: 0, final_loss: f64::NAN, seed: 0, loss_history: Vec::new() },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::LayerGene;
    use ndarray::array;

    fn genome(input: usize, hidden: &[(usize, Activation, bool)], output: usize) -> MlpGenome {
        MlpGenome {
            input_size: input,
            output_size: output,
            hidden_layers: hidden
                .iter()
                .map(|&(n, a, b)| LayerGene { neurons: n, activation: a, has_bias: b })
                .collect(),
        }
    }

    #[test]
    fn init_shapes_chain() {
        let m = init_network(&genome(2, &[(3, Activation::Relu, true)], 2), 7);
        assert_eq!(m.weights[0].dim(), (2, 3));
        assert_eq!(m.weights[1].dim(), (3, 2));
        assert!(m.biases[0].is_some());
        assert!(m.biases[1].is_some());
    }

    #[test]
    fn init_is_deterministic_in_seed() {
        let g = genome(4, &[(5, Activation::Tanh, true)], 3);
        let a = init_network(&g, 42);
        let b = init_network(&g, 42);
        assert_eq!(a.weights, b.weights);
        let c = init_network(&g, 43);
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn init_skips_bias_where_flagged_off() {
        let m = init_network(&genome(2, &[(3, Activation::Relu, false)], 2), 1);
        assert!(m.biases[0].is_none());
        // classification head always biased
        assert!(m.biases[1].is_some());
    }

    #[test]
    fn init_weights_within_glorot_limit() {
        let m = init_network(&genome(10, &[(20, Activation::Relu, true)], 5), 3);
        let limit0 = (6.0 / 30.0_f64).sqrt();
        assert!(m.weights[0].iter().all(|v| v.abs() < limit0));
    }

    #[test]
    fn zero_weight_network_is_uniform() {
        let mut m = init_network(&genome(3, &[], 4), 0);
        m.weights[0].fill(0.0);
        let p = forward(&m, &array![[0.2, 0.4, 0.9]]).unwrap();
        for v in p.iter() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_matches_hand_arithmetic() {
        // 2-2-2 relu net with hand-set weights; frozen from hand arithmetic:
        // h = relu([1,0]*W1) = [1,2]; z = h*W2 + b2 = [1.5, 0.5];
        // softmax(z) = [e^1.5, e^0.5]/sum = [0.73105858, 0.26894142].
        let mut m = init_network(&genome(2, &[(2, Activation::Relu, false)], 2), 0);
        m.weights[0] = array![[1.0, 2.0], [3.0, 4.0]];
        m.weights[1] = array![[1.0, -1.0], [0.0, 1.0]];
        m.biases[1] = Some(array![0.5, -0.5]);
        let p = forward(&m, &array![[1.0, 0.0]]).unwrap();
        assert!((p[[0, 0]] - 0.7310585786300049).abs() < 1e-12);
        assert!((p[[0, 1]] - 0.2689414213699951).abs() < 1e-12);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let m = init_network(&genome(6, &[(8, Activation::Sigmoid, true)], 4), 9);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let batch = Array2::from_shape_fn((32, 6), |_| rng.random_range(-3.0..3.0));
        let p = forward(&m, &batch).unwrap();
        for row in p.axis_iter(Axis(0)) {
            assert!((row.sum() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn softmax_is_stable_under_large_logits() {
        let z = array![[1000.0, 0.0], [-1000.0, -999.0]];
        let p = softmax_rows(&z);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[[0, 0]] - 1.0).abs() < 1e-12);
        assert!(p[[1, 1]] > p[[1, 0]]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let m = init_network(&genome(3, &[], 2), 0);
        let err = forward(&m, &array![[1.0, 2.0]]).unwrap_err();
        assert_eq!(err, TrainError::ShapeMismatch { expected: 3, got: 2 });
    }

    #[test]
    fn argmax_ties_break_low() {
        assert_eq!(argmax_row(&[0.5, 0.5]), 0);
        assert_eq!(argmax_row(&[0.1, 0.4, 0.4, 0.1]), 1);
        assert_eq!(argmax_row(&[0.0, 1.0]), 1);
    }

    #[test]
    fn accuracy_counts_matches() {
        let mut m = init_network(&genome(1, &[], 2), 0);
        // logits = x*W + b; W makes class 1 win for x > 0.5
        m.weights[0] = array![[-2.0, 2.0]];
        m.biases[0] = Some(array![1.0, -1.0]);
        let x = array![[0.0], [1.0], [0.4], [0.9]];
        let y = [0usize, 1, 0, 1];
        assert_eq!(accuracy(&m, &x, &y), 1.0);
        let y_bad = [1usize, 1, 0, 1];
        assert_eq!(accuracy(&m, &x, &y_bad), 0.75);
    }

    #[test]
    fn portable_text_round_trips_bitwise() {
        let m = init_network(
            &genome(3, &[(4, Activation::Tanh, false), (2, Activation::Relu, true)], 2),
            11,
        );
        let text = m.to_portable_text();
        let back = TrainedModel::from_portable_text(&text).unwrap();
        assert_eq!(m.genome, back.genome);
        assert_eq!(m.weights, back.weights);
        assert_eq!(m.biases, back.biases);
    }

    #[test]
    fn portable_text_rejects_garbage() {
        assert_eq!(
            TrainedModel::from_portable_text("not a model"),
            Err(ModelFormatError::BadHeader)
        );
        let m = init_network(&genome(2, &[], 2), 0);
        let mut text = m.to_portable_text();
        text = text.replace("softmax", "mystery");
        assert!(matches!(
            TrainedModel::from_portable_text(&text),
            Err(ModelFormatError::BadField { .. })
        ));
    }
}
