//! MLP genomes, concrete trained networks, and backpropagation training.
//!
//! A genome describes topology only (hidden layer widths, activations,
//! bias flags); [`init_network`] realizes it as a [`TrainedModel`] with
//! Glorot-style uniform weights, and [`train`] fits it with mini-batch
//! cross-entropy backpropagation. The classification head is always a
//! biased softmax layer and is not part of the evolvable genome.

mod gradcheck;
mod net;
mod train;

pub use gradcheck::gradient_check;
pub use net::{accuracy, forward, init_network, ModelFormatError, TrainMeta, TrainedModel};
pub use train::{kfold_accuracy, train, FoldOutcome, KfoldReport, Optimizer, TrainConfig};

use serde::{Deserialize, Serialize};

/// Hidden-layer activation choices exposed to the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative with respect to the pre-activation. The relu kink at
    /// exactly 0 takes derivative 0 by convention.
    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Option<Activation> {
        match s {
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One evolvable hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerGene {
    pub neurons: usize,
    pub activation: Activation,
    pub has_bias: bool,
}

/// Evolvable MLP description. Input and output sizes come from the
/// dataset and are never mutated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MlpGenome {
    pub input_size: usize,
    pub output_size: usize,
    pub hidden_layers: Vec<LayerGene>,
}

impl MlpGenome {
    /// Per-layer (fan_in, fan_out) pairs, classification head included.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.hidden_layers.len() + 1);
        let mut fan_in = self.input_size;
        for layer in &self.hidden_layers {
            shapes.push((fan_in, layer.neurons));
            fan_in = layer.neurons;
        }
        shapes.push((fan_in, self.output_size));
        shapes
    }

    /// Total trainable parameter count (weights plus present biases; the
    /// output layer is always biased).
    pub fn total_params(&self) -> usize {
        let mut total = 0;
        let mut fan_in = self.input_size;
        for layer in &self.hidden_layers {
            total += fan_in * layer.neurons;
            if layer.has_bias {
                total += layer.neurons;
            }
            fan_in = layer.neurons;
        }
        total + fan_in * self.output_size + self.output_size
    }

    /// Hidden neurons across all layers; the report module plots this.
    pub fn neuron_count(&self) -> usize {
        self.hidden_layers.iter().map(|l| l.neurons).sum()
    }

    /// Compact text form such as `784-64r-10` (r/s/t for the activation,
    /// an apostrophe marking a bias-free layer).
    pub fn describe(&self) -> String {
        let mut s = self.input_size.to_string();
        for layer in &self.hidden_layers {
            let act = match layer.activation {
                Activation::Relu => 'r',
                Activation::Sigmoid => 's',
                Activation::Tanh => 't',
            };
            s.push('-');
            s.push_str(&layer.neurons.to_string());
            s.push(act);
            if !layer.has_bias {
                s.push('\'');
            }
        }
        s.push('-');
        s.push_str(&self.output_size.to_string());
        s
    }
}

/// Training and evaluation failures. Training that diverges is reported
/// as data so the search can score the candidate as failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainError {
    /// Loss left the finite range during the given epoch.
    NonFiniteLoss { epoch: usize },
    /// Batch width disagrees with the genome's input size.
    ShapeMismatch { expected: usize, got: usize },
    EmptyTrainingSet,
}

impl std::fmt::Display for TrainError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainError::NonFiniteLoss { epoch } => {
                write!(f, "training loss became non-finite in epoch {}", epoch)
            }
            TrainError::ShapeMismatch { expected, got } => {
                write!(f, "batch has {} features but the genome expects {}", got, expected)
            }
            TrainError::EmptyTrainingSet => write!(f, "training set is empty"),
        }
    }
}

impl std::error::Error for TrainError {}
