//! Finite-difference validation of the backpropagation gradients.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::net::{forward_cached, init_network};
use super::train::compute_gradients;
use super::MlpGenome;

/// Mean cross-entropy of a model on a batch, the quantity train()
/// minimizes and the scalar the finite differences probe.
fn batch_loss(model: &super::net::TrainedModel, x: &Array2<f64>, labels: &[usize]) -> f64 {
    let cache = forward_cached(model, x);
    let probs = cache.acts.last().expect("forward output");
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        loss -= probs[[i, label]].max(1e-12).ln();
    }
    loss / x.nrows() as f64
}

/// Compare backprop gradients against central finite differences (step
/// 1e-5) on random data and return the worst relative error.
///
/// The denominator is floored at 1e-3 so that parameters whose true
/// gradient is numerically zero (dead relu paths) measure their
/// difference against a fixed scale instead of amplifying rounding noise.
/// Intended for small genomes; panics above 64 parameters.
pub fn gradient_check(genome: &MlpGenome, seed: u64) -> f64 {
    assert!(genome.total_params() <= 64, "gradient_check is for small genomes");
    const H: f64 = 1e-5;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = 6;
    let x = Array2::from_shape_fn((rows, genome.input_size), |_| rng.random_range(-1.0..1.0));
    let labels: Vec<usize> = (0..rows).map(|_| rng.random_range(0..genome.output_size)).collect();

    let model = init_network(genome, seed.wrapping_add(1));
    let (d_weights, d_biases, _) = compute_gradients(&model, &x, &labels);

    let mut worst = 0.0f64;
    let mut check = |analytic: f64, perturb: &mut dyn FnMut(f64) -> f64| {
        let plus = perturb(H);
        let minus = perturb(-H);
        let numeric = (plus - minus) / (2.0 * H);
        let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-3);
        worst = worst.max(rel);
    };

    for l in 0..model.weights.len() {
        for idx in 0..model.weights[l].len() {
            let analytic = d_weights[l].as_slice().expect("contiguous")[idx];
            check(analytic, &mut |eps| {
                let mut probe = model.clone();
                probe.weights[l].as_slice_mut().expect("contiguous")[idx] += eps;
                batch_loss(&probe, &x, &labels)
            });
        }
        if let Some(bias) = &model.biases[l] {
            let db = d_biases[l].as_ref().expect("gradient mirrors model");
            for idx in 0..bias.len() {
                check(db[idx], &mut |eps| {
                    let mut probe = model.clone();
                    probe.biases[l].as_mut().expect("bias present")[idx] += eps;
                    batch_loss(&probe, &x, &labels)
                });
            }
        }
    }
    worst
}
