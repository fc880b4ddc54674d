//! Two-hidden-layer perceptron: d → h1 → h2 → 1 with rectified-linear hidden
//! activations and a sigmoid output, trained with mini-batch SGD on binary
//! cross-entropy. Weight init is uniform ±√(6/(fan_in+fan_out)) from the
//! seeded RNG (row-major draw order, biases zero), so training is
//! deterministic given seed and batch order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifiers::{
    dataset_fingerprint, scaler_for_training, sigmoid, softplus, DenseData, Model, ModelKind,
    ModelParams, TrainingMeta,
};
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::scalar::{from_usize, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpHyper {
    pub hidden1: usize,
    pub hidden2: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpHyper {
    fn default() -> Self {
        MlpHyper {
            hidden1: 16,
            hidden2: 8,
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 32,
        }
    }
}

impl MlpHyper {
    pub(crate) fn render(&self) -> String {
        format!(
            "hidden1={} hidden2={} learning_rate={} epochs={} batch_size={}",
            self.hidden1, self.hidden2, self.learning_rate, self.epochs, self.batch_size
        )
    }

    fn validate(&self) -> Result<()> {
        if self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        Ok(())
    }
}

/// Fully-connected layer; `weights[o * in_dim + i]` connects input i to
/// output o.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<F> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<F>,
    pub biases: Vec<F>,
}

impl<F: Scalar> DenseLayer<F> {
    fn zeros(in_dim: usize, out_dim: usize) -> DenseLayer<F> {
        DenseLayer {
            in_dim,
            out_dim,
            weights: vec![F::zero(); in_dim * out_dim],
            biases: vec![F::zero(); out_dim],
        }
    }

    fn glorot(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> DenseLayer<F> {
        let bound = F::from_f64((6.0 / (in_dim + out_dim) as f64).sqrt()).unwrap();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        DenseLayer {
            in_dim,
            out_dim,
            weights,
            biases: vec![F::zero(); out_dim],
        }
    }

    fn affine(&self, input: &[F]) -> Vec<F> {
        let mut out = Vec::with_capacity(self.out_dim);
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let z = row
                .iter()
                .zip(input)
                .fold(self.biases[o], |acc, (&w, &v)| acc + w * v);
            out.push(z);
        }
        out
    }
}

fn relu<F: Scalar>(z: &[F]) -> Vec<F> {
    z.iter().map(|&v| v.max(F::zero())).collect()
}

struct ForwardPass<F> {
    /// Pre-activations per layer.
    zs: Vec<Vec<F>>,
    /// acts[0] is the input; acts[k] is the activation after layer k-1.
    acts: Vec<Vec<F>>,
}

fn forward<F: Scalar>(layers: &[DenseLayer<F>], x: &[F]) -> ForwardPass<F> {
    let mut zs = Vec::with_capacity(layers.len());
    let mut acts = Vec::with_capacity(layers.len() + 1);
    acts.push(x.to_vec());
    for (k, layer) in layers.iter().enumerate() {
        let z = layer.affine(acts.last().unwrap());
        let act = if k + 1 == layers.len() {
            z.clone() // output layer stays linear; sigmoid applied on top
        } else {
            relu(&z)
        };
        zs.push(z);
        acts.push(act);
    }
    ForwardPass { zs, acts }
}

/// Score in [0, 1] for a standardized input.
pub(crate) fn forward_score<F: Scalar>(layers: &[DenseLayer<F>], x: &[F]) -> F {
    let pass = forward(layers, x);
    sigmoid(pass.zs.last().unwrap()[0])
}

/// Mean BCE loss and mean gradients over the given rows.
fn loss_and_grads<F: Scalar>(
    layers: &[DenseLayer<F>],
    data: &DenseData<F>,
    indices: &[usize],
) -> (F, Vec<DenseLayer<F>>) {
    let mut grads: Vec<DenseLayer<F>> = layers
        .iter()
        .map(|l| DenseLayer::zeros(l.in_dim, l.out_dim))
        .collect();
    let mut loss = F::zero();

    for &i in indices {
        let x = data.row(i);
        let y = F::from_u8(data.y[i]).unwrap();
        let pass = forward(layers, x);
        let logit = pass.zs.last().unwrap()[0];
        loss = loss + softplus(logit) - y * logit;

        // dL/dlogit = σ(z) − y
        let mut delta = vec![sigmoid(logit) - y];
        for k in (0..layers.len()).rev() {
            let input = &pass.acts[k];
            for o in 0..layers[k].out_dim {
                let g_row = &mut grads[k].weights[o * layers[k].in_dim..(o + 1) * layers[k].in_dim];
                for (g, &v) in g_row.iter_mut().zip(input.iter()) {
                    *g = *g + delta[o] * v;
                }
                grads[k].biases[o] = grads[k].biases[o] + delta[o];
            }
            if k > 0 {
                let mut prev = vec![F::zero(); layers[k].in_dim];
                for o in 0..layers[k].out_dim {
                    let row = &layers[k].weights[o * layers[k].in_dim..(o + 1) * layers[k].in_dim];
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p = *p + delta[o] * w;
                    }
                }
                for (p, &z) in prev.iter_mut().zip(&pass.zs[k - 1]) {
                    if z <= F::zero() {
                        *p = F::zero();
                    }
                }
                delta = prev;
            }
        }
    }

    let scale = from_usize::<F>(indices.len());
    for g in grads.iter_mut() {
        for w in g.weights.iter_mut() {
            *w = *w / scale;
        }
        for b in g.biases.iter_mut() {
            *b = *b / scale;
        }
    }
    (loss / scale, grads)
}

fn init_layers<F: Scalar>(dims: [usize; 4], rng: &mut ChaCha8Rng) -> Vec<DenseLayer<F>> {
    (0..3)
        .map(|k| DenseLayer::glorot(dims[k], dims[k + 1], rng))
        .collect()
}

pub fn train_mlp<F: Scalar>(train: &Dataset<F>, hyper: &MlpHyper, seed: u64) -> Result<Model<F>> {
    hyper.validate()?;
    let scaler = scaler_for_training(train)?;
    let data = DenseData::standardized(train, &scaler)?;
    let lr = F::from_f64(hyper.learning_rate).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = init_layers([data.d, hyper.hidden1, hyper.hidden2, 1], &mut rng);
    let mut order: Vec<usize> = (0..data.n).collect();

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = F::zero();
        let mut batches = 0usize;
        for batch in order.chunks(hyper.batch_size) {
            let (loss, grads) = loss_and_grads(&layers, &data, batch);
            epoch_loss = epoch_loss + loss;
            batches += 1;
            for (layer, grad) in layers.iter_mut().zip(&grads) {
                for (w, &g) in layer.weights.iter_mut().zip(&grad.weights) {
                    *w = *w - lr * g;
                }
                for (b, &g) in layer.biases.iter_mut().zip(&grad.biases) {
                    *b = *b - lr * g;
                }
            }
        }
        let mean_loss = epoch_loss / from_usize::<F>(batches.max(1));
        if !mean_loss.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite loss at epoch {epoch}; use a smaller learning rate"
            )));
        }
    }

    Ok(Model {
        kind: ModelKind::Mlp,
        params: ModelParams::Mlp { layers },
        scaler,
        feature_names: train.feature_names.clone(),
        meta: TrainingMeta {
            seed,
            hyper: hyper.render(),
            dataset_fingerprint: dataset_fingerprint(train),
        },
    })
}

/// Verifies backpropagation against central finite differences at the seeded
/// initialization: returns the maximum relative error
/// |analytic − numeric| / max(|analytic| + |numeric|, 1e-5) over every weight
/// and bias.
pub fn gradient_check<F: Scalar>(
    train: &Dataset<F>,
    hyper: &MlpHyper,
    seed: u64,
    epsilon: F,
) -> Result<F> {
    hyper.validate()?;
    let scaler = scaler_for_training(train)?;
    let data = DenseData::standardized(train, &scaler)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = init_layers([data.d, hyper.hidden1, hyper.hidden2, 1], &mut rng);
    let indices: Vec<usize> = (0..data.n).collect();

    let (_, analytic) = loss_and_grads(&layers, &data, &indices);
    let loss_of = |layers: &[DenseLayer<F>]| -> F {
        let mut total = F::zero();
        for &i in &indices {
            let x = data.row(i);
            let y = F::from_u8(data.y[i]).unwrap();
            let pass = forward(layers, x);
            let z = pass.zs.last().unwrap()[0];
            total = total + softplus(z) - y * z;
        }
        total / from_usize::<F>(indices.len())
    };

    let floor = F::from_f64(1e-5).unwrap();
    let two = F::from_f64(2.0).unwrap();
    let mut max_rel = F::zero();
    let mut probe = layers.clone();
    for k in 0..layers.len() {
        let param_count = layers[k].weights.len() + layers[k].biases.len();
        for p in 0..param_count {
            let read = |layers: &[DenseLayer<F>]| {
                if p < layers[k].weights.len() {
                    layers[k].weights[p]
                } else {
                    layers[k].biases[p - layers[k].weights.len()]
                }
            };
            let write = |layers: &mut [DenseLayer<F>], v: F| {
                if p < layers[k].weights.len() {
                    layers[k].weights[p] = v;
                } else {
                    let off = layers[k].weights.len();
                    layers[k].biases[p - off] = v;
                }
            };
            let original = read(&probe);
            write(&mut probe, original + epsilon);
            let plus = loss_of(&probe);
            write(&mut probe, original - epsilon);
            let minus = loss_of(&probe);
            write(&mut probe, original);

            let numeric = (plus - minus) / (two * epsilon);
            let analytic_g = read(&analytic);
            let rel = (analytic_g - numeric).abs() / (analytic_g.abs() + numeric.abs()).max(floor);
            max_rel = max_rel.max(rel);
        }
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::test_support::{dataset_from_rows, separable_dataset};
    use crate::classifiers::{evaluate, predict_score};
    use rand::RngCore;

    fn small_random_dataset(rows: usize, dim: usize, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<(Vec<f64>, u8)> = (0..rows)
            .map(|_| {
                let values = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                (values, (rng.next_u64() % 2) as u8)
            })
            .collect();
        dataset_from_rows(&rows)
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let ds = small_random_dataset(5, 4, 12);
        let max_rel = gradient_check(&ds, &MlpHyper::default(), 3, 1e-5).unwrap();
        assert!(max_rel < 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn gradient_check_holds_across_seeds() {
        for seed in 0..5 {
            let ds = small_random_dataset(6, 3, 100 + seed);
            let max_rel = gradient_check(&ds, &MlpHyper::default(), seed, 1e-5).unwrap();
            assert!(max_rel < 1e-4, "seed {seed}: {max_rel}");
        }
    }

    #[test]
    fn zero_epoch_model_is_reproducible_from_seed() {
        let ds = separable_dataset();
        let hyper = MlpHyper {
            epochs: 0,
            ..MlpHyper::default()
        };
        let a = train_mlp(&ds, &hyper, 21).unwrap();
        let b = train_mlp(&ds, &hyper, 21).unwrap();
        assert_eq!(a, b);
        let score = predict_score(&a, &[0.5, 0.5]).unwrap();
        assert_eq!(score, predict_score(&b, &[0.5, 0.5]).unwrap());
    }

    #[test]
    fn separable_toy_set_reaches_perfect_train_accuracy() {
        let ds = separable_dataset();
        let model = train_mlp(&ds, &MlpHyper::default(), 7).unwrap();
        assert_eq!(evaluate(&model, &ds).unwrap().accuracy, 1.0);
    }

    #[test]
    fn exploding_learning_rate_reports_non_finite_loss() {
        let ds = separable_dataset();
        let hyper = MlpHyper {
            learning_rate: 1e120,
            epochs: 8,
            ..MlpHyper::default()
        };
        let err = train_mlp(&ds, &hyper, 7).unwrap_err();
        assert!(err.to_string().contains("non-finite loss"), "{err}");
    }

    #[test]
    fn training_is_deterministic() {
        let ds = separable_dataset();
        let hyper = MlpHyper {
            epochs: 20,
            ..MlpHyper::default()
        };
        let a = train_mlp(&ds, &hyper, 5).unwrap();
        let b = train_mlp(&ds, &hyper, 5).unwrap();
        assert_eq!(a, b);
    }
}
