//! L2-regularized logistic regression trained by full-batch gradient
//! descent on standardized features. Weights start at zero, so an untrained
//! model scores 0.5 everywhere.

use crate::classifiers::{
    dataset_fingerprint, scaler_for_training, sigmoid, softplus, DenseData, Model, ModelKind,
    ModelParams, TrainingMeta,
};
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::scalar::{from_usize, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct LogregHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty on weights (bias excluded).
    pub l2: f64,
}

impl Default for LogregHyper {
    fn default() -> Self {
        LogregHyper {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

impl LogregHyper {
    pub(crate) fn render(&self) -> String {
        format!(
            "learning_rate={} epochs={} l2={}",
            self.learning_rate, self.epochs, self.l2
        )
    }
}

fn mean_loss<F: Scalar>(data: &DenseData<F>, weights: &[F], bias: F, l2: F) -> F {
    let mut total = F::zero();
    for i in 0..data.n {
        let z = data
            .row(i)
            .iter()
            .zip(weights)
            .fold(bias, |acc, (&v, &w)| acc + w * v);
        let y = F::from_u8(data.y[i]).unwrap();
        total = total + softplus(z) - y * z;
    }
    let half = F::from_f64(0.5).unwrap();
    let penalty = weights.iter().fold(F::zero(), |a, &w| a + w * w) * l2 * half;
    total / from_usize(data.n) + penalty
}

pub(crate) fn train_logreg_impl<F: Scalar>(
    train: &Dataset<F>,
    hyper: &LogregHyper,
    seed: u64,
) -> Result<(Model<F>, Vec<F>)> {
    let scaler = scaler_for_training(train)?;
    let data = DenseData::standardized(train, &scaler)?;
    let lr = F::from_f64(hyper.learning_rate).unwrap();
    let l2 = F::from_f64(hyper.l2).unwrap();
    let n = from_usize::<F>(data.n);

    let mut weights = vec![F::zero(); data.d];
    let mut bias = F::zero();
    let mut losses = Vec::with_capacity(hyper.epochs);

    for epoch in 0..hyper.epochs {
        let mut grad_w = vec![F::zero(); data.d];
        let mut grad_b = F::zero();
        for i in 0..data.n {
            let row = data.row(i);
            let z = row
                .iter()
                .zip(&weights)
                .fold(bias, |acc, (&v, &w)| acc + w * v);
            let err = sigmoid(z) - F::from_u8(data.y[i]).unwrap();
            for (g, &v) in grad_w.iter_mut().zip(row) {
                *g = *g + err * v;
            }
            grad_b = grad_b + err;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w = *w - lr * (*g / n + l2 * *w);
        }
        bias = bias - lr * (grad_b / n);

        let loss = mean_loss(&data, &weights, bias, l2);
        if !loss.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite loss at epoch {epoch}; use a smaller learning rate"
            )));
        }
        losses.push(loss);
    }

    Ok((
        Model {
            kind: ModelKind::Logreg,
            params: ModelParams::Logreg { weights, bias },
            scaler,
            feature_names: train.feature_names.clone(),
            meta: TrainingMeta {
                seed,
                hyper: hyper.render(),
                dataset_fingerprint: dataset_fingerprint(train),
            },
        },
        losses,
    ))
}

pub fn train_logreg<F: Scalar>(
    train: &Dataset<F>,
    hyper: &LogregHyper,
    seed: u64,
) -> Result<Model<F>> {
    train_logreg_impl(train, hyper, seed).map(|(model, _)| model)
}
