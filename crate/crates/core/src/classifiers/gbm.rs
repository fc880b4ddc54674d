//! Gradient boosting on the logit scale with logistic loss.
//!
//! F₀ is the log-odds of the class-1 base rate. Each round fits a
//! depth-limited regression tree to the residuals y − σ(F) (squared-error
//! splits over midpoint thresholds, same scan order and tie-break as the
//! classification tree) and sets leaf values with a single Newton step
//! Σr / Σσ(1−σ); the learning rate scales each tree's contribution.

use crate::classifiers::tree::TreeNode;
use crate::classifiers::{
    dataset_fingerprint, sigmoid, softplus, DenseData, Model, ModelKind, ModelParams, TrainingMeta,
};
use crate::error::{Error, Result};
use crate::features::{Dataset, Scaler};
use crate::scalar::{from_usize, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct GbmHyper {
    pub rounds: usize,
    pub depth: usize,
    pub learning_rate: f64,
}

impl Default for GbmHyper {
    fn default() -> Self {
        GbmHyper {
            rounds: 100,
            depth: 3,
            learning_rate: 0.1,
        }
    }
}

impl GbmHyper {
    pub(crate) fn render(&self) -> String {
        format!(
            "rounds={} depth={} learning_rate={}",
            self.rounds, self.depth, self.learning_rate
        )
    }
}

/// Best squared-error split of `indices` on one feature: returns
/// (threshold, sse_left + sse_right). Scan order ascending, strict
/// improvement only, mirroring the classification tree's tie-break.
fn scan_regression_feature<F: Scalar>(
    data: &DenseData<F>,
    targets: &[F],
    indices: &[usize],
    feature: usize,
    best: &mut Option<(usize, F, F)>,
) {
    let n = indices.len();
    let mut pairs: Vec<(F, F)> = indices
        .iter()
        .map(|&i| (data.row(i)[feature], targets[i]))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

    let mut prefix_sum = Vec::with_capacity(n + 1);
    let mut prefix_sq = Vec::with_capacity(n + 1);
    prefix_sum.push(F::zero());
    prefix_sq.push(F::zero());
    for &(_, t) in &pairs {
        prefix_sum.push(*prefix_sum.last().unwrap() + t);
        prefix_sq.push(*prefix_sq.last().unwrap() + t * t);
    }
    let total_sum = prefix_sum[n];
    let total_sq = prefix_sq[n];

    let half = F::from_f64(0.5).unwrap();
    for boundary in 1..n {
        if pairs[boundary - 1].0 == pairs[boundary].0 {
            continue;
        }
        let threshold = (pairs[boundary - 1].0 + pairs[boundary].0) * half;
        let nl = pairs.partition_point(|&(v, _)| v <= threshold);
        if nl == 0 || nl == n {
            continue;
        }
        let nl_f = from_usize::<F>(nl);
        let nr_f = from_usize::<F>(n - nl);
        let sse_left = prefix_sq[nl] - prefix_sum[nl] * prefix_sum[nl] / nl_f;
        let sum_right = total_sum - prefix_sum[nl];
        let sse_right = (total_sq - prefix_sq[nl]) - sum_right * sum_right / nr_f;
        let sse = sse_left + sse_right;
        let better = match best {
            None => true,
            Some((_, _, b)) => sse < *b,
        };
        if better {
            *best = Some((feature, threshold, sse));
        }
    }
}

fn build_regression_tree<F: Scalar>(
    data: &DenseData<F>,
    targets: &[F],
    indices: &[usize],
    depth: usize,
    max_depth: usize,
    leaf_value: &dyn Fn(&[usize]) -> F,
) -> TreeNode<F> {
    let n = indices.len();
    let all_equal = indices.windows(2).all(|w| targets[w[0]] == targets[w[1]]);
    if n < 2 || depth >= max_depth || all_equal {
        return TreeNode::Leaf {
            value: leaf_value(indices),
        };
    }
    let mut best: Option<(usize, F, F)> = None;
    for feature in 0..data.d {
        scan_regression_feature(data, targets, indices, feature, &mut best);
    }
    let parent_sse = {
        let sum = indices.iter().fold(F::zero(), |a, &i| a + targets[i]);
        let sq = indices
            .iter()
            .fold(F::zero(), |a, &i| a + targets[i] * targets[i]);
        sq - sum * sum / from_usize::<F>(n)
    };
    let (feature, threshold) = match best {
        Some((f, t, sse)) if sse < parent_sse => (f, t),
        _ => {
            return TreeNode::Leaf {
                value: leaf_value(indices),
            }
        }
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| data.row(i)[feature] <= threshold);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(build_regression_tree(
            data,
            targets,
            &left_idx,
            depth + 1,
            max_depth,
            leaf_value,
        )),
        right: Box::new(build_regression_tree(
            data,
            targets,
            &right_idx,
            depth + 1,
            max_depth,
            leaf_value,
        )),
    }
}

fn logistic_loss<F: Scalar>(scores: &[F], y: &[u8]) -> F {
    let mut total = F::zero();
    for (&z, &label) in scores.iter().zip(y) {
        total = total + softplus(z) - F::from_u8(label).unwrap() * z;
    }
    total / from_usize(scores.len())
}

pub(crate) fn train_gbm_impl<F: Scalar>(
    train: &Dataset<F>,
    hyper: &GbmHyper,
    seed: u64,
) -> Result<(Model<F>, Vec<F>)> {
    let data = DenseData::from_dataset(train)?;
    let positives: u64 = data.y.iter().map(|&y| y as u64).sum();
    if positives == 0 || positives == data.n as u64 {
        return Err(Error::invalid("degenerate class balance"));
    }
    let p = F::from_u64(positives).unwrap() / from_usize::<F>(data.n);
    let base_score = (p / (F::one() - p)).ln();
    let lr = F::from_f64(hyper.learning_rate).unwrap();
    let tiny = F::from_f64(1e-12).unwrap();

    let mut scores = vec![base_score; data.n];
    let mut trees: Vec<TreeNode<F>> = Vec::with_capacity(hyper.rounds);
    let mut losses = Vec::with_capacity(hyper.rounds + 1);
    losses.push(logistic_loss(&scores, &data.y));

    let mut residuals = vec![F::zero(); data.n];
    let mut hessians = vec![F::zero(); data.n];
    let indices: Vec<usize> = (0..data.n).collect();

    for _ in 0..hyper.rounds {
        for i in 0..data.n {
            let prob = sigmoid(scores[i]);
            residuals[i] = F::from_u8(data.y[i]).unwrap() - prob;
            hessians[i] = prob * (F::one() - prob);
        }
        let leaf_value = |leaf_indices: &[usize]| -> F {
            let num = leaf_indices
                .iter()
                .fold(F::zero(), |a, &i| a + residuals[i]);
            let den = leaf_indices.iter().fold(F::zero(), |a, &i| a + hessians[i]);
            if den < tiny {
                F::zero()
            } else {
                num / den
            }
        };
        let tree = build_regression_tree(&data, &residuals, &indices, 0, hyper.depth, &leaf_value);
        for i in 0..data.n {
            scores[i] = scores[i] + lr * tree.predict(data.row(i));
        }
        losses.push(logistic_loss(&scores, &data.y));
        trees.push(tree);
    }

    Ok((
        Model {
            kind: ModelKind::Gbm,
            params: ModelParams::Gbm {
                base_score,
                learning_rate: lr,
                trees,
            },
            scaler: Scaler::identity(data.d),
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

pub fn train_gbm<F: Scalar>(train: &Dataset<F>, hyper: &GbmHyper, seed: u64) -> Result<Model<F>> {
    train_gbm_impl(train, hyper, seed).map(|(model, _)| model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::test_support::{dataset_from_rows, simulated_dataset};
    use crate::classifiers::{evaluate, predict_score};

    fn four_points() -> Dataset<f64> {
        dataset_from_rows(&[
            (vec![1.0], 0),
            (vec![2.0], 0),
            (vec![3.0], 1),
            (vec![4.0], 1),
        ])
    }

    #[test]
    fn zero_rounds_scores_the_base_rate() {
        let ds = dataset_from_rows(&[
            (vec![1.0], 0),
            (vec![2.0], 1),
            (vec![3.0], 1),
            (vec![4.0], 1),
        ]);
        let hyper = GbmHyper {
            rounds: 0,
            ..GbmHyper::default()
        };
        let model = train_gbm(&ds, &hyper, 0).unwrap();
        let score = predict_score(&model, &[2.5]).unwrap();
        assert!((score - 0.75).abs() < 1e-12, "score {score}");
    }

    #[test]
    fn four_point_set_reaches_perfect_accuracy() {
        let ds = four_points();
        let hyper = GbmHyper {
            rounds: 20,
            depth: 1,
            learning_rate: 0.1,
        };
        let model = train_gbm(&ds, &hyper, 0).unwrap();
        assert_eq!(evaluate(&model, &ds).unwrap().accuracy, 1.0);
    }

    #[test]
    fn matches_independent_boosting_oracle_on_four_points() {
        // With y = [0,0,1,1] on x = [1,2,3,4] every stump splits at 2.5, so
        // boosting reduces to two scalar trajectories that this oracle
        // replays directly from the update equations.
        let ds = four_points();
        let hyper = GbmHyper {
            rounds: 20,
            depth: 1,
            learning_rate: 0.1,
        };
        let model = train_gbm(&ds, &hyper, 0).unwrap();

        let sigmoid = |z: f64| 1.0 / (1.0 + (-z).exp());
        let mut f_left = 0.0f64; // log-odds of base rate 0.5
        let mut f_right = 0.0f64;
        for _ in 0..20 {
            let (pl, pr) = (sigmoid(f_left), sigmoid(f_right));
            let leaf_left = (2.0 * (0.0 - pl)) / (2.0 * pl * (1.0 - pl));
            let leaf_right = (2.0 * (1.0 - pr)) / (2.0 * pr * (1.0 - pr));
            f_left += 0.1 * leaf_left;
            f_right += 0.1 * leaf_right;
        }
        let got_left = predict_score(&model, &[1.0]).unwrap();
        let got_right = predict_score(&model, &[4.0]).unwrap();
        assert!((got_left - sigmoid(f_left)).abs() < 1e-9, "{got_left}");
        assert!((got_right - sigmoid(f_right)).abs() < 1e-9, "{got_right}");
    }

    #[test]
    fn loss_is_non_increasing_per_round_on_simulated_corpus() {
        let ds = simulated_dataset();
        let hyper = GbmHyper {
            rounds: 40,
            ..GbmHyper::default()
        };
        let (_, losses) = train_gbm_impl(&ds, &hyper, 0).unwrap();
        for pair in losses.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "loss rose: {pair:?}");
        }
    }

    #[test]
    fn single_class_training_set_is_degenerate() {
        let ds = dataset_from_rows(&[(vec![1.0], 1), (vec![2.0], 1)]);
        let err = train_gbm(&ds, &GbmHyper::default(), 0).unwrap_err();
        assert!(err.to_string().contains("degenerate class balance"));
    }
}
