//! CART-style binary classification tree.
//!
//! Splits maximize Gini impurity decrease over candidate thresholds placed at
//! midpoints between consecutive distinct sorted feature values. Candidate
//! comparison uses exact integer arithmetic over class counts, so ties are
//! exact and the documented tie-break (lowest feature index, then lowest
//! threshold) is reproducible across implementations. Left branch takes
//! `x[feature] <= threshold`.

use crate::classifiers::{DenseData, Model, ModelKind, ModelParams, TrainingMeta};
use crate::error::Result;
use crate::features::{Dataset, Scaler};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode<F> {
    Leaf {
        /// Fraction of class-1 training rows in the leaf.
        value: F,
    },
    Split {
        feature: usize,
        threshold: F,
        left: Box<TreeNode<F>>,
        right: Box<TreeNode<F>>,
    },
}

impl<F: Scalar> TreeNode<F> {
    pub fn predict(&self, x: &[F]) -> F {
        match self {
            TreeNode::Leaf { value } => *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeHyper {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeHyper {
    fn default() -> Self {
        TreeHyper {
            max_depth: 6,
            min_leaf: 2,
        }
    }
}

impl TreeHyper {
    pub(crate) fn render(&self) -> String {
        format!("max_depth={} min_leaf={}", self.max_depth, self.min_leaf)
    }
}

/// Weighted child Gini impurity as an exact rational: for counts
/// (n, c1) split into (nl, c1l) / (nr, c1r),
/// `nl·gini_l + nr·gini_r = (nl² − c0l² − c1l²)/nl + (nr² − c0r² − c1r²)/nr`.
/// Returned as (numerator, denominator) over the common denominator nl·nr.
fn weighted_child_impurity(nl: u64, c1l: u64, nr: u64, c1r: u64) -> (u128, u128) {
    let c0l = nl - c1l;
    let c0r = nr - c1r;
    let left_num = (nl * nl - c0l * c0l - c1l * c1l) as u128;
    let right_num = (nr * nr - c0r * c0r - c1r * c1r) as u128;
    (
        left_num * nr as u128 + right_num * nl as u128,
        (nl * nr) as u128,
    )
}

/// a/b < c/d with exact integer arithmetic.
fn frac_less(a: (u128, u128), b: (u128, u128)) -> bool {
    a.0 * b.1 < b.0 * a.1
}

struct BestSplit<F> {
    feature: usize,
    threshold: F,
    impurity: (u128, u128),
}

/// Scans one feature for its best candidate and folds it into `best`.
/// Candidates are visited in ascending threshold order and replace the
/// incumbent only on strictly lower impurity, which implements the
/// (gain, lowest feature, lowest threshold) tie-break given ascending
/// feature order at the call site.
fn scan_feature<F: Scalar>(
    data: &DenseData<F>,
    indices: &[usize],
    feature: usize,
    min_leaf: usize,
    best: &mut Option<BestSplit<F>>,
) {
    let n = indices.len();
    let mut pairs: Vec<(F, u8)> = indices
        .iter()
        .map(|&i| (data.row(i)[feature], data.y[i]))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

    // prefix class-1 counts: c1_prefix[k] = #class1 among first k
    let mut c1_prefix = Vec::with_capacity(n + 1);
    c1_prefix.push(0u64);
    for &(_, y) in &pairs {
        c1_prefix.push(c1_prefix.last().unwrap() + y as u64);
    }
    let total_c1 = c1_prefix[n];

    let half = F::from_f64(0.5).unwrap();
    for boundary in 1..n {
        if pairs[boundary - 1].0 == pairs[boundary].0 {
            continue;
        }
        let threshold = (pairs[boundary - 1].0 + pairs[boundary].0) * half;
        // Partition defined by the predicate x <= threshold; with midpoint
        // rounding the boundary can shift, so recompute it.
        let nl = pairs.partition_point(|&(v, _)| v <= threshold);
        if nl == 0 || nl == n || nl < min_leaf || n - nl < min_leaf {
            continue;
        }
        let impurity = weighted_child_impurity(
            nl as u64,
            c1_prefix[nl],
            (n - nl) as u64,
            total_c1 - c1_prefix[nl],
        );
        let better = match best {
            None => true,
            Some(b) => frac_less(impurity, b.impurity),
        };
        if better {
            *best = Some(BestSplit {
                feature,
                threshold,
                impurity,
            });
        }
    }
}

/// Recursive builder shared by the plain tree and the forest. `features`
/// yields the sorted candidate feature set for each node (pre-order call
/// order), letting the forest do per-split subsampling.
pub(crate) fn build_gini_tree<F: Scalar>(
    data: &DenseData<F>,
    indices: &[usize],
    depth: usize,
    hyper: &TreeHyper,
    features: &mut dyn FnMut() -> Vec<usize>,
) -> TreeNode<F> {
    let n = indices.len() as u64;
    let c1: u64 = indices.iter().map(|&i| data.y[i] as u64).sum();
    let leaf = |c1: u64, n: u64| TreeNode::Leaf {
        value: F::from_u64(c1).unwrap() / F::from_u64(n).unwrap(),
    };
    if c1 == 0 || c1 == n || depth >= hyper.max_depth || (n as usize) < 2 * hyper.min_leaf {
        return leaf(c1, n);
    }

    let mut best: Option<BestSplit<F>> = None;
    for feature in features() {
        scan_feature(data, indices, feature, hyper.min_leaf, &mut best);
    }
    // No candidate (constant features or min_leaf exhausted) ends the branch;
    // a zero-gain argmax split is still taken, per the stopping conditions
    // (pure node, max depth, min leaf size).
    let best = match best {
        Some(b) => b,
        None => return leaf(c1, n),
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| data.row(i)[best.feature] <= best.threshold);
    let left = build_gini_tree(data, &left_idx, depth + 1, hyper, features);
    let right = build_gini_tree(data, &right_idx, depth + 1, hyper, features);
    TreeNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Trains a single CART tree on raw (unstandardized) features.
pub fn train_tree<F: Scalar>(train: &Dataset<F>, hyper: &TreeHyper, seed: u64) -> Result<Model<F>> {
    let data = DenseData::from_dataset(train)?;
    let indices: Vec<usize> = (0..data.n).collect();
    let all_features: Vec<usize> = (0..data.d).collect();
    let root = build_gini_tree(&data, &indices, 0, hyper, &mut || all_features.clone());
    Ok(Model {
        kind: ModelKind::Tree,
        params: ModelParams::Tree(root),
        scaler: Scaler::identity(data.d),
        feature_names: train.feature_names.clone(),
        meta: TrainingMeta {
            seed,
            hyper: hyper.render(),
            dataset_fingerprint: crate::classifiers::dataset_fingerprint(train),
        },
    })
}

/// Exposes the trained root split for oracle tests: (feature, threshold) or
/// `None` when the root is a leaf.
pub fn root_split<F: Scalar>(model: &Model<F>) -> Option<(usize, F)> {
    match &model.params {
        ModelParams::Tree(TreeNode::Split {
            feature, threshold, ..
        }) => Some((*feature, *threshold)),
        _ => None,
    }
}

/// Mean sample spacing not needed here; prediction accuracy helper for tests.
#[cfg(test)]
pub(crate) fn train_accuracy(model: &Model<f64>, ds: &Dataset<f64>) -> f64 {
    let m = crate::classifiers::evaluate(model, ds).unwrap();
    m.accuracy
}
