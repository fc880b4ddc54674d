//! From-scratch binary classifiers over windowed telemetry features:
//! logistic regression, CART decision tree, random forest, gradient-boosted
//! trees, and a two-hidden-layer MLP, plus splitting, metrics, and a
//! versioned model file format.
//!
//! Gradient-trained kinds (logreg, mlp) standardize features with a scaler
//! fitted on training data; tree-based kinds train and predict on raw
//! features and carry an identity scaler. Either way the scaler travels
//! inside the model artifact and prediction applies it internally, so there
//! is no train/serve skew.

pub mod forest;
pub mod gbm;
pub mod logreg;
pub mod mlp;
mod model_io;
pub mod tree;

pub use forest::{train_forest, ForestHyper};
pub use gbm::{train_gbm, GbmHyper};
pub use logreg::{train_logreg, LogregHyper};
pub use mlp::{gradient_check, train_mlp, DenseLayer, MlpHyper};
pub use model_io::{load_model, parse_model, save_model, to_model_string, MODEL_MAGIC};
pub use tree::{train_tree, TreeHyper, TreeNode};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{Dataset, Scaler};
use crate::scalar::Scalar;
use crate::trace::Label;

/// Model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Logreg,
    Tree,
    Forest,
    Gbm,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Logreg,
        ModelKind::Tree,
        ModelKind::Forest,
        ModelKind::Gbm,
        ModelKind::Mlp,
    ];

    /// The four model families reported in the evaluation table.
    pub const REPORTED: [ModelKind; 4] = [
        ModelKind::Forest,
        ModelKind::Gbm,
        ModelKind::Logreg,
        ModelKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Gbm => "gbm",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(ModelKind::Logreg),
            "tree" => Ok(ModelKind::Tree),
            "forest" => Ok(ModelKind::Forest),
            "gbm" => Ok(ModelKind::Gbm),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::format(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Learned parameters, one variant per kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams<F> {
    Logreg {
        weights: Vec<F>,
        bias: F,
    },
    Tree(TreeNode<F>),
    Forest {
        trees: Vec<TreeNode<F>>,
    },
    Gbm {
        /// Log-odds of the training base rate.
        base_score: F,
        learning_rate: F,
        trees: Vec<TreeNode<F>>,
    },
    Mlp {
        layers: Vec<DenseLayer<F>>,
    },
}

/// Provenance recorded with a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub seed: u64,
    /// Space-joined `key=value` hyperparameters.
    pub hyper: String,
    /// FNV-1a fingerprint of the training dataset's CSV serialization.
    pub dataset_fingerprint: String,
}

/// A trained classifier artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<F> {
    pub kind: ModelKind,
    pub params: ModelParams<F>,
    pub scaler: Scaler<F>,
    pub feature_names: Vec<String>,
    pub meta: TrainingMeta,
}

/// Confusion counts at the decision threshold plus derived rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    /// Derives all rates from counts. Precision is 1 when no positives were
    /// predicted, recall is 1 when no positives exist, and F1 is 0 when
    /// precision + recall is 0.
    pub fn from_counts(true_pos: u64, false_pos: u64, true_neg: u64, false_neg: u64) -> Metrics {
        let total = true_pos + false_pos + true_neg + false_neg;
        let accuracy = if total == 0 {
            1.0
        } else {
            (true_pos + true_neg) as f64 / total as f64
        };
        let precision = if true_pos + false_pos == 0 {
            1.0
        } else {
            true_pos as f64 / (true_pos + false_pos) as f64
        };
        let recall = if true_pos + false_neg == 0 {
            1.0
        } else {
            true_pos as f64 / (true_pos + false_neg) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            true_pos,
            false_pos,
            true_neg,
            false_neg,
            accuracy,
            precision,
            recall,
            f1,
        }
    }
}

/// Dense row-major training matrix with 0/1 targets.
pub(crate) struct DenseData<F> {
    pub x: Vec<F>,
    pub y: Vec<u8>,
    pub n: usize,
    pub d: usize,
}

impl<F: Scalar> DenseData<F> {
    pub fn from_dataset(ds: &Dataset<F>) -> Result<DenseData<F>> {
        if ds.rows.is_empty() {
            return Err(Error::invalid("empty training set"));
        }
        let d = ds.dim();
        let mut x = Vec::with_capacity(ds.rows.len() * d);
        let mut y = Vec::with_capacity(ds.rows.len());
        for (i, row) in ds.rows.iter().enumerate() {
            if row.values.len() != d {
                return Err(Error::invalid(format!(
                    "row {i} has {} values, expected {d}",
                    row.values.len()
                )));
            }
            let label = row
                .label
                .ok_or_else(|| Error::invalid(format!("row {i} has no label")))?;
            x.extend_from_slice(&row.values);
            y.push(label.bit());
        }
        Ok(DenseData {
            x,
            y,
            n: ds.rows.len(),
            d,
        })
    }

    /// Like [`DenseData::from_dataset`] but with rows standardized by `scaler`.
    pub fn standardized(ds: &Dataset<F>, scaler: &Scaler<F>) -> Result<DenseData<F>> {
        let mut data = Self::from_dataset(ds)?;
        for row in data.x.chunks_mut(data.d) {
            let scaled = scaler.apply(row)?;
            row.copy_from_slice(&scaled);
        }
        Ok(data)
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.x[i * self.d..(i + 1) * self.d]
    }
}

/// Returns the dataset's scaler, or fits one on the spot.
pub(crate) fn scaler_for_training<F: Scalar>(train: &Dataset<F>) -> Result<Scaler<F>> {
    match &train.scaler {
        Some(s) => Ok(s.clone()),
        None => {
            let mut copy = train.clone();
            crate::features::fit_standardizer(&mut copy)?;
            Ok(copy.scaler.unwrap())
        }
    }
}

/// FNV-1a hash of the dataset's CSV serialization, as 16 hex chars.
pub fn dataset_fingerprint<F: Scalar>(ds: &Dataset<F>) -> String {
    let text = crate::features::dataset_to_csv(ds);
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

pub(crate) fn sigmoid<F: Scalar>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

/// log(1 + e^z), overflow-safe.
pub(crate) fn softplus<F: Scalar>(z: F) -> F {
    if z > F::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Stratified train/test split, deterministic for a fixed seed.
///
/// Per-class test counts use floor allocation with largest-remainder
/// distribution (ties to class 0), keeping class proportions within one row;
/// each class always retains at least one training row.
pub fn split<F: Scalar>(
    dataset: &Dataset<F>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset<F>, Dataset<F>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction {test_fraction} must be in (0, 1)"
        )));
    }
    let labels = dataset.labels()?;
    let mut class_indices: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, label) in labels.iter().enumerate() {
        class_indices[label.bit() as usize].push(i);
    }
    let (n0, n1) = (class_indices[0].len(), class_indices[1].len());
    if n0 < 2 || n1 < 2 {
        return Err(Error::invalid(format!(
            "class 0 has {n0} rows, class 1 has {n1} rows; need at least 2 rows of each class for stratification"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for indices in class_indices.iter_mut() {
        indices.shuffle(&mut rng);
    }

    let n = n0 + n1;
    let target_total = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let exact = [test_fraction * n0 as f64, test_fraction * n1 as f64];
    let mut take = [exact[0].floor() as usize, exact[1].floor() as usize];
    let mut remaining = target_total.saturating_sub(take[0] + take[1]);
    let remainder_order = if exact[0] - take[0] as f64 >= exact[1] - take[1] as f64 {
        [0usize, 1]
    } else {
        [1usize, 0]
    };
    // one unit per class per pass, so proportions stay within one row
    for &class in remainder_order.iter().chain(remainder_order.iter()) {
        if remaining == 0 {
            break;
        }
        let cap = class_indices[class].len() - 1; // keep ≥ 1 training row
        if take[class] < cap {
            take[class] += 1;
            remaining -= 1;
        }
    }
    take[0] = take[0].min(n0 - 1);
    take[1] = take[1].min(n1 - 1);

    let mut test_idx: Vec<usize> = Vec::new();
    let mut train_idx: Vec<usize> = Vec::new();
    for (class, indices) in class_indices.iter().enumerate() {
        test_idx.extend_from_slice(&indices[..take[class]]);
        train_idx.extend_from_slice(&indices[take[class]..]);
    }
    test_idx.sort_unstable();
    train_idx.sort_unstable();

    let pick = |idx: &[usize]| Dataset {
        feature_names: dataset.feature_names.clone(),
        rows: idx.iter().map(|&i| dataset.rows[i].clone()).collect(),
        scaler: None,
    };
    Ok((pick(&train_idx), pick(&test_idx)))
}

/// Scores one feature vector in [0, 1]. The model applies its own scaler.
pub fn predict_score<F: Scalar>(model: &Model<F>, values: &[F]) -> Result<F> {
    if values.len() != model.feature_names.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: model expects {} features, got {}",
            model.feature_names.len(),
            values.len()
        )));
    }
    let x = model.scaler.apply(values)?;
    Ok(match &model.params {
        ModelParams::Logreg { weights, bias } => {
            let z = weights
                .iter()
                .zip(&x)
                .fold(*bias, |acc, (&w, &v)| acc + w * v);
            sigmoid(z)
        }
        ModelParams::Tree(root) => root.predict(&x),
        ModelParams::Forest { trees } => {
            let sum = trees.iter().fold(F::zero(), |a, t| a + t.predict(&x));
            sum / crate::scalar::from_usize(trees.len().max(1))
        }
        ModelParams::Gbm {
            base_score,
            learning_rate,
            trees,
        } => {
            let logit = trees
                .iter()
                .fold(*base_score, |acc, t| acc + *learning_rate * t.predict(&x));
            sigmoid(logit)
        }
        ModelParams::Mlp { layers } => mlp::forward_score(layers, &x),
    })
}

/// Thresholded label: miner iff score ≥ threshold (ties classify positive).
pub fn predict_label<F: Scalar>(model: &Model<F>, values: &[F], threshold: F) -> Result<Label> {
    let score = predict_score(model, values)?;
    Ok(if score >= threshold {
        Label::Miner
    } else {
        Label::Benign
    })
}

/// Confusion counts over a labeled test set at threshold 0.5.
pub fn evaluate<F: Scalar>(model: &Model<F>, test: &Dataset<F>) -> Result<Metrics> {
    if test.rows.is_empty() {
        return Err(Error::invalid("empty test set"));
    }
    let half = F::from_f64(0.5).unwrap();
    let (mut tp, mut fp, mut tn, mut fnc) = (0u64, 0u64, 0u64, 0u64);
    for (i, row) in test.rows.iter().enumerate() {
        let label = row
            .label
            .ok_or_else(|| Error::invalid(format!("row {i} has no label")))?;
        let predicted = predict_label(model, &row.values, half)?;
        match (predicted.is_miner(), label.is_miner()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fnc += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, tn, fnc))
}

/// Hyperparameters for any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Hyper {
    Logreg(LogregHyper),
    Tree(TreeHyper),
    Forest(ForestHyper),
    Gbm(GbmHyper),
    Mlp(MlpHyper),
}

impl Hyper {
    pub fn default_for(kind: ModelKind) -> Hyper {
        match kind {
            ModelKind::Logreg => Hyper::Logreg(LogregHyper::default()),
            ModelKind::Tree => Hyper::Tree(TreeHyper::default()),
            ModelKind::Forest => Hyper::Forest(ForestHyper::default()),
            ModelKind::Gbm => Hyper::Gbm(GbmHyper::default()),
            ModelKind::Mlp => Hyper::Mlp(MlpHyper::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Hyper::Logreg(_) => ModelKind::Logreg,
            Hyper::Tree(_) => ModelKind::Tree,
            Hyper::Forest(_) => ModelKind::Forest,
            Hyper::Gbm(_) => ModelKind::Gbm,
            Hyper::Mlp(_) => ModelKind::Mlp,
        }
    }

    /// Applies a `key=value` override; errors on unknown keys for the kind.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::invalid(format!("invalid {what} '{value}' for key '{key}'"));
        fn parse<T: std::str::FromStr>(v: &str) -> Option<T> {
            v.trim().parse().ok()
        }
        let ok = match self {
            Hyper::Logreg(h) => match key {
                "learning_rate" => parse(value).map(|v| h.learning_rate = v).is_some(),
                "epochs" => parse(value).map(|v| h.epochs = v).is_some(),
                "l2" => parse(value).map(|v| h.l2 = v).is_some(),
                _ => return Err(Error::invalid(format!("unknown logreg key '{key}'"))),
            },
            Hyper::Tree(h) => match key {
                "max_depth" => parse(value).map(|v| h.max_depth = v).is_some(),
                "min_leaf" => parse(value).map(|v| h.min_leaf = v).is_some(),
                _ => return Err(Error::invalid(format!("unknown tree key '{key}'"))),
            },
            Hyper::Forest(h) => match key {
                "tree_count" => parse(value).map(|v| h.tree_count = v).is_some(),
                "max_depth" => parse(value).map(|v| h.max_depth = v).is_some(),
                "mtry" => parse(value).map(|v| h.mtry = Some(v)).is_some(),
                "bootstrap" => parse(value).map(|v| h.bootstrap = v).is_some(),
                _ => return Err(Error::invalid(format!("unknown forest key '{key}'"))),
            },
            Hyper::Gbm(h) => match key {
                "rounds" => parse(value).map(|v| h.rounds = v).is_some(),
                "depth" => parse(value).map(|v| h.depth = v).is_some(),
                "learning_rate" => parse(value).map(|v| h.learning_rate = v).is_some(),
                _ => return Err(Error::invalid(format!("unknown gbm key '{key}'"))),
            },
            Hyper::Mlp(h) => match key {
                "hidden1" => parse(value).map(|v| h.hidden1 = v).is_some(),
                "hidden2" => parse(value).map(|v| h.hidden2 = v).is_some(),
                "learning_rate" => parse(value).map(|v| h.learning_rate = v).is_some(),
                "epochs" => parse(value).map(|v| h.epochs = v).is_some(),
                "batch_size" => parse(value).map(|v| h.batch_size = v).is_some(),
                _ => return Err(Error::invalid(format!("unknown mlp key '{key}'"))),
            },
        };
        if !ok {
            return Err(bad("value"));
        }
        Ok(())
    }
}

/// Trains a model of the hyperparameters' kind.
pub fn train_model<F: Scalar>(train: &Dataset<F>, hyper: &Hyper, seed: u64) -> Result<Model<F>> {
    match hyper {
        Hyper::Logreg(h) => train_logreg(train, h, seed),
        Hyper::Tree(h) => train_tree(train, h, seed),
        Hyper::Forest(h) => train_forest(train, h, seed),
        Hyper::Gbm(h) => train_gbm(train, h, seed),
        Hyper::Mlp(h) => train_mlp(train, h, seed),
    }
}

/// Renders metrics rows as an aligned text table with percent values.
pub fn render_metrics_table(rows: &[(String, Metrics)]) -> String {
    let mut out = format!(
        "{:<10} {:>10} {:>10} {:>10} {:>10}\n",
        "model", "accuracy", "precision", "recall", "f1"
    );
    for (name, m) in rows {
        out.push_str(&format!(
            "{:<10} {:>10.2} {:>10.2} {:>10.2} {:>10.2}\n",
            name,
            m.accuracy * 100.0,
            m.precision * 100.0,
            m.recall * 100.0,
            m.f1 * 100.0
        ));
    }
    out
}

/// Renders metrics rows as CSV mirroring the report table columns.
pub fn render_metrics_csv(rows: &[(String, Metrics)]) -> String {
    let mut out = String::from("model,accuracy_pct,precision_pct,recall_pct,f1_pct\n");
    for (name, m) in rows {
        out.push_str(&format!(
            "{},{:.2},{:.2},{:.2},{:.2}\n",
            name,
            m.accuracy * 100.0,
            m.precision * 100.0,
            m.recall * 100.0,
            m.f1 * 100.0
        ));
    }
    out
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use test_support::*;

    #[test]
    fn metrics_all_perfect() {
        let m = Metrics::from_counts(5, 0, 5, 0);
        assert_eq!(
            (m.accuracy, m.precision, m.recall, m.f1),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn metrics_hand_formula_case() {
        let m = Metrics::from_counts(3, 1, 5, 1);
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 0.75);
        assert_eq!(m.f1, 0.75);
        assert_eq!(m.accuracy, 0.8);
    }

    #[test]
    fn metrics_edge_conventions() {
        let no_predicted_pos = Metrics::from_counts(0, 0, 4, 2);
        assert_eq!(no_predicted_pos.precision, 1.0);
        let no_actual_pos = Metrics::from_counts(0, 3, 4, 0);
        assert_eq!(no_actual_pos.recall, 1.0);
        let degenerate = Metrics::from_counts(0, 3, 0, 2);
        assert_eq!(degenerate.f1, 0.0);
    }

    #[test]
    fn split_example_five_five() {
        let mut rows = Vec::new();
        for i in 0..5 {
            rows.push((vec![i as f64, 0.0], 0));
        }
        for i in 0..5 {
            rows.push((vec![i as f64, 1.0], 1));
        }
        let ds = dataset_from_rows(&rows);
        let (train, test) = split(&ds, 0.3, 42).unwrap();
        assert_eq!(train.rows.len(), 7);
        assert_eq!(test.rows.len(), 3);
        let (tb, tm) = train.class_counts();
        assert!(tb >= 1 && tm >= 1);
        let (sb, sm) = test.class_counts();
        assert!(sb >= 1 && sm >= 1);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let ds = simulated_dataset();
        let (train_a, test_a) = split(&ds, 0.3, 7).unwrap();
        let (train_b, test_b) = split(&ds, 0.3, 7).unwrap();
        assert_eq!(train_a, train_b);
        assert_eq!(test_a, test_b);
        assert_eq!(train_a.rows.len() + test_a.rows.len(), ds.rows.len());
    }

    #[test]
    fn split_rejects_single_class() {
        let ds = dataset_from_rows(&[(vec![0.0], 0), (vec![1.0], 0), (vec![2.0], 0)]);
        let err = split(&ds, 0.3, 1).unwrap_err();
        assert!(err.to_string().contains("class 1 has 0 rows"), "{err}");
    }

    #[test]
    fn predict_dimension_mismatch_errors() {
        let ds = separable_dataset();
        let model = train_logreg(&ds, &LogregHyper::default(), 1).unwrap();
        let err = predict_score(&model, &[0.0]).unwrap_err();
        assert!(err.to_string().contains("expects 2 features, got 1"));
    }

    #[test]
    fn tie_score_classifies_positive() {
        // Zero-epoch logreg scores exactly 0.5 everywhere.
        let ds = separable_dataset();
        let hyper = LogregHyper {
            epochs: 0,
            ..LogregHyper::default()
        };
        let model = train_logreg(&ds, &hyper, 1).unwrap();
        let score = predict_score(&model, &[0.3, 0.4]).unwrap();
        assert_eq!(score, 0.5);
        assert_eq!(
            predict_label(&model, &[0.3, 0.4], 0.5).unwrap(),
            Label::Miner
        );
    }

    #[test]
    fn evaluate_empty_test_set_errors() {
        let ds = separable_dataset();
        let model = train_logreg(&ds, &LogregHyper::default(), 1).unwrap();
        let empty = Dataset::<f64> {
            feature_names: ds.feature_names.clone(),
            rows: vec![],
            scaler: None,
        };
        assert!(evaluate(&model, &empty).is_err());
    }

    proptest! {
        #[test]
        fn metrics_identities_hold(
            tp in 0u64..1000, fp in 0u64..1000, tn in 0u64..1000, fnc in 0u64..1000,
        ) {
            prop_assume!(tp + fp + tn + fnc > 0);
            let m = Metrics::from_counts(tp, fp, tn, fnc);
            let total = (tp + fp + tn + fnc) as f64;
            prop_assert!((m.accuracy - (tp + tn) as f64 / total).abs() < 1e-12);
            let p = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
            let r = if tp + fnc == 0 { 1.0 } else { tp as f64 / (tp + fnc) as f64 };
            prop_assert!((m.precision - p).abs() < 1e-12);
            prop_assert!((m.recall - r).abs() < 1e-12);
            let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            prop_assert!((m.f1 - f1).abs() < 1e-12);
        }

        #[test]
        fn raising_threshold_never_raises_recall_or_false_positives(
            scored in prop::collection::vec((0.0f64..1.0, prop::bool::ANY), 1..60),
            t1 in 0.0f64..1.0,
            t2 in 0.0f64..1.0,
        ) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let confusion = |thr: f64| {
                let mut tp = 0u64; let mut fp = 0u64; let mut tn = 0u64; let mut fnc = 0u64;
                for &(score, positive) in &scored {
                    match (score >= thr, positive) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, false) => tn += 1,
                        (false, true) => fnc += 1,
                    }
                }
                (Metrics::from_counts(tp, fp, tn, fnc), fp)
            };
            let (m_lo, fp_lo) = confusion(lo);
            let (m_hi, fp_hi) = confusion(hi);
            prop_assert!(fp_hi <= fp_lo);
            // recall is 1.0 by convention when no positives exist; skip those
            if scored.iter().any(|&(_, p)| p) {
                prop_assert!(m_hi.recall <= m_lo.recall + 1e-12);
            }
        }
    }
}
