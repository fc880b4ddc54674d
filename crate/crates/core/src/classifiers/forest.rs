//! Random forest: bagged CART trees with per-split uniform feature
//! subsampling. Prediction averages the trees' leaf values. Per-tree seeds
//! are pre-derived from the master seed, so training could parallelize
//! per tree without changing the result.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifiers::tree::{build_gini_tree, TreeHyper, TreeNode};
use crate::classifiers::{
    dataset_fingerprint, DenseData, Model, ModelKind, ModelParams, TrainingMeta,
};
use crate::error::{Error, Result};
use crate::features::{Dataset, Scaler};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestHyper {
    pub tree_count: usize,
    pub max_depth: usize,
    /// Features considered per split; `None` means ⌈√d⌉.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper {
            tree_count: 50,
            max_depth: 8,
            mtry: None,
            bootstrap: true,
        }
    }
}

impl ForestHyper {
    pub(crate) fn render(&self, d: usize) -> String {
        format!(
            "tree_count={} max_depth={} mtry={} bootstrap={}",
            self.tree_count,
            self.max_depth,
            self.effective_mtry(d),
            self.bootstrap
        )
    }

    pub fn effective_mtry(&self, d: usize) -> usize {
        match self.mtry {
            Some(m) => m.clamp(1, d),
            None => (d as f64).sqrt().ceil() as usize,
        }
    }
}

fn sample_features(rng: &mut ChaCha8Rng, d: usize, mtry: usize) -> Vec<usize> {
    if mtry >= d {
        return (0..d).collect();
    }
    // partial Fisher-Yates, then sorted so the split scan keeps the
    // lowest-feature tie-break within the sampled pool
    let mut pool: Vec<usize> = (0..d).collect();
    for k in 0..mtry {
        let j = rng.random_range(k..d);
        pool.swap(k, j);
    }
    let mut chosen = pool[..mtry].to_vec();
    chosen.sort_unstable();
    chosen
}

pub fn train_forest<F: Scalar>(
    train: &Dataset<F>,
    hyper: &ForestHyper,
    seed: u64,
) -> Result<Model<F>> {
    if hyper.tree_count == 0 {
        return Err(Error::invalid("forest needs at least one tree"));
    }
    let data = DenseData::from_dataset(train)?;
    let mtry = hyper.effective_mtry(data.d);
    let tree_hyper = TreeHyper {
        max_depth: hyper.max_depth,
        min_leaf: 1,
    };

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let tree_seeds: Vec<u64> = (0..hyper.tree_count).map(|_| master.next_u64()).collect();

    let mut trees: Vec<TreeNode<F>> = Vec::with_capacity(hyper.tree_count);
    for tree_seed in tree_seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
        let indices: Vec<usize> = if hyper.bootstrap {
            (0..data.n).map(|_| rng.random_range(0..data.n)).collect()
        } else {
            (0..data.n).collect()
        };
        let root = build_gini_tree(&data, &indices, 0, &tree_hyper, &mut || {
            sample_features(&mut rng, data.d, mtry)
        });
        trees.push(root);
    }

    Ok(Model {
        kind: ModelKind::Forest,
        params: ModelParams::Forest { trees },
        scaler: Scaler::identity(data.d),
        feature_names: train.feature_names.clone(),
        meta: TrainingMeta {
            seed,
            hyper: hyper.render(data.d),
            dataset_fingerprint: dataset_fingerprint(train),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::test_support::{dataset_from_rows, simulated_dataset};
    use crate::classifiers::tree::train_tree;
    use crate::classifiers::{evaluate, predict_score, split};

    #[test]
    fn single_tree_no_bootstrap_full_features_reduces_to_tree() {
        let ds = simulated_dataset();
        let forest = train_forest(
            &ds,
            &ForestHyper {
                tree_count: 1,
                max_depth: 6,
                mtry: Some(ds.dim()),
                bootstrap: false,
            },
            3,
        )
        .unwrap();
        let tree = train_tree(
            &ds,
            &TreeHyper {
                max_depth: 6,
                min_leaf: 1,
            },
            3,
        )
        .unwrap();
        for row in &ds.rows {
            assert_eq!(
                predict_score(&forest, &row.values).unwrap(),
                predict_score(&tree, &row.values).unwrap()
            );
        }
    }

    #[test]
    fn same_seed_gives_identical_forests() {
        let ds = simulated_dataset();
        let a = train_forest(&ds, &ForestHyper::default(), 9).unwrap();
        let b = train_forest(&ds, &ForestHyper::default(), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forest_separates_simulated_regimes() {
        let ds = simulated_dataset();
        let (train, test) = split(&ds, 0.3, 42).unwrap();
        let model = train_forest(&train, &ForestHyper::default(), 42).unwrap();
        let metrics = evaluate(&model, &test).unwrap();
        assert!(metrics.accuracy >= 0.95, "accuracy {}", metrics.accuracy);
    }

    #[test]
    fn zero_trees_is_rejected() {
        let ds = dataset_from_rows(&[(vec![0.0], 0), (vec![1.0], 1)]);
        let hyper = ForestHyper {
            tree_count: 0,
            ..ForestHyper::default()
        };
        assert!(train_forest(&ds, &hyper, 1).is_err());
    }

    #[test]
    fn constant_leaf_forest_averages_leaf_values() {
        // all-identical features, 4/5 miner rows → every tree is a 0.8 leaf
        let rows: Vec<(Vec<f64>, u8)> = (0..5).map(|i| (vec![1.0], (i > 0) as u8)).collect();
        let ds = dataset_from_rows(&rows);
        let model = train_forest(
            &ds,
            &ForestHyper {
                tree_count: 7,
                max_depth: 4,
                mtry: None,
                bootstrap: false,
            },
            1,
        )
        .unwrap();
        let score = predict_score(&model, &[1.0]).unwrap();
        assert!((score - 0.8).abs() < 1e-12, "score {score}");
    }
}
