//! Versioned, self-describing text format for trained models.
//!
//! Numbers are written as shortest round-trip decimals, so a loaded model
//! predicts bit-identically to the one saved. Trees are stored as preorder
//! node lists with explicit child indices.

use std::path::Path;

use crate::classifiers::{DenseLayer, Model, ModelKind, ModelParams, TrainingMeta, TreeNode};
use crate::error::{Error, Result};
use crate::features::Scaler;
use crate::scalar::{parse_scalar, Scalar};

pub const MODEL_MAGIC: &str = "GPUSENTINEL-MODEL v1";

fn write_tree_nodes<F: Scalar>(node: &TreeNode<F>, lines: &mut Vec<String>) -> usize {
    let idx = lines.len();
    lines.push(String::new());
    match node {
        TreeNode::Leaf { value } => lines[idx] = format!("leaf {value}"),
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let li = write_tree_nodes(left, lines);
            let ri = write_tree_nodes(right, lines);
            lines[idx] = format!("split {feature} {threshold} {li} {ri}");
        }
    }
    idx
}

fn push_tree_block<F: Scalar>(out: &mut String, index: usize, root: &TreeNode<F>) {
    let mut lines = Vec::new();
    write_tree_nodes(root, &mut lines);
    out.push_str(&format!("tree {index} nodes = {}\n", lines.len()));
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
}

fn csv_row<F: Scalar>(values: &[F]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Serializes a model to its canonical text form.
pub fn to_model_string<F: Scalar>(model: &Model<F>) -> Result<String> {
    let mut out = String::new();
    out.push_str(MODEL_MAGIC);
    out.push('\n');
    out.push_str("[info]\n");
    out.push_str(&format!("kind = {}\n", model.kind));
    out.push_str(&format!("seed = {}\n", model.meta.seed));
    out.push_str(&format!(
        "fingerprint = {}\n",
        model.meta.dataset_fingerprint
    ));
    out.push_str("[hyper]\n");
    for pair in model.meta.hyper.split_whitespace() {
        match pair.split_once('=') {
            Some((k, v)) => out.push_str(&format!("{k} = {v}\n")),
            None => return Err(Error::invalid(format!("malformed hyper entry '{pair}'"))),
        }
    }
    out.push_str("[features]\n");
    if model.feature_names.len() != model.scaler.len() {
        return Err(Error::invalid(format!(
            "{} feature names but scaler of dimension {}",
            model.feature_names.len(),
            model.scaler.len()
        )));
    }
    for (name, (mean, std)) in model
        .feature_names
        .iter()
        .zip(model.scaler.means.iter().zip(&model.scaler.stds))
    {
        if name.contains(',') || name.contains('\n') {
            return Err(Error::invalid(format!(
                "feature name '{name}' not storable"
            )));
        }
        out.push_str(&format!("{name},{mean},{std}\n"));
    }
    out.push_str("[params]\n");
    match &model.params {
        ModelParams::Logreg { weights, bias } => {
            out.push_str(&format!("bias = {bias}\n"));
            out.push_str(&format!("weights = {}\n", csv_row(weights)));
        }
        ModelParams::Tree(root) => {
            let mut lines = Vec::new();
            write_tree_nodes(root, &mut lines);
            out.push_str(&format!("nodes = {}\n", lines.len()));
            for line in lines {
                out.push_str(&line);
                out.push('\n');
            }
        }
        ModelParams::Forest { trees } => {
            out.push_str(&format!("trees = {}\n", trees.len()));
            for (i, tree) in trees.iter().enumerate() {
                push_tree_block(&mut out, i, tree);
            }
        }
        ModelParams::Gbm {
            base_score,
            learning_rate,
            trees,
        } => {
            out.push_str(&format!("base_score = {base_score}\n"));
            out.push_str(&format!("learning_rate = {learning_rate}\n"));
            out.push_str(&format!("trees = {}\n", trees.len()));
            for (i, tree) in trees.iter().enumerate() {
                push_tree_block(&mut out, i, tree);
            }
        }
        ModelParams::Mlp { layers } => {
            out.push_str(&format!("layers = {}\n", layers.len()));
            for (i, layer) in layers.iter().enumerate() {
                out.push_str(&format!("layer {i} {} {}\n", layer.out_dim, layer.in_dim));
                for o in 0..layer.out_dim {
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    out.push_str(&csv_row(row));
                    out.push('\n');
                }
                out.push_str(&format!("bias = {}\n", csv_row(&layer.biases)));
            }
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Cursor<'a> {
        Cursor {
            lines: text
                .lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l))
                .filter(|(_, l)| !l.trim().is_empty())
                .collect(),
            pos: 0,
        }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        let item = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::format("unexpected end of model file"))?;
        self.pos += 1;
        Ok(item)
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|&(_, l)| l)
    }

    fn expect(&mut self, literal: &str) -> Result<()> {
        let (line_no, line) = self.next()?;
        if line != literal {
            return Err(Error::parse(line_no, format!("expected '{literal}'")));
        }
        Ok(())
    }

    fn key_value(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (line_no, line) = self.next()?;
        match line.split_once('=') {
            Some((k, v)) if k.trim() == key => Ok((line_no, v.trim())),
            _ => Err(Error::parse(line_no, format!("expected '{key} = ...'"))),
        }
    }
}

fn parse_number<F: Scalar>(text: &str, line_no: usize) -> Result<F> {
    parse_scalar(text).ok_or_else(|| Error::parse(line_no, format!("invalid number '{text}'")))
}

fn parse_csv_numbers<F: Scalar>(text: &str, line_no: usize) -> Result<Vec<F>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(|f| parse_number(f, line_no)).collect()
}

enum ProtoNode<F> {
    Leaf(F),
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
}

fn parse_tree_nodes<F: Scalar>(cursor: &mut Cursor<'_>, count: usize) -> Result<TreeNode<F>> {
    let mut protos = Vec::with_capacity(count);
    for _ in 0..count {
        let (line_no, line) = cursor.next()?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["leaf", value] => protos.push(ProtoNode::Leaf(parse_number(value, line_no)?)),
            ["split", feature, threshold, left, right] => {
                let parse_idx = |s: &str| -> Result<usize> {
                    s.parse()
                        .map_err(|_| Error::parse(line_no, format!("invalid node index '{s}'")))
                };
                protos.push(ProtoNode::Split {
                    feature: parse_idx(feature)?,
                    threshold: parse_number(threshold, line_no)?,
                    left: parse_idx(left)?,
                    right: parse_idx(right)?,
                });
            }
            _ => return Err(Error::parse(line_no, format!("invalid node line '{line}'"))),
        }
    }

    fn build<F: Scalar>(
        protos: &[ProtoNode<F>],
        idx: usize,
        visited: &mut [bool],
    ) -> Result<TreeNode<F>> {
        let proto = protos
            .get(idx)
            .ok_or_else(|| Error::format(format!("node index {idx} out of range")))?;
        if visited[idx] {
            return Err(Error::format(format!("node {idx} referenced twice")));
        }
        visited[idx] = true;
        Ok(match proto {
            ProtoNode::Leaf(value) => TreeNode::Leaf { value: *value },
            ProtoNode::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeNode::Split {
                feature: *feature,
                threshold: *threshold,
                left: Box::new(build(protos, *left, visited)?),
                right: Box::new(build(protos, *right, visited)?),
            },
        })
    }

    let mut visited = vec![false; protos.len()];
    build(&protos, 0, &mut visited)
}

fn parse_tree_block<F: Scalar>(
    cursor: &mut Cursor<'_>,
    expected_index: usize,
) -> Result<TreeNode<F>> {
    let (line_no, line) = cursor.next()?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        ["tree", idx, "nodes", "=", count] => {
            if idx.parse::<usize>().ok() != Some(expected_index) {
                return Err(Error::parse(
                    line_no,
                    format!("expected tree {expected_index}"),
                ));
            }
            let count: usize = count
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid node count '{count}'")))?;
            parse_tree_nodes(cursor, count)
        }
        _ => Err(Error::parse(
            line_no,
            format!("expected 'tree {expected_index} nodes = N'"),
        )),
    }
}

/// Parses the canonical model text form.
pub fn parse_model<F: Scalar>(text: &str) -> Result<Model<F>> {
    let mut cursor = Cursor::new(text);
    let (_, magic) = cursor.next()?;
    if magic != MODEL_MAGIC {
        if magic.starts_with("GPUSENTINEL-MODEL") {
            return Err(Error::format(format!("unsupported version '{magic}'")));
        }
        return Err(Error::format("not a model file"));
    }

    cursor.expect("[info]")?;
    let (kind_line, kind_text) = cursor.key_value("kind")?;
    let kind: ModelKind = kind_text
        .parse()
        .map_err(|_| Error::parse(kind_line, format!("unknown model kind '{kind_text}'")))?;
    let (seed_line, seed_text) = cursor.key_value("seed")?;
    let seed: u64 = seed_text
        .parse()
        .map_err(|_| Error::parse(seed_line, format!("invalid seed '{seed_text}'")))?;
    let (_, fingerprint) = cursor.key_value("fingerprint")?;
    let fingerprint = fingerprint.to_string();

    cursor.expect("[hyper]")?;
    let mut hyper_pairs = Vec::new();
    while let Some(line) = cursor.peek() {
        if line == "[features]" {
            break;
        }
        let (line_no, line) = cursor.next()?;
        let (k, v) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::parse(line_no, "expected 'key = value'"))?;
        hyper_pairs.push(format!("{k}={v}"));
    }

    cursor.expect("[features]")?;
    let mut feature_names = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    while let Some(line) = cursor.peek() {
        if line == "[params]" {
            break;
        }
        let (line_no, line) = cursor.next()?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(line_no, "expected 'name,mean,std'"));
        }
        feature_names.push(fields[0].to_string());
        means.push(parse_number(fields[1], line_no)?);
        stds.push(parse_number(fields[2], line_no)?);
    }
    let scaler = Scaler { means, stds };

    cursor.expect("[params]")?;
    let params = match kind {
        ModelKind::Logreg => {
            let (line_no, bias) = cursor.key_value("bias")?;
            let bias = parse_number(bias, line_no)?;
            let (line_no, weights) = cursor.key_value("weights")?;
            let weights = parse_csv_numbers(weights, line_no)?;
            ModelParams::Logreg { weights, bias }
        }
        ModelKind::Tree => {
            let (line_no, count) = cursor.key_value("nodes")?;
            let count: usize = count
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid node count '{count}'")))?;
            ModelParams::Tree(parse_tree_nodes(&mut cursor, count)?)
        }
        ModelKind::Forest => {
            let (line_no, count) = cursor.key_value("trees")?;
            let count: usize = count
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid tree count '{count}'")))?;
            let trees = (0..count)
                .map(|i| parse_tree_block(&mut cursor, i))
                .collect::<Result<Vec<_>>>()?;
            ModelParams::Forest { trees }
        }
        ModelKind::Gbm => {
            let (line_no, base) = cursor.key_value("base_score")?;
            let base_score = parse_number(base, line_no)?;
            let (line_no, lr) = cursor.key_value("learning_rate")?;
            let learning_rate = parse_number(lr, line_no)?;
            let (line_no, count) = cursor.key_value("trees")?;
            let count: usize = count
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid tree count '{count}'")))?;
            let trees = (0..count)
                .map(|i| parse_tree_block(&mut cursor, i))
                .collect::<Result<Vec<_>>>()?;
            ModelParams::Gbm {
                base_score,
                learning_rate,
                trees,
            }
        }
        ModelKind::Mlp => {
            let (line_no, count) = cursor.key_value("layers")?;
            let count: usize = count
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid layer count '{count}'")))?;
            let mut layers = Vec::with_capacity(count);
            for i in 0..count {
                let (line_no, line) = cursor.next()?;
                let fields: Vec<&str> = line.split_whitespace().collect();
                let (out_dim, in_dim) = match fields.as_slice() {
                    ["layer", idx, out_dim, in_dim] if idx.parse::<usize>().ok() == Some(i) => {
                        let parse_dim = |s: &str| -> Result<usize> {
                            s.parse()
                                .map_err(|_| Error::parse(line_no, format!("invalid dim '{s}'")))
                        };
                        (parse_dim(out_dim)?, parse_dim(in_dim)?)
                    }
                    _ => {
                        return Err(Error::parse(
                            line_no,
                            format!("expected 'layer {i} <out> <in>'"),
                        ))
                    }
                };
                let mut weights = Vec::with_capacity(out_dim * in_dim);
                for _ in 0..out_dim {
                    let (row_line, row) = cursor.next()?;
                    let row = parse_csv_numbers::<F>(row, row_line)?;
                    if row.len() != in_dim {
                        return Err(Error::parse(
                            row_line,
                            format!("expected {in_dim} weights, found {}", row.len()),
                        ));
                    }
                    weights.extend(row);
                }
                let (bias_line, bias) = cursor.key_value("bias")?;
                let biases = parse_csv_numbers::<F>(bias, bias_line)?;
                if biases.len() != out_dim {
                    return Err(Error::parse(
                        bias_line,
                        format!("expected {out_dim} biases, found {}", biases.len()),
                    ));
                }
                layers.push(DenseLayer {
                    in_dim,
                    out_dim,
                    weights,
                    biases,
                });
            }
            ModelParams::Mlp { layers }
        }
    };

    Ok(Model {
        kind,
        params,
        scaler,
        feature_names,
        meta: TrainingMeta {
            seed,
            hyper: hyper_pairs.join(" "),
            dataset_fingerprint: fingerprint,
        },
    })
}

pub fn save_model<F: Scalar>(model: &Model<F>, path: &Path) -> Result<()> {
    let text = to_model_string(model)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model<F: Scalar>(path: &Path) -> Result<Model<F>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::test_support::simulated_dataset;
    use crate::classifiers::{
        predict_score, split, train_forest, train_gbm, train_logreg, train_mlp, train_model,
        train_tree, ForestHyper, GbmHyper, Hyper, LogregHyper, MlpHyper, TreeHyper,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_kind_round_trips_with_identical_predictions() {
        let ds = simulated_dataset();
        let (train, _) = split(&ds, 0.3, 1).unwrap();
        let small_forest = ForestHyper {
            tree_count: 5,
            ..ForestHyper::default()
        };
        let small_gbm = GbmHyper {
            rounds: 10,
            ..GbmHyper::default()
        };
        let small_mlp = MlpHyper {
            epochs: 5,
            ..MlpHyper::default()
        };
        let models = vec![
            train_logreg(&train, &LogregHyper::default(), 3).unwrap(),
            train_tree(&train, &TreeHyper::default(), 3).unwrap(),
            train_forest(&train, &small_forest, 3).unwrap(),
            train_gbm(&train, &small_gbm, 3).unwrap(),
            train_mlp(&train, &small_mlp, 3).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for model in models {
            let text = to_model_string(&model).unwrap();
            let back: Model<f64> = parse_model(&text).unwrap();
            assert_eq!(model, back);
            for _ in 0..100 {
                let v: Vec<f64> = (0..ds.dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
                assert_eq!(
                    predict_score(&model, &v).unwrap(),
                    predict_score(&back, &v).unwrap()
                );
            }
            assert_eq!(text, to_model_string(&back).unwrap());
        }
    }

    #[test]
    fn round_trip_through_disk() {
        let ds = simulated_dataset();
        let model = train_tree(&ds, &TreeHyper::default(), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.model");
        save_model(&model, &path).unwrap();
        let back: Model<f64> = load_model(&path).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let text = "GPUSENTINEL-MODEL v1\n[info]\nkind = svm\nseed = 0\nfingerprint = x\n[hyper]\n[features]\n[params]\n";
        let err = parse_model::<f64>(text).unwrap_err();
        assert!(
            err.to_string().contains("unknown model kind 'svm'"),
            "{err}"
        );
    }

    #[test]
    fn unsupported_version_is_rejected() {
        let err = parse_model::<f64>("GPUSENTINEL-MODEL v9\n").unwrap_err();
        assert!(err.to_string().contains("unsupported version"));
    }

    #[test]
    fn corrupted_node_line_is_rejected() {
        let ds = simulated_dataset();
        let model = train_tree(
            &ds,
            &TreeHyper {
                max_depth: 2,
                min_leaf: 1,
            },
            0,
        )
        .unwrap();
        let text = to_model_string(&model).unwrap();
        let corrupted = text.replace("split ", "splat ");
        if corrupted != text {
            assert!(parse_model::<f64>(&corrupted).is_err());
        }
    }

    #[test]
    fn golden_logreg_fixture_predicts_expected_score() {
        let text = "GPUSENTINEL-MODEL v1\n\
                    [info]\n\
                    kind = logreg\n\
                    seed = 0\n\
                    fingerprint = 0000000000000000\n\
                    [hyper]\n\
                    learning_rate = 0.1\n\
                    [features]\n\
                    a,1,2\n\
                    b,0,1\n\
                    [params]\n\
                    bias = 0.25\n\
                    weights = 1.5,-2\n";
        let model: Model<f64> = parse_model(text).unwrap();
        // standardized input: a=(3−1)/2=1, b=(0.5−0)/1=0.5
        // logit = 1·1.5 + 0.5·(−2) + 0.25 = 0.75
        let score = predict_score(&model, &[3.0, 0.5]).unwrap();
        let expected = 1.0 / (1.0 + (-0.75f64).exp());
        assert!((score - expected).abs() < 1e-15, "{score} vs {expected}");
    }

    #[test]
    fn hyper_overrides_apply_per_kind() {
        let mut hyper = Hyper::default_for(crate::classifiers::ModelKind::Forest);
        hyper.set("tree_count", "3").unwrap();
        hyper.set("bootstrap", "false").unwrap();
        assert!(hyper.set("rounds", "5").is_err());
        let ds = simulated_dataset();
        let model = train_model(&ds, &hyper, 1).unwrap();
        match &model.params {
            ModelParams::Forest { trees } => assert_eq!(trees.len(), 3),
            _ => panic!("expected forest"),
        }
    }
}
