//! Acceptance suite: one test per release criterion, every tolerance pinned
//! in code. Run with `cargo test -p gpu-sentinel-cli --test acceptance --
//! --nocapture` to see one line per criterion.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gpu_sentinel::classifiers::{
    evaluate, gradient_check, predict_score, split, train_forest, train_gbm, train_logreg,
    train_mlp, train_tree, ForestHyper, GbmHyper, LogregHyper, Metrics, MlpHyper, Model,
    ModelParams, TreeHyper, TreeNode,
};
use gpu_sentinel::detector::detect_trace;
use gpu_sentinel::features::{
    build_dataset, extract_window_features, windows, Dataset, FeatureVector, WindowSpec,
};
use gpu_sentinel::ingest::{
    load_canonical, parse_canonical, parse_fps_log, parse_kernel_csv, parse_sampler_csv,
    render_fps_log, render_kernel_csv, render_sampler_csv, save_trace, to_canonical_string,
};
use gpu_sentinel::sim::{make_corpus, simulate_trace, ScenarioConfig};
use gpu_sentinel::trace::{Label, Trace};
use gpu_sentinel::{Error, Real};

fn default_corpus() -> &'static Vec<Trace<Real>> {
    static CORPUS: OnceLock<Vec<Trace<Real>>> = OnceLock::new();
    CORPUS.get_or_init(|| make_corpus(10, 10, &ScenarioConfig::default(), 42).unwrap())
}

fn default_dataset() -> Dataset<Real> {
    build_dataset(default_corpus(), &WindowSpec::default()).unwrap()
}

/// Forest trained on the default corpus with the default 70/30 split.
fn shared_forest() -> &'static Model<Real> {
    static MODEL: OnceLock<Model<Real>> = OnceLock::new();
    MODEL.get_or_init(|| {
        let (train, _) = split(&default_dataset(), 0.3, 42).unwrap();
        train_forest(&train, &ForestHyper::default(), 42).unwrap()
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn criterion_01_simulator_calibration() {
    let benign = simulate_trace(&ScenarioConfig::<Real>::default()).unwrap();
    assert_eq!(benign.samples.len(), 600);
    let fps = mean(benign.samples.iter().map(|s| s.fps.unwrap()));
    assert!((25.2..=30.8).contains(&fps), "benign fps mean {fps}");
    let power = mean(benign.samples.iter().map(|s| s.power));
    assert!((58.5..=71.5).contains(&power), "benign power mean {power}");
    let util = mean(benign.samples.iter().map(|s| s.gpu_util));
    assert!((36.0..=44.0).contains(&util), "benign util mean {util}");
    let mem = mean(benign.samples.iter().map(|s| s.mem_used));
    assert!((2520.0..=3080.0).contains(&mem), "benign mem mean {mem}");

    let mixed = simulate_trace(&ScenarioConfig::<Real>::default_mixed()).unwrap();
    let post: Vec<_> = mixed
        .samples
        .iter()
        .zip(&mixed.labels)
        .filter(|(_, l)| l.is_miner())
        .map(|(s, _)| s)
        .collect();
    let fps = mean(post.iter().map(|s| s.fps.unwrap()));
    assert!((12.6..=15.4).contains(&fps), "post-onset fps mean {fps}");
    let util = mean(post.iter().map(|s| s.gpu_util));
    assert!(util >= 97.0, "post-onset util mean {util}");
    let mem = mean(post.iter().map(|s| s.mem_used));
    assert!(
        (3510.0..=4290.0).contains(&mem),
        "post-onset mem mean {mem}"
    );
    for s in &post {
        assert!(
            (95.0..=159.0).contains(&s.power),
            "post-onset power sample {} at t {}",
            s.power,
            s.t
        );
    }
    println!(
        "criterion 01 (simulator calibration): PASS — benign means within ±10%, \
         post-onset means within ±10%, every post-onset power sample in [95,159] W"
    );
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gpu-sentinel"))
}

fn run_ok(args: &[&str]) {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn summary_delta(csv: &str, channel: &str) -> f64 {
    csv.lines()
        .find(|l| l.starts_with(&format!("{channel},")))
        .unwrap_or_else(|| panic!("channel {channel} missing"))
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn criterion_02_report_reproduces_headline_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    run_ok(&[
        "simulate",
        "--out",
        corpus.to_str().unwrap(),
        "--mixed",
        "1",
        "--onset",
        "300",
        "--seed",
        "42",
    ]);
    let report = dir.path().join("report");
    run_ok(&[
        "report",
        "--mixed",
        corpus.join("mixed-000.trace").to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(report.join("summary.csv")).unwrap();
    let fps_delta = summary_delta(&csv, "fps");
    assert!(
        (-55.0..=-45.0).contains(&fps_delta),
        "fps delta {fps_delta}% outside -50% ± 5 points"
    );
    let power_delta = summary_delta(&csv, "power");
    assert!(
        (30.0..=145.0).contains(&power_delta),
        "power delta {power_delta}% outside [+30%, +145%]"
    );
    println!(
        "criterion 02 (report deltas): PASS — fps delta {fps_delta:.2}% in -50±5, \
         power delta {power_delta:.2}% in [+30, +145]"
    );
}

#[test]
fn criterion_03_all_four_models_at_or_above_99_percent() {
    let dataset = default_dataset();
    let started = Instant::now();
    let (train, test) = split(&dataset, 0.3, 42).unwrap();
    let models: Vec<(&str, Model<Real>)> = vec![
        (
            "forest",
            train_forest(&train, &ForestHyper::default(), 42).unwrap(),
        ),
        ("gbm", train_gbm(&train, &GbmHyper::default(), 42).unwrap()),
        (
            "logreg",
            train_logreg(&train, &LogregHyper::default(), 42).unwrap(),
        ),
        ("mlp", train_mlp(&train, &MlpHyper::default(), 42).unwrap()),
    ];
    let mut lines = Vec::new();
    for (name, model) in &models {
        let m: Metrics = evaluate(model, &test).unwrap();
        for (metric, value) in [
            ("accuracy", m.accuracy),
            ("precision", m.precision),
            ("recall", m.recall),
            ("f1", m.f1),
        ] {
            assert!(
                value >= 0.99,
                "{name} {metric} {:.4} below 0.99 (tp {} fp {} tn {} fn {})",
                value,
                m.true_pos,
                m.false_pos,
                m.true_neg,
                m.false_neg
            );
        }
        lines.push(format!(
            "{name} acc {:.2}% prec {:.2}% rec {:.2}% f1 {:.2}%",
            m.accuracy * 100.0,
            m.precision * 100.0,
            m.recall * 100.0,
            m.f1 * 100.0
        ));
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "training + evaluation took {:.1} s, budget 60 s",
        elapsed.as_secs_f64()
    );
    println!(
        "criterion 03 (detection-table reproduction): PASS — {} in {:.1} s",
        lines.join("; "),
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_04_mlp_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rows: Vec<FeatureVector<Real>> = (0..5)
        .map(|i| FeatureVector {
            values: (0..4).map(|_| rng.random_range(-2.0..2.0)).collect(),
            window_start_t: i as f64,
            window_end_t: i as f64 + 1.0,
            label: Label::from_bit((rng.next_u64() % 2) as u8),
            degenerate: false,
        })
        .collect();
    let dataset = Dataset {
        feature_names: (0..4).map(|i| format!("f{i}")).collect(),
        rows,
        scaler: None,
    };
    let max_rel = gradient_check(&dataset, &MlpHyper::default(), 3, 1e-5).unwrap();
    assert!(
        max_rel < 1e-4,
        "max relative gradient error {max_rel:e} not below 1e-4"
    );
    println!(
        "criterion 04 (mlp gradient check): PASS — max relative error {max_rel:.2e} < 1e-4 \
         (central differences, eps 1e-5, 5-row 4-feature dataset)"
    );
}

/// Independent exhaustive root-split oracle: enumerates every (feature,
/// midpoint) pair, recounts classes naively, compares weighted child Gini
/// impurity as exact fractions, and applies the documented tie-break
/// (lowest feature index, then lowest threshold).
fn oracle_best_root_split(rows: &[(Vec<f64>, u8)]) -> Option<(usize, f64)> {
    let n = rows.len() as u128;
    let ones = rows.iter().filter(|(_, y)| *y == 1).count() as u128;
    if ones == 0 || ones == n {
        return None; // pure node
    }
    let d = rows[0].0.len();
    // weighted impurity of a candidate as a fraction (num, den)
    let impurity = |feature: usize, threshold: f64| -> Option<(u128, u128)> {
        let (mut nl, mut c1l, mut nr, mut c1r) = (0u128, 0u128, 0u128, 0u128);
        for (values, y) in rows {
            if values[feature] <= threshold {
                nl += 1;
                c1l += *y as u128;
            } else {
                nr += 1;
                c1r += *y as u128;
            }
        }
        if nl == 0 || nr == 0 {
            return None;
        }
        let c0l = nl - c1l;
        let c0r = nr - c1r;
        let num = (nl * nl - c0l * c0l - c1l * c1l) * nr + (nr * nr - c0r * c0r - c1r * c1r) * nl;
        Some((num, nl * nr))
    };
    let mut best: Option<(usize, f64, (u128, u128))> = None;
    for feature in 0..d {
        let mut values: Vec<f64> = rows.iter().map(|(v, _)| v[feature]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for pair in values.windows(2) {
            let threshold = (pair[0] + pair[1]) / 2.0;
            let Some(candidate) = impurity(feature, threshold) else {
                continue;
            };
            let strictly_better = match &best {
                None => true,
                Some((_, _, incumbent)) => candidate.0 * incumbent.1 < incumbent.0 * candidate.1,
            };
            if strictly_better {
                best = Some((feature, threshold, candidate));
            }
        }
    }
    best.map(|(f, t, _)| (f, t))
}

#[test]
fn criterion_05_tree_root_split_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut matched = 0usize;
    const CASES: usize = 200;
    for case in 0..CASES {
        let n = rng.random_range(2..=12);
        let d = rng.random_range(1..=3);
        // coarse value grid provokes exact impurity ties
        let rows: Vec<(Vec<f64>, u8)> = (0..n)
            .map(|_| {
                let values = (0..d)
                    .map(|_| rng.random_range(0..5) as f64 * 0.5)
                    .collect();
                (values, rng.random_range(0..2) as u8)
            })
            .collect();
        let dataset = Dataset {
            feature_names: (0..d).map(|i| format!("f{i}")).collect(),
            rows: rows
                .iter()
                .enumerate()
                .map(|(i, (values, label))| FeatureVector {
                    values: values.clone(),
                    window_start_t: i as f64,
                    window_end_t: i as f64 + 1.0,
                    label: Label::from_bit(*label),
                    degenerate: false,
                })
                .collect(),
            scaler: None,
        };
        let hyper = TreeHyper {
            max_depth: 1,
            min_leaf: 1,
        };
        let model = train_tree(&dataset, &hyper, 0).unwrap();
        let got = match &model.params {
            ModelParams::Tree(TreeNode::Split {
                feature, threshold, ..
            }) => Some((*feature, *threshold)),
            _ => None,
        };
        let expected = oracle_best_root_split(&rows);
        assert_eq!(got, expected, "case {case}: rows {rows:?}");
        matched += 1;
    }
    assert_eq!(matched, CASES);
    println!(
        "criterion 05 (tree split oracle): PASS — {matched}/{CASES} random datasets match \
         the exhaustive-enumeration argmax under the documented tie-break"
    );
}

#[test]
fn criterion_06_metrics_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    const CASES: usize = 1000;
    for _ in 0..CASES {
        let tp = rng.random_range(0u64..500);
        let fp = rng.random_range(0u64..500);
        let tn = rng.random_range(0u64..500);
        let fnc = rng.random_range(0u64..500);
        if tp + fp + tn + fnc == 0 {
            continue;
        }
        let m = Metrics::from_counts(tp, fp, tn, fnc);
        let total = (tp + fp + tn + fnc) as f64;
        assert!((m.accuracy - (tp + tn) as f64 / total).abs() <= 1e-12);
        let precision = if tp + fp == 0 {
            1.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fnc == 0 {
            1.0
        } else {
            tp as f64 / (tp + fnc) as f64
        };
        assert!((m.precision - precision).abs() <= 1e-12);
        assert!((m.recall - recall).abs() <= 1e-12);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        assert!((m.f1 - f1).abs() <= 1e-12);
    }
    println!(
        "criterion 06 (metrics identities): PASS — accuracy/precision/recall/F1 identities \
         hold within 1e-12 over {CASES} random confusion matrices"
    );
}

#[test]
fn criterion_07_online_offline_equivalence() {
    let model = shared_forest();
    let spec = WindowSpec::default();
    for seed in 1u64..=20 {
        let trace = simulate_trace(&ScenarioConfig::<Real> {
            seed,
            ..ScenarioConfig::default_mixed()
        })
        .unwrap();
        let (stream_verdicts, _) = detect_trace(model, &trace, &spec, 3).unwrap();
        let batch = windows(&trace, &spec).unwrap();
        assert_eq!(stream_verdicts.len(), batch.len(), "seed {seed}");
        for ((window, _), verdict) in batch.iter().zip(&stream_verdicts) {
            let fv = extract_window_features(window).unwrap();
            let score = predict_score(model, &fv.values).unwrap();
            assert_eq!(verdict.window_start_t, window.start_t, "seed {seed}");
            assert_eq!(verdict.window_end_t, window.end_t, "seed {seed}");
            assert_eq!(verdict.score, score, "seed {seed}");
        }
    }
    println!(
        "criterion 07 (online/offline equivalence): PASS — identical window spans and \
         bit-identical scores across 20 seeded mixed traces"
    );
}

#[test]
fn criterion_08_detection_latency_and_benign_silence() {
    let model = shared_forest();
    let spec = WindowSpec::default();

    let mut on_time = 0usize;
    for seed in 1000u64..1050 {
        let trace = simulate_trace(&ScenarioConfig::<Real> {
            seed,
            ..ScenarioConfig::default_mixed()
        })
        .unwrap();
        let (_, alerts) = detect_trace(model, &trace, &spec, 3).unwrap();
        if alerts.first().is_some_and(|a| a.t_raised <= 360.0) {
            on_time += 1;
        }
    }
    assert!(
        on_time * 100 >= 95 * 50,
        "first alert by t=360 s in only {on_time}/50 mixed runs, need ≥ 95%"
    );

    let mut benign_alerts = 0usize;
    for seed in 2000u64..2050 {
        let trace = simulate_trace(&ScenarioConfig::<Real> {
            seed,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let (_, alerts) = detect_trace(model, &trace, &spec, 3).unwrap();
        benign_alerts += alerts.len();
    }
    assert_eq!(
        benign_alerts, 0,
        "expected zero alerts across 50 benign runs, got {benign_alerts}"
    );
    println!(
        "criterion 08 (detection latency): PASS — alert by onset+width+k·stride (360 s) in \
         {on_time}/50 mixed runs, 0 alerts across 50 benign runs"
    );
}

fn core_fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn criterion_09_parser_fixtures() {
    // bit-exact round trips
    let sampler = core_fixture("sampler_good.csv");
    assert_eq!(
        render_sampler_csv(&parse_sampler_csv::<Real>(&sampler).unwrap()),
        sampler
    );
    let kernel = core_fixture("kernel_good.csv");
    assert_eq!(
        render_kernel_csv(&parse_kernel_csv::<Real>(&kernel).unwrap()),
        kernel
    );
    let fps = core_fixture("fps_good.csv");
    assert_eq!(render_fps_log(&parse_fps_log::<Real>(&fps).unwrap()), fps);

    // every malformed fixture yields a line-numbered error
    let malformed: Vec<(&str, Option<Error>)> = vec![
        (
            "sampler_bad_columns.csv",
            parse_sampler_csv::<Real>(&core_fixture("sampler_bad_columns.csv")).err(),
        ),
        (
            "sampler_bad_number.csv",
            parse_sampler_csv::<Real>(&core_fixture("sampler_bad_number.csv")).err(),
        ),
        (
            "kernel_bad_quote.csv",
            parse_kernel_csv::<Real>(&core_fixture("kernel_bad_quote.csv")).err(),
        ),
        (
            "kernel_bad_timestamp.csv",
            parse_kernel_csv::<Real>(&core_fixture("kernel_bad_timestamp.csv")).err(),
        ),
        (
            "fps_negative.csv",
            parse_fps_log::<Real>(&core_fixture("fps_negative.csv")).err(),
        ),
        (
            "fps_bad_columns.csv",
            parse_fps_log::<Real>(&core_fixture("fps_bad_columns.csv")).err(),
        ),
    ];
    for (name, err) in malformed {
        match err {
            Some(Error::Parse { .. }) => {}
            other => panic!("{name}: expected a line-numbered parse error, got {other:?}"),
        }
    }

    // canonical trace files round-trip to structural equality
    let trace = simulate_trace(&ScenarioConfig::<Real>::default_mixed()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.trace");
    save_trace(&trace, &path).unwrap();
    let back = load_canonical::<Real>(&path).unwrap();
    assert_eq!(trace, back);
    assert_eq!(
        to_canonical_string(&trace).unwrap(),
        to_canonical_string(&back).unwrap()
    );
    let reparsed = parse_canonical::<Real>(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(trace, reparsed);

    println!(
        "criterion 09 (parser fixtures): PASS — good fixtures round-trip bit-exactly, \
         6/6 malformed fixtures yield line-numbered errors, canonical traces round-trip"
    );
}

fn pipeline_run(root: &Path) -> Vec<(String, Vec<u8>)> {
    let corpus = root.join("corpus");
    let models = root.join("models");
    run_ok(&[
        "simulate",
        "--out",
        corpus.to_str().unwrap(),
        "--benign",
        "4",
        "--mixed",
        "4",
        "--seed",
        "42",
        "--duration",
        "300",
        "--onset",
        "150",
    ]);
    run_ok(&[
        "train",
        "--data",
        corpus.to_str().unwrap(),
        "--model",
        "forest",
        "--seed",
        "42",
        "--out",
        models.to_str().unwrap(),
        "--metrics-out",
        root.join("metrics.csv").to_str().unwrap(),
    ]);
    run_ok(&[
        "detect",
        "--model",
        models.join("forest.model").to_str().unwrap(),
        "--trace",
        corpus.join("mixed-000.trace").to_str().unwrap(),
        "--out",
        root.join("alerts.csv").to_str().unwrap(),
    ]);

    let mut artifacts: Vec<(String, Vec<u8>)> = Vec::new();
    let mut collect = |dir: &Path| {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        for p in paths {
            artifacts.push((
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            ));
        }
    };
    collect(&corpus);
    collect(&models);
    artifacts.push((
        "metrics.csv".into(),
        std::fs::read(root.join("metrics.csv")).unwrap(),
    ));
    artifacts.push((
        "alerts.csv".into(),
        std::fs::read(root.join("alerts.csv")).unwrap(),
    ));
    artifacts
}

#[test]
fn criterion_10_pipeline_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = pipeline_run(&dir.path().join("a"));
    let b = pipeline_run(&dir.path().join("b"));
    assert_eq!(a.len(), b.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between runs");
    }
    let alerts = a.iter().find(|(n, _)| n == "alerts.csv").unwrap();
    assert!(
        String::from_utf8_lossy(&alerts.1).lines().count() >= 2,
        "expected at least one alert in the mixed-trace run"
    );
    println!(
        "criterion 10 (pipeline determinism): PASS — simulate→train→detect twice with seed 42 \
         produced {} byte-identical artifacts (traces, model, metrics, alert log)",
        a.len()
    );
}
