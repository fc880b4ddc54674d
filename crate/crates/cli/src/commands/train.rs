use std::path::{Path, PathBuf};

use clap::Args;
use gpu_sentinel::classifiers::{
    evaluate, load_model, render_metrics_csv, render_metrics_table, save_model, split, train_model,
    Hyper, Metrics, ModelKind,
};
use gpu_sentinel::features::{build_dataset, dataset_from_csv, Dataset, WindowSpec};
use gpu_sentinel::Real;

use super::{io_error, load_traces, write_text, CliError};

#[derive(Args)]
pub struct TrainArgs {
    /// Dataset CSV or trace file/directory
    #[arg(long)]
    pub data: PathBuf,

    /// Model kind to train
    #[arg(long, default_value = "all", value_parser = ["logreg", "tree", "forest", "gbm", "mlp", "all"])]
    pub model: String,

    /// Training seed (split, bootstrap, init, batch order) [default: 42]
    #[arg(long, env = "GPU_SENTINEL_SEED")]
    pub seed: Option<u64>,

    /// Fraction of rows held out for the test split
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,

    /// Samples per window (trace inputs only)
    #[arg(long, default_value_t = WindowSpec::DEFAULT_WIDTH)]
    pub window_width: usize,

    /// Samples between window starts (trace inputs only)
    #[arg(long, default_value_t = WindowSpec::DEFAULT_STRIDE)]
    pub window_stride: usize,

    /// Directory to write <kind>.model files into
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Also write the metrics table as CSV
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,

    /// Comma-separated hyperparameter overrides (single model only),
    /// e.g. --hyper tree_count=100,max_depth=10
    #[arg(long)]
    pub hyper: Option<String>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Saved model file
    #[arg(long)]
    pub model: PathBuf,

    /// Dataset CSV or trace file/directory (entire input is the test set)
    #[arg(long)]
    pub data: PathBuf,

    /// Samples per window (trace inputs only)
    #[arg(long, default_value_t = WindowSpec::DEFAULT_WIDTH)]
    pub window_width: usize,

    /// Samples between window starts (trace inputs only)
    #[arg(long, default_value_t = WindowSpec::DEFAULT_STRIDE)]
    pub window_stride: usize,

    /// Also write the metrics table as CSV
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
}

pub(crate) fn load_dataset(
    path: &Path,
    width: usize,
    stride: usize,
) -> Result<Dataset<Real>, CliError> {
    if path.extension().is_some_and(|ext| ext == "csv") {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Ok(dataset_from_csv(&text)?)
    } else {
        let spec = WindowSpec::new(width, stride)?;
        let traces = load_traces(path)?;
        Ok(build_dataset(&traces, &spec)?)
    }
}

pub fn run_train(args: TrainArgs) -> Result<(), CliError> {
    let kinds: Vec<ModelKind> = if args.model == "all" {
        ModelKind::REPORTED.to_vec()
    } else {
        vec![args.model.parse()?]
    };
    if args.hyper.is_some() && kinds.len() != 1 {
        return Err(CliError::usage("--hyper requires a single --model kind"));
    }
    let seed = args.seed.unwrap_or(42);

    let dataset = load_dataset(&args.data, args.window_width, args.window_stride)?;
    let (train, test) = split(&dataset, args.test_fraction, seed)?;

    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    }

    let mut rows: Vec<(String, Metrics)> = Vec::new();
    for kind in kinds {
        let mut hyper = Hyper::default_for(kind);
        if let Some(overrides) = &args.hyper {
            for pair in overrides.split(',').filter(|p| !p.trim().is_empty()) {
                let (key, value) = pair.split_once('=').ok_or_else(|| {
                    CliError::usage(format!("--hyper entry '{pair}' is not key=value"))
                })?;
                hyper.set(key.trim(), value.trim())?;
            }
        }
        let model = train_model(&train, &hyper, seed)?;
        let metrics = evaluate(&model, &test)?;
        if let Some(out) = &args.out {
            let path = out.join(format!("{kind}.model"));
            save_model(&model, &path)?;
        }
        rows.push((kind.to_string(), metrics));
    }

    println!(
        "trained on {} rows, evaluated on {} rows (seed {seed})",
        train.rows.len(),
        test.rows.len()
    );
    print!("{}", render_metrics_table(&rows));
    if let Some(path) = &args.metrics_out {
        write_text(path, &render_metrics_csv(&rows))?;
    }
    if let Some(out) = &args.out {
        println!("models written to {}", out.display());
    }
    Ok(())
}

pub fn run_eval(args: EvalArgs) -> Result<(), CliError> {
    let model = load_model::<Real>(&args.model)?;
    let dataset = load_dataset(&args.data, args.window_width, args.window_stride)?;
    let metrics = evaluate(&model, &dataset)?;
    let rows = vec![(model.kind.to_string(), metrics)];
    println!("evaluated {} rows", dataset.rows.len());
    print!("{}", render_metrics_table(&rows));
    if let Some(path) = &args.metrics_out {
        write_text(path, &render_metrics_csv(&rows))?;
    }
    Ok(())
}
