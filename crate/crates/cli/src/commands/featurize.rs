use std::path::PathBuf;

use clap::Args;
use gpu_sentinel::features::{build_dataset, dataset_to_csv, WindowSpec};

use super::{load_traces, write_text, CliError};

#[derive(Args)]
pub struct FeaturizeArgs {
    /// Trace file or directory of .trace files
    #[arg(long)]
    pub data: PathBuf,

    /// Output dataset CSV
    #[arg(long)]
    pub out: PathBuf,

    /// Samples per window
    #[arg(long, default_value_t = WindowSpec::DEFAULT_WIDTH)]
    pub window_width: usize,

    /// Samples between window starts
    #[arg(long, default_value_t = WindowSpec::DEFAULT_STRIDE)]
    pub window_stride: usize,
}

pub fn run(args: FeaturizeArgs) -> Result<(), CliError> {
    let spec = WindowSpec::new(args.window_width, args.window_stride)?;
    let traces = load_traces(&args.data)?;
    let dataset = build_dataset(&traces, &spec)?;
    write_text(&args.out, &dataset_to_csv(&dataset))?;
    let (benign, miner) = dataset.class_counts();
    println!(
        "wrote {}: {} rows x {} features from {} trace(s), labels {}/{} benign/miner",
        args.out.display(),
        dataset.rows.len(),
        dataset.dim(),
        traces.len(),
        benign,
        miner
    );
    Ok(())
}
