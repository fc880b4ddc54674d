use std::path::PathBuf;

use clap::Args;
use gpu_sentinel::ingest::{load_trace, save_trace};
use gpu_sentinel::trace::validate_trace;
use gpu_sentinel::Real;

use super::CliError;

#[derive(Args)]
pub struct IngestArgs {
    /// Device-sampler CSV log (timestamp, util, mem, power, clock, temp)
    #[arg(long)]
    pub sampler: PathBuf,

    /// Kernel-profiler CSV export (name, timestamp, duration, throughputs, freq)
    #[arg(long)]
    pub kernels: Option<PathBuf>,

    /// Application FPS log (timestamp, fps)
    #[arg(long)]
    pub fps: Option<PathBuf>,

    /// Ground-truth labels, one 0/1 per sampler line
    #[arg(long)]
    pub labels: Option<PathBuf>,

    /// Output canonical trace file
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: IngestArgs) -> Result<(), CliError> {
    let trace = load_trace::<Real>(
        &args.sampler,
        args.kernels.as_deref(),
        args.fps.as_deref(),
        args.labels.as_deref(),
    )?;
    let violations = validate_trace(&trace);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("invalid: {v}");
        }
        return Err(CliError::Data(format!(
            "ingested trace violates {} invariant(s)",
            violations.len()
        )));
    }
    save_trace(&trace, &args.out)?;
    let (benign, miner) = trace.label_counts();
    println!(
        "wrote {}: {} samples, {} kernel records, labels {}/{} benign/miner, interval {} s",
        args.out.display(),
        trace.samples.len(),
        trace.kernels.len(),
        benign,
        miner,
        trace.meta.interval_s
    );
    Ok(())
}
