mod detect;
mod featurize;
mod ingest;
mod report;
mod simulate;
mod train;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::Subcommand;
use gpu_sentinel::ingest::load_canonical;
use gpu_sentinel::trace::Trace;
use gpu_sentinel::{Error, Real};

pub use detect::DetectArgs;
pub use featurize::FeaturizeArgs;
pub use ingest::IngestArgs;
pub use report::ReportArgs;
pub use simulate::SimulateArgs;
pub use train::{EvalArgs, TrainArgs};

#[derive(Subcommand)]
pub enum Command {
    /// Generate calibrated synthetic traces (benign and miner-contaminated)
    Simulate(SimulateArgs),
    /// Convert sampler/profiler/fps logs into a canonical trace file
    Ingest(IngestArgs),
    /// Extract windowed features from traces into a dataset CSV
    Featurize(FeaturizeArgs),
    /// Train classifiers and print their evaluation metrics
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset or trace corpus
    Eval(EvalArgs),
    /// Score windows of a trace or a growing log and emit alerts
    Detect(DetectArgs),
    /// Compare benign vs miner regimes: summary CSV and SVG charts
    Report(ReportArgs),
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(args) => simulate::run(args),
        Command::Ingest(args) => ingest::run(args),
        Command::Featurize(args) => featurize::run(args),
        Command::Train(args) => train::run_train(args),
        Command::Eval(args) => train::run_eval(args),
        Command::Detect(args) => detect::run(args),
        Command::Report(args) => report::run(args),
    }
}

/// CLI error with a stable exit code: usage 1, data 2, internal 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> CliError {
        CliError::Usage(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> CliError {
        match err {
            Error::Io { .. } => CliError::Internal(err.to_string()),
            _ => CliError::Data(err.to_string()),
        }
    }
}

pub(crate) fn io_error(path: &Path, err: std::io::Error) -> CliError {
    CliError::Internal(format!("{}: {err}", path.display()))
}

/// Loads one canonical trace file or every `*.trace` in a directory
/// (sorted by file name for determinism).
pub(crate) fn load_traces(path: &Path) -> Result<Vec<Trace<Real>>, CliError> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| io_error(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "trace"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(CliError::Data(format!(
                "no .trace files in {}",
                path.display()
            )));
        }
        files
            .iter()
            .map(|f| load_canonical::<Real>(f).map_err(CliError::from))
            .collect()
    } else {
        Ok(vec![load_canonical::<Real>(path)?])
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}
