use std::path::PathBuf;

use clap::Args;
use gpu_sentinel::ingest::save_trace;
use gpu_sentinel::report::summarize_mixed;
use gpu_sentinel::sim::{make_corpus, parse_scenario_config, ScenarioConfig};
use gpu_sentinel::Real;

use super::{io_error, CliError};

#[derive(Args)]
pub struct SimulateArgs {
    /// Output directory for the generated .trace files
    #[arg(long)]
    pub out: PathBuf,

    /// Number of benign-only traces
    #[arg(long, default_value_t = 0)]
    pub benign: usize,

    /// Number of miner-contaminated traces
    #[arg(long, default_value_t = 0)]
    pub mixed: usize,

    /// Corpus seed; per-trace seeds derive from it [default: 42]
    #[arg(long, env = "GPU_SENTINEL_SEED")]
    pub seed: Option<u64>,

    /// Scenario duration in seconds [default: 600]
    #[arg(long)]
    pub duration: Option<f64>,

    /// Sampling interval in seconds [default: 1]
    #[arg(long)]
    pub interval: Option<f64>,

    /// Miner onset in seconds for every mixed trace
    /// [default: drawn uniformly from the middle 60% of the duration]
    #[arg(long)]
    pub onset: Option<f64>,

    /// Benign-to-miner transition length in seconds [default: 5]
    #[arg(long)]
    pub ramp: Option<f64>,

    /// Scenario config file (flat key = value); flags override it
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    if args.benign + args.mixed == 0 {
        return Err(CliError::usage(
            "nothing to simulate: pass --benign N and/or --mixed N",
        ));
    }

    let mut cfg = ScenarioConfig::<Real>::default();
    if let Some(path) = &args.scenario {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        cfg = parse_scenario_config(&text, &cfg)?;
    }
    if let Some(duration) = args.duration {
        cfg.duration_s = duration;
    }
    if let Some(interval) = args.interval {
        cfg.interval_s = interval;
    }
    if let Some(onset) = args.onset {
        cfg.miner_onset_s = Some(onset);
    }
    if let Some(ramp) = args.ramp {
        cfg.ramp_s = ramp;
    }
    let seed = args.seed.unwrap_or(cfg.seed);

    let corpus = make_corpus(args.benign, args.mixed, &cfg, seed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;

    for trace in &corpus {
        let path = args.out.join(format!("{}.trace", trace.meta.scenario));
        save_trace(trace, &path)?;
        let (benign_count, miner_count) = trace.label_counts();
        let mut line = format!(
            "{}: {} samples @ {} s, labels {}/{} benign/miner",
            trace.meta.scenario,
            trace.samples.len(),
            trace.meta.interval_s,
            benign_count,
            miner_count,
        );
        match trace.onset_t() {
            Some(onset) => {
                line.push_str(&format!(", onset {onset} s"));
                let summary = summarize_mixed(trace)?;
                if let Some(fps) = summary.channel("fps") {
                    line.push_str(&format!(
                        ", fps {:.2} -> {:.2} ({:+.2}%)",
                        fps.benign_mean, fps.miner_mean, fps.delta_pct
                    ));
                }
            }
            None => line.push_str(", onset none"),
        }
        println!("{line}");
    }
    println!(
        "wrote {} trace(s) to {} (seed {seed})",
        corpus.len(),
        args.out.display()
    );
    Ok(())
}
