use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Args;
use gpu_sentinel::classifiers::load_model;
use gpu_sentinel::detector::{
    alert_csv_line, detect_trace, detect_trace_rules, AlertEvent, RuleThresholds, StreamDetector,
    TailFollower, TailItem, ALERT_CSV_HEADER,
};
use gpu_sentinel::features::WindowSpec;
use gpu_sentinel::ingest::load_canonical;
use gpu_sentinel::Real;

use super::{io_error, CliError};

#[derive(Args)]
pub struct DetectArgs {
    /// Saved model file (model-based detection)
    #[arg(long, conflicts_with = "thresholds")]
    pub model: Option<PathBuf>,

    /// Rule-based detection thresholds: util_pct,power_w,sustain_s
    #[arg(long)]
    pub thresholds: Option<String>,

    /// Canonical trace file to score in batch mode
    #[arg(long, conflicts_with = "follow")]
    pub trace: Option<PathBuf>,

    /// Follow a growing sampler CSV instead of a recorded trace
    #[arg(long, requires = "sampler")]
    pub follow: bool,

    /// Sampler CSV to tail in follow mode
    #[arg(long)]
    pub sampler: Option<PathBuf>,

    /// Samples per window
    #[arg(long, default_value_t = WindowSpec::DEFAULT_WIDTH)]
    pub window_width: usize,

    /// Samples between window starts
    #[arg(long, default_value_t = WindowSpec::DEFAULT_STRIDE)]
    pub window_stride: usize,

    /// Consecutive positive windows required to raise an alert
    #[arg(long, default_value_t = 3)]
    pub debounce: usize,

    /// Alert sink file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Seconds between polls of the tailed file (follow mode)
    #[arg(long, default_value_t = 0.5)]
    pub poll_interval: f64,

    /// Seconds to wait for the tailed file to appear (follow mode)
    #[arg(long, default_value_t = 10.0)]
    pub grace: f64,

    /// Stop follow mode after this many idle seconds (0 = run forever)
    #[arg(long, default_value_t = 0.0)]
    pub exit_after_idle: f64,
}

enum Sink {
    Stdout(std::io::Stdout),
    File(std::io::BufWriter<std::fs::File>),
}

impl Sink {
    fn open(out: Option<&PathBuf>) -> Result<Sink, CliError> {
        match out {
            None => Ok(Sink::Stdout(std::io::stdout())),
            Some(path) => {
                let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
                Ok(Sink::File(std::io::BufWriter::new(file)))
            }
        }
    }

    fn write_line(&mut self, line: &str) -> Result<(), CliError> {
        let result = match self {
            Sink::Stdout(out) => writeln!(out, "{line}"),
            Sink::File(out) => writeln!(out, "{line}"),
        };
        result.map_err(|e| CliError::Internal(format!("alert sink: {e}")))
    }

    fn flush(&mut self) -> Result<(), CliError> {
        let result = match self {
            Sink::Stdout(out) => out.flush(),
            Sink::File(out) => out.flush(),
        };
        result.map_err(|e| CliError::Internal(format!("alert sink: {e}")))
    }
}

fn parse_thresholds(text: &str) -> Result<RuleThresholds<Real>, CliError> {
    let parts: Vec<&str> = text.split(',').map(|p| p.trim()).collect();
    if parts.len() != 3 {
        return Err(CliError::usage(
            "--thresholds expects util_pct,power_w,sustain_s",
        ));
    }
    let parse = |s: &str, what: &str| -> Result<Real, CliError> {
        s.parse()
            .map_err(|_| CliError::usage(format!("invalid {what} '{s}' in --thresholds")))
    };
    Ok(RuleThresholds {
        min_gpu_util: parse(parts[0], "utilization")?,
        min_power: parse(parts[1], "power")?,
        min_sustain_s: parse(parts[2], "sustain")?,
    })
}

pub fn run(args: DetectArgs) -> Result<(), CliError> {
    let spec = WindowSpec::new(args.window_width, args.window_stride)?;
    let thresholds = args
        .thresholds
        .as_deref()
        .map(parse_thresholds)
        .transpose()?;
    if args.model.is_none() && thresholds.is_none() {
        return Err(CliError::usage("pass --model FILE or --thresholds u,p,s"));
    }

    let mut sink = Sink::open(args.out.as_ref())?;
    sink.write_line(ALERT_CSV_HEADER)?;

    if args.follow {
        return follow(args, spec, thresholds, sink);
    }

    let trace_path = args
        .trace
        .as_ref()
        .ok_or_else(|| CliError::usage("batch mode needs --trace FILE (or use --follow)"))?;
    let trace = load_canonical::<Real>(trace_path)?;

    let (verdicts, alerts) = match (&args.model, thresholds) {
        (Some(model_path), None) => {
            let model = load_model::<Real>(model_path)?;
            detect_trace(&model, &trace, &spec, args.debounce)?
        }
        (None, Some(thresholds)) => detect_trace_rules(&thresholds, &trace, &spec, args.debounce)?,
        _ => unreachable!("clap conflicts_with"),
    };

    for alert in &alerts {
        sink.write_line(&alert_csv_line(alert))?;
    }
    sink.flush()?;
    report_summary(&args, verdicts.len(), alerts.len());
    Ok(())
}

fn report_summary(args: &DetectArgs, windows: usize, alerts: usize) {
    let line = format!("{windows} window(s) scored, {alerts} alert(s)");
    // keep stdout clean when it doubles as the alert sink
    if args.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn follow(
    args: DetectArgs,
    spec: WindowSpec,
    thresholds: Option<RuleThresholds<Real>>,
    mut sink: Sink,
) -> Result<(), CliError> {
    let sampler = args.sampler.as_ref().expect("clap requires sampler");
    let poll = Duration::from_secs_f64(args.poll_interval.max(0.01));
    let grace = Duration::from_secs_f64(args.grace.max(0.0));

    let mut detector = match (&args.model, thresholds) {
        (Some(model_path), None) => {
            let model = load_model::<Real>(model_path)?;
            StreamDetector::with_model(model, spec, args.debounce)?
        }
        (None, Some(thresholds)) => StreamDetector::with_rules(thresholds, spec, args.debounce)?,
        _ => unreachable!("clap conflicts_with"),
    };

    let mut tail = TailFollower::<Real>::open(sampler, grace, poll)?;
    let mut windows = 0usize;
    let mut alerts = 0usize;
    let mut last_progress = Instant::now();
    loop {
        let items = tail.poll_once()?;
        let idle = items.is_empty();
        for item in items {
            match item {
                TailItem::Error { line, message } => {
                    eprintln!(
                        "warning: {sampler:?} line {line}: {message}",
                        sampler = sampler
                    );
                }
                TailItem::Sample(sample) => {
                    if let Some(output) = detector.push_sample(sample)? {
                        windows += 1;
                        if let Some(alert) = output.alert {
                            alerts += 1;
                            emit_alert(&mut sink, &alert)?;
                        }
                    }
                }
            }
        }
        if !idle {
            last_progress = Instant::now();
        } else if args.exit_after_idle > 0.0
            && last_progress.elapsed() >= Duration::from_secs_f64(args.exit_after_idle)
        {
            break;
        }
        std::thread::sleep(poll);
    }
    sink.flush()?;
    report_summary(&args, windows, alerts);
    Ok(())
}

fn emit_alert(sink: &mut Sink, alert: &AlertEvent<Real>) -> Result<(), CliError> {
    sink.write_line(&alert_csv_line(alert))?;
    sink.flush()
}
