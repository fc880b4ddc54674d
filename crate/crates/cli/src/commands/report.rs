use std::path::PathBuf;

use clap::Args;
use gpu_sentinel::report::{
    fps_series, power_series, render_summary_csv, render_summary_table, render_timeseries_svg,
    summarize_mixed, summarize_pair, ReportSummary, SvgSeries,
};
use gpu_sentinel::trace::Trace;
use gpu_sentinel::{ingest::load_canonical, Real};

use super::{io_error, write_text, CliError};

#[derive(Args)]
pub struct ReportArgs {
    /// Single labeled mixed trace (benign and miner regions split by label)
    #[arg(long, conflicts_with_all = ["benign", "miner"])]
    pub mixed: Option<PathBuf>,

    /// Benign-only trace (pair mode, with --miner)
    #[arg(long, requires = "miner")]
    pub benign: Option<PathBuf>,

    /// Miner-active trace (pair mode, with --benign)
    #[arg(long, requires = "benign")]
    pub miner: Option<PathBuf>,

    /// Output directory for summary.csv and the SVG charts
    #[arg(long)]
    pub out: PathBuf,
}

fn chart(
    title: &str,
    y_label: &str,
    traces: &[(&str, &Trace<Real>)],
    pick: fn(&Trace<Real>) -> Vec<(Real, Real)>,
    onset: Option<Real>,
) -> String {
    let series: Vec<SvgSeries<Real>> = traces
        .iter()
        .map(|(name, trace)| SvgSeries {
            name: name.to_string(),
            points: pick(trace),
        })
        .collect();
    render_timeseries_svg(title, "time (s)", y_label, &series, onset)
}

pub fn run(args: ReportArgs) -> Result<(), CliError> {
    let (summary, traces): (ReportSummary<Real>, Vec<(String, Trace<Real>)>) =
        match (&args.mixed, &args.benign, &args.miner) {
            (Some(mixed), None, None) => {
                let trace = load_canonical::<Real>(mixed)?;
                let summary = summarize_mixed(&trace)?;
                (summary, vec![("mixed".to_string(), trace)])
            }
            (None, Some(benign), Some(miner)) => {
                let benign_trace = load_canonical::<Real>(benign)?;
                let miner_trace = load_canonical::<Real>(miner)?;
                let summary = summarize_pair(&benign_trace, &miner_trace)?;
                (
                    summary,
                    vec![
                        ("benign".to_string(), benign_trace),
                        ("miner".to_string(), miner_trace),
                    ],
                )
            }
            _ => {
                return Err(CliError::usage(
                    "pass --mixed TRACE, or --benign TRACE --miner TRACE",
                ))
            }
        };

    std::fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    write_text(&args.out.join("summary.csv"), &render_summary_csv(&summary))?;

    let named: Vec<(&str, &Trace<Real>)> = traces
        .iter()
        .map(|(name, trace)| (name.as_str(), trace))
        .collect();
    write_text(
        &args.out.join("frame_rate.svg"),
        &chart(
            "Frame rate over time",
            "frames/s",
            &named,
            fps_series,
            summary.onset_t,
        ),
    )?;
    write_text(
        &args.out.join("power.svg"),
        &chart(
            "GPU power draw over time",
            "watts",
            &named,
            power_series,
            summary.onset_t,
        ),
    )?;

    print!("{}", render_summary_table(&summary));
    if let (Some(fps), Some(power)) = (summary.channel("fps"), summary.channel("power")) {
        println!(
            "fps delta {:+.2}%, power delta {:+.2}%",
            fps.delta_pct, power.delta_pct
        );
    }
    println!(
        "wrote summary.csv, frame_rate.svg, power.svg to {}",
        args.out.display()
    );
    Ok(())
}
