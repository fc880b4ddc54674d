//! Regime comparison reports: per-channel means over the benign and
//! miner-active regions, percent deltas, and self-contained SVG time-series
//! charts (no external assets, byte-deterministic output).

use crate::error::{Error, Result};
use crate::features::CHANNEL_NAMES;
use crate::scalar::{from_usize, Scalar};
use crate::trace::{KernelRecord, TelemetrySample, Trace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDelta<F> {
    pub channel: &'static str,
    pub benign_mean: F,
    pub miner_mean: F,
    pub delta_pct: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary<F> {
    pub rows: Vec<ChannelDelta<F>>,
    /// Present for mixed traces: time of the first miner-labeled sample.
    pub onset_t: Option<F>,
}

impl<F: Scalar> ReportSummary<F> {
    pub fn channel(&self, name: &str) -> Option<&ChannelDelta<F>> {
        self.rows.iter().find(|r| r.channel == name)
    }
}

fn mean_of<F: Scalar>(values: impl Iterator<Item = F>) -> F {
    let mut sum = F::zero();
    let mut count = 0usize;
    for v in values {
        sum = sum + v;
        count += 1;
    }
    if count == 0 {
        F::zero()
    } else {
        sum / from_usize(count)
    }
}

/// Means for the 8 canonical channels; channels with no data report 0.
fn channel_means<F: Scalar>(
    samples: &[&TelemetrySample<F>],
    kernels: &[&KernelRecord<F>],
) -> [F; 8] {
    [
        mean_of(samples.iter().filter_map(|s| s.fps)),
        mean_of(samples.iter().map(|s| s.power)),
        mean_of(samples.iter().map(|s| s.gpu_util)),
        mean_of(samples.iter().map(|s| s.mem_used)),
        mean_of(samples.iter().map(|s| s.sm_clock)),
        mean_of(kernels.iter().map(|k| k.duration_us)),
        mean_of(kernels.iter().map(|k| k.sm_throughput)),
        mean_of(kernels.iter().map(|k| k.dram_throughput)),
    ]
}

fn delta_pct<F: Scalar>(benign: F, miner: F) -> F {
    let hundred = F::from_f64(100.0).unwrap();
    if benign == F::zero() {
        if miner == F::zero() {
            F::zero()
        } else if miner > F::zero() {
            F::infinity()
        } else {
            F::neg_infinity()
        }
    } else {
        (miner - benign) / benign * hundred
    }
}

fn build_rows<F: Scalar>(benign: [F; 8], miner: [F; 8]) -> Vec<ChannelDelta<F>> {
    CHANNEL_NAMES
        .iter()
        .zip(benign.iter().zip(miner.iter()))
        .map(|(&channel, (&b, &m))| ChannelDelta {
            channel,
            benign_mean: b,
            miner_mean: m,
            delta_pct: delta_pct(b, m),
        })
        .collect()
}

/// Compares a benign-only trace against a miner-active trace, whole-trace
/// means on each side.
pub fn summarize_pair<F: Scalar>(benign: &Trace<F>, miner: &Trace<F>) -> Result<ReportSummary<F>> {
    if benign.samples.is_empty() || miner.samples.is_empty() {
        return Err(Error::invalid("both traces need at least one sample"));
    }
    let b_samples: Vec<_> = benign.samples.iter().collect();
    let b_kernels: Vec<_> = benign.kernels.iter().collect();
    let m_samples: Vec<_> = miner.samples.iter().collect();
    let m_kernels: Vec<_> = miner.kernels.iter().collect();
    Ok(ReportSummary {
        rows: build_rows(
            channel_means(&b_samples, &b_kernels),
            channel_means(&m_samples, &m_kernels),
        ),
        onset_t: None,
    })
}

/// Splits one labeled mixed trace into its benign and miner regions by label
/// (kernels split at the onset time) and compares them.
pub fn summarize_mixed<F: Scalar>(trace: &Trace<F>) -> Result<ReportSummary<F>> {
    let onset = trace
        .onset_t()
        .ok_or_else(|| Error::invalid("trace has no miner-labeled samples; pass a mixed trace"))?;
    let benign_samples: Vec<_> = trace
        .samples
        .iter()
        .zip(&trace.labels)
        .filter(|(_, l)| !l.is_miner())
        .map(|(s, _)| s)
        .collect();
    if benign_samples.is_empty() {
        return Err(Error::invalid(
            "trace has no benign-labeled samples; pass a mixed trace",
        ));
    }
    let miner_samples: Vec<_> = trace
        .samples
        .iter()
        .zip(&trace.labels)
        .filter(|(_, l)| l.is_miner())
        .map(|(s, _)| s)
        .collect();
    let benign_kernels: Vec<_> = trace.kernels.iter().filter(|k| k.t < onset).collect();
    let miner_kernels: Vec<_> = trace.kernels.iter().filter(|k| k.t >= onset).collect();
    Ok(ReportSummary {
        rows: build_rows(
            channel_means(&benign_samples, &benign_kernels),
            channel_means(&miner_samples, &miner_kernels),
        ),
        onset_t: Some(onset),
    })
}

/// `channel,benign_mean,miner_mean,delta_pct` with deltas at two decimals.
pub fn render_summary_csv<F: Scalar>(summary: &ReportSummary<F>) -> String {
    let mut out = String::from("channel,benign_mean,miner_mean,delta_pct\n");
    for row in &summary.rows {
        let delta = row.delta_pct.to_f64().unwrap_or(f64::NAN);
        out.push_str(&format!(
            "{},{},{},{:.2}\n",
            row.channel, row.benign_mean, row.miner_mean, delta
        ));
    }
    out
}

/// Aligned text table for terminals.
pub fn render_summary_table<F: Scalar>(summary: &ReportSummary<F>) -> String {
    let mut out = format!(
        "{:<16} {:>12} {:>12} {:>10}\n",
        "channel", "benign", "miner", "delta%"
    );
    for row in &summary.rows {
        out.push_str(&format!(
            "{:<16} {:>12.2} {:>12.2} {:>10.2}\n",
            row.channel,
            row.benign_mean.to_f64().unwrap_or(f64::NAN),
            row.miner_mean.to_f64().unwrap_or(f64::NAN),
            row.delta_pct.to_f64().unwrap_or(f64::NAN),
        ));
    }
    out
}

/// One named polyline for an SVG chart.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgSeries<F> {
    pub name: String,
    pub points: Vec<(F, F)>,
}

pub fn fps_series<F: Scalar>(trace: &Trace<F>) -> Vec<(F, F)> {
    trace
        .samples
        .iter()
        .filter_map(|s| s.fps.map(|f| (s.t, f)))
        .collect()
}

pub fn power_series<F: Scalar>(trace: &Trace<F>) -> Vec<(F, F)> {
    trace.samples.iter().map(|s| (s.t, s.power)).collect()
}

const SVG_WIDTH: f64 = 800.0;
const SVG_HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 40.0;
const PALETTE: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

fn data_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

/// Renders a fixed 800×400 line chart with labeled axes, a legend, and an
/// optional dashed onset marker. Pure text generation; output is a pure
/// function of its inputs.
pub fn render_timeseries_svg<F: Scalar>(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[SvgSeries<F>],
    onset: Option<F>,
) -> String {
    let all_points = |pick: fn((F, F)) -> F| {
        series
            .iter()
            .flat_map(move |s| s.points.iter().map(move |&p| pick(p)))
            .filter_map(|v| v.to_f64())
    };
    let (x_lo, x_hi) = data_range(all_points(|p| p.0));
    let (y_lo, y_hi) = data_range(all_points(|p| p.1));
    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = move |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = move |y: f64| MARGIN_TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"800\" height=\"400\" fill=\"#ffffff\"/>\n");
    svg.push_str(&format!(
        "<text x=\"400\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n"
    ));

    // axes
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#000000\" stroke-width=\"1\"/>\n",
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{:.2}\" stroke=\"#000000\" stroke-width=\"1\"/>\n",
        MARGIN_TOP + plot_h
    ));

    // ticks and grid
    for i in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let px = sx(fx);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#000000\" stroke-width=\"1\"/>\n",
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 4.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{fx:.0}</text>\n",
            MARGIN_TOP + plot_h + 16.0
        ));
        let fy = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let py = sy(fy);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{MARGIN_LEFT}\" y2=\"{py:.2}\" stroke=\"#000000\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT - 4.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{fy:.1}</text>\n",
            MARGIN_LEFT - 7.0,
            py + 3.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{x_label}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 8.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-90 14 {:.2})\">{y_label}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .filter_map(|&(x, y)| Some((x.to_f64()?, y.to_f64()?)))
            .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            MARGIN_LEFT + plot_w - 150.0,
            MARGIN_TOP + 14.0 + 14.0 * i as f64,
            s.name
        ));
    }

    if let Some(onset) = onset.and_then(|o| o.to_f64()) {
        let px = sx(onset);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{MARGIN_TOP}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#d62728\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n",
            MARGIN_TOP + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#d62728\">onset</text>\n",
            px + 4.0,
            MARGIN_TOP + 10.0
        ));
    }

    svg.push_str("</svg>\n");
    svg
}
