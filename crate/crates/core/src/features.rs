//! Sliding-window feature extraction: 8 telemetry channels × 5 statistics
//! per window, in a fixed documented order, plus dataset assembly and
//! standardization.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, parse_scalar, Scalar};
use crate::trace::{mean_spacing, KernelRecord, Label, TelemetrySample, Trace};

/// Channel order is fixed; feature vectors are channel-major.
pub const CHANNEL_NAMES: [&str; 8] = [
    "fps",
    "power",
    "gpu_util",
    "mem_used",
    "sm_clock",
    "duration_us",
    "sm_throughput",
    "dram_throughput",
];

/// Statistic order within each channel.
pub const STAT_NAMES: [&str; 5] = ["mean", "std", "min", "max", "slope"];

pub const FEATURE_COUNT: usize = CHANNEL_NAMES.len() * STAT_NAMES.len();

/// The canonical 40 feature names: `<channel>_<stat>`, channel-major.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for channel in CHANNEL_NAMES {
        for stat in STAT_NAMES {
            names.push(format!("{channel}_{stat}"));
        }
    }
    names
}

/// Index of `<channel>_<stat>` in the canonical order.
pub fn feature_index(channel: &str, stat: &str) -> Option<usize> {
    let c = CHANNEL_NAMES.iter().position(|&n| n == channel)?;
    let s = STAT_NAMES.iter().position(|&n| n == stat)?;
    Some(c * STAT_NAMES.len() + s)
}

/// Window geometry in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub width: usize,
    pub stride: usize,
}

impl WindowSpec {
    pub const DEFAULT_WIDTH: usize = 30;
    pub const DEFAULT_STRIDE: usize = 10;

    pub fn new(width: usize, stride: usize) -> Result<WindowSpec> {
        if width < 2 {
            return Err(Error::invalid(format!("window width {width} below 2")));
        }
        if stride < 1 {
            return Err(Error::invalid("window stride must be at least 1"));
        }
        Ok(WindowSpec { width, stride })
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            width: Self::DEFAULT_WIDTH,
            stride: Self::DEFAULT_STRIDE,
        }
    }
}

/// A contiguous sample slice plus the kernel records co-temporal with it.
///
/// The window spans `[start_t, end_t)` where `end_t` extends one mean sample
/// gap past the last sample, so kernels co-temporal with every sample in the
/// window belong to it and kernels of the next sample period do not.
#[derive(Debug, Clone)]
pub struct Window<'a, F> {
    pub samples: &'a [TelemetrySample<F>],
    pub kernels: &'a [KernelRecord<F>],
    pub start_t: F,
    pub end_t: F,
}

/// End time of a window over `samples`: last t plus the mean in-window gap.
pub fn window_end_t<F: Scalar>(samples: &[TelemetrySample<F>]) -> F {
    match samples.last() {
        Some(last) => last.t + mean_spacing(samples),
        None => F::zero(),
    }
}

/// Fixed-order windowed statistics with an optional label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<F> {
    pub values: Vec<F>,
    pub window_start_t: F,
    pub window_end_t: F,
    pub label: Option<Label>,
    /// True when at least one channel had no data in the window (its
    /// statistics are all zero).
    pub degenerate: bool,
}

/// Per-feature standardization parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler<F> {
    pub means: Vec<F>,
    pub stds: Vec<F>,
}

impl<F: Scalar> Scaler<F> {
    /// Identity scaler of the given dimension.
    pub fn identity(dim: usize) -> Scaler<F> {
        Scaler {
            means: vec![F::zero(); dim],
            stds: vec![F::one(); dim],
        }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// (x − mean) / std per feature; features with std 0 map to 0.
    pub fn apply(&self, values: &[F]) -> Result<Vec<F>> {
        if values.len() != self.means.len() {
            return Err(Error::invalid(format!(
                "dimension mismatch: scaler has {} features, got {}",
                self.means.len(),
                values.len()
            )));
        }
        Ok(values
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&x, (&m, &s))| {
                if s == F::zero() {
                    F::zero()
                } else {
                    (x - m) / s
                }
            })
            .collect())
    }

    /// Inverse of [`Scaler::apply`] (features with std 0 recover the mean).
    pub fn invert(&self, values: &[F]) -> Result<Vec<F>> {
        if values.len() != self.means.len() {
            return Err(Error::invalid(format!(
                "dimension mismatch: scaler has {} features, got {}",
                self.means.len(),
                values.len()
            )));
        }
        Ok(values
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&z, (&m, &s))| z * s + m)
            .collect())
    }
}

/// Labeled feature rows with the canonical name order and an optional scaler.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureVector<F>>,
    pub scaler: Option<Scaler<F>>,
}

impl<F: Scalar> Dataset<F> {
    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn labels(&self) -> Result<Vec<Label>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.label
                    .ok_or_else(|| Error::invalid(format!("row {i} has no label")))
            })
            .collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let miner = self
            .rows
            .iter()
            .filter(|r| r.label == Some(Label::Miner))
            .count();
        let benign = self
            .rows
            .iter()
            .filter(|r| r.label == Some(Label::Benign))
            .count();
        (benign, miner)
    }
}

/// Mean, population std, min, max, and least-squares slope per sample index.
/// Empty input yields all zeros; a single value has zero std and slope.
pub fn channel_stats<F: Scalar>(values: &[F]) -> [F; 5] {
    if values.is_empty() {
        return [F::zero(); 5];
    }
    let n = from_usize::<F>(values.len());
    let mean = values.iter().fold(F::zero(), |a, &v| a + v) / n;
    let var = values
        .iter()
        .fold(F::zero(), |a, &v| a + (v - mean) * (v - mean))
        / n;
    let std = var.sqrt();
    let mut min = values[0];
    let mut max = values[0];
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    let slope = if values.len() < 2 {
        F::zero()
    } else {
        let half = F::from_f64(0.5).unwrap();
        let x_mean = (n - F::one()) * half;
        let mut sxy = F::zero();
        let mut sxx = F::zero();
        for (i, &v) in values.iter().enumerate() {
            let dx = from_usize::<F>(i) - x_mean;
            sxy = sxy + dx * (v - mean);
            sxx = sxx + dx * dx;
        }
        sxy / sxx
    };
    [mean, std, min, max, slope]
}

/// Computes the 40-value feature vector for one window. Channels with no
/// data in the window yield zeros and flag the vector degenerate.
pub fn extract_window_features<F: Scalar>(window: &Window<'_, F>) -> Result<FeatureVector<F>> {
    if window.samples.len() < 2 {
        return Err(Error::invalid(format!(
            "window has {} samples, need at least 2",
            window.samples.len()
        )));
    }
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    let mut degenerate = false;
    let mut push_channel = |channel_values: &[F]| {
        if channel_values.is_empty() {
            degenerate = true;
        }
        values.extend_from_slice(&channel_stats(channel_values));
    };

    let fps: Vec<F> = window.samples.iter().filter_map(|s| s.fps).collect();
    push_channel(&fps);
    let power: Vec<F> = window.samples.iter().map(|s| s.power).collect();
    push_channel(&power);
    let util: Vec<F> = window.samples.iter().map(|s| s.gpu_util).collect();
    push_channel(&util);
    let mem: Vec<F> = window.samples.iter().map(|s| s.mem_used).collect();
    push_channel(&mem);
    let clock: Vec<F> = window.samples.iter().map(|s| s.sm_clock).collect();
    push_channel(&clock);
    let duration: Vec<F> = window.kernels.iter().map(|k| k.duration_us).collect();
    push_channel(&duration);
    let sm: Vec<F> = window.kernels.iter().map(|k| k.sm_throughput).collect();
    push_channel(&sm);
    let dram: Vec<F> = window.kernels.iter().map(|k| k.dram_throughput).collect();
    push_channel(&dram);

    Ok(FeatureVector {
        values,
        window_start_t: window.start_t,
        window_end_t: window.end_t,
        label: None,
        degenerate,
    })
}

/// Slides windows over a trace: starts at 0, stride, 2·stride, …, the last
/// partial window discarded. A window is labeled miner when at least half of
/// its samples are.
pub fn windows<'a, F: Scalar>(
    trace: &'a Trace<F>,
    spec: &WindowSpec,
) -> Result<Vec<(Window<'a, F>, Label)>> {
    let n = trace.samples.len();
    if n < spec.width {
        return Err(Error::invalid(format!(
            "trace has {n} samples, need at least one window of width {}",
            spec.width
        )));
    }
    let mut out = Vec::new();
    let mut start = 0usize;
    while start + spec.width <= n {
        let samples = &trace.samples[start..start + spec.width];
        let start_t = samples[0].t;
        let end_t = window_end_t(samples);
        let klo = trace.kernels.partition_point(|k| k.t < start_t);
        let khi = trace.kernels.partition_point(|k| k.t < end_t);
        let miner_count = trace.labels[start..start + spec.width]
            .iter()
            .filter(|l| l.is_miner())
            .count();
        let label = if miner_count * 2 >= spec.width {
            Label::Miner
        } else {
            Label::Benign
        };
        out.push((
            Window {
                samples,
                kernels: &trace.kernels[klo..khi],
                start_t,
                end_t,
            },
            label,
        ));
        start += spec.stride;
    }
    Ok(out)
}

/// Builds a labeled dataset from a corpus, concatenating windows in input
/// order. Traces shorter than one window are skipped.
pub fn build_dataset<F: Scalar>(traces: &[Trace<F>], spec: &WindowSpec) -> Result<Dataset<F>> {
    if traces.is_empty() {
        return Err(Error::invalid("no traces given"));
    }
    let mut rows = Vec::new();
    for trace in traces {
        if trace.samples.len() < spec.width {
            continue;
        }
        for (window, label) in windows(trace, spec)? {
            let mut fv = extract_window_features(&window)?;
            fv.label = Some(label);
            rows.push(fv);
        }
    }
    if rows.is_empty() {
        return Err(Error::invalid(format!(
            "no trace long enough for one window of width {}",
            spec.width
        )));
    }
    Ok(Dataset {
        feature_names: feature_names(),
        rows,
        scaler: None,
    })
}

/// Fits per-feature (mean, population std) on the dataset rows and attaches
/// the scaler to the dataset.
pub fn fit_standardizer<F: Scalar>(dataset: &mut Dataset<F>) -> Result<()> {
    if dataset.rows.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 rows to fit a standardizer, got {}",
            dataset.rows.len()
        )));
    }
    let dim = dataset.dim();
    let n = from_usize::<F>(dataset.rows.len());
    let mut means = vec![F::zero(); dim];
    for row in &dataset.rows {
        for (m, &v) in means.iter_mut().zip(&row.values) {
            *m = *m + v;
        }
    }
    for m in means.iter_mut() {
        *m = *m / n;
    }
    let mut stds = vec![F::zero(); dim];
    for row in &dataset.rows {
        for ((s, &m), &v) in stds.iter_mut().zip(&means).zip(&row.values) {
            *s = *s + (v - m) * (v - m);
        }
    }
    for s in stds.iter_mut() {
        *s = (*s / n).sqrt();
    }
    dataset.scaler = Some(Scaler { means, stds });
    Ok(())
}

/// Exports a dataset as CSV: header `feature_names…,label`, one row per
/// vector, empty label field for unlabeled rows.
pub fn dataset_to_csv<F: Scalar>(dataset: &Dataset<F>) -> String {
    let mut out = dataset.feature_names.join(",");
    out.push_str(",label\n");
    for row in &dataset.rows {
        let mut line = row
            .values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        line.push(',');
        if let Some(label) = row.label {
            line.push_str(&label.bit().to_string());
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Parses a dataset CSV produced by [`dataset_to_csv`].
pub fn dataset_from_csv<F: Scalar>(text: &str) -> Result<Dataset<F>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format("empty dataset file"))?;
    let mut names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    match names.pop() {
        Some(last) if last == "label" => {}
        _ => return Err(Error::format("dataset header must end with 'label'")),
    }
    if names.is_empty() {
        return Err(Error::format("dataset header has no feature columns"));
    }
    let mut rows = Vec::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() + 1 {
            return Err(Error::parse(
                line_no,
                format!(
                    "expected {} columns, found {}",
                    names.len() + 1,
                    fields.len()
                ),
            ));
        }
        let values = fields[..names.len()]
            .iter()
            .map(|f| {
                parse_scalar::<F>(f)
                    .ok_or_else(|| Error::parse(line_no, format!("invalid value '{f}'")))
            })
            .collect::<Result<Vec<F>>>()?;
        let label_field = fields[names.len()].trim();
        let label = if label_field.is_empty() {
            None
        } else {
            Some(
                label_field
                    .parse::<u8>()
                    .ok()
                    .and_then(Label::from_bit)
                    .ok_or_else(|| {
                        Error::parse(line_no, format!("invalid label '{label_field}'"))
                    })?,
            )
        };
        rows.push(FeatureVector {
            values,
            window_start_t: F::zero(),
            window_end_t: F::zero(),
            label,
            degenerate: false,
        });
    }
    Ok(Dataset {
        feature_names: names,
        rows,
        scaler: None,
    })
}
