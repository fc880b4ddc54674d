//! Canonical in-memory telemetry model: device-sampler readings, kernel
//! profiler records, and the labeled [`Trace`] container shared by every
//! other module. All types are immutable after construction.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, Scalar};

/// Per-sample ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Benign,
    Miner,
}

impl Label {
    pub fn from_bit(bit: u8) -> Option<Label> {
        match bit {
            0 => Some(Label::Benign),
            1 => Some(Label::Miner),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Label::Benign => 0,
            Label::Miner => 1,
        }
    }

    pub fn is_miner(self) -> bool {
        self == Label::Miner
    }
}

/// One device-sampler reading, rebased to seconds since trace start.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetrySample<F> {
    pub t: F,
    /// Percent of GPU busy time, 0..=100.
    pub gpu_util: F,
    /// MiB.
    pub mem_used: F,
    /// Watts.
    pub power: F,
    /// MHz.
    pub sm_clock: F,
    /// Degrees C.
    pub temperature: F,
    /// Frames per second; absent when no application log was present.
    pub fps: Option<F>,
}

/// One kernel-profiler row, rebased to seconds since trace start.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRecord<F> {
    pub t: F,
    pub kernel_name: String,
    /// Microseconds, strictly positive.
    pub duration_us: F,
    /// Percent of peak sustained rate, 0..=100.
    pub sm_throughput: F,
    /// Percent of peak sustained rate, 0..=100.
    pub dram_throughput: F,
    /// MHz, strictly positive.
    pub sm_freq: F,
}

/// Scenario metadata carried alongside a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta<F> {
    pub scenario: String,
    pub seed: u64,
    pub interval_s: F,
    /// Identifier of the seedable RNG that generated the trace ("none" for
    /// ingested data), so corpora are reproducible across implementations.
    pub rng_algo: String,
    pub description: String,
}

impl<F: Scalar> TraceMeta<F> {
    pub fn ingested(scenario: impl Into<String>, interval_s: F) -> Self {
        TraceMeta {
            scenario: scenario.into(),
            seed: 0,
            interval_s,
            rng_algo: "none".to_string(),
            description: String::new(),
        }
    }
}

/// Aligned, time-ordered samples + kernel records with per-sample labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<F> {
    pub meta: TraceMeta<F>,
    pub samples: Vec<TelemetrySample<F>>,
    pub kernels: Vec<KernelRecord<F>>,
    pub labels: Vec<Label>,
}

impl<F: Scalar> Trace<F> {
    /// Time of the first sample labeled miner, if any.
    pub fn onset_t(&self) -> Option<F> {
        self.samples
            .iter()
            .zip(&self.labels)
            .find(|(_, l)| l.is_miner())
            .map(|(s, _)| s.t)
    }

    pub fn label_counts(&self) -> (usize, usize) {
        let miner = self.labels.iter().filter(|l| l.is_miner()).count();
        (self.labels.len() - miner, miner)
    }
}

/// Checks every trace invariant and returns one description per violation.
/// An empty list means the trace is valid; violations are data, not errors.
// negated comparisons are load-bearing: NaN must count as a violation
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_trace<F: Scalar>(trace: &Trace<F>) -> Vec<String> {
    let mut violations = Vec::new();
    let zero = F::zero();
    let hundred = F::from_f64(100.0).unwrap();

    for (i, s) in trace.samples.iter().enumerate() {
        if !(s.t >= zero) {
            violations.push(format!("sample {i}: t {} is negative", s.t));
        }
        if i > 0 && !(s.t > trace.samples[i - 1].t) {
            violations.push(format!(
                "sample {i}: t {} not strictly increasing (previous {})",
                s.t,
                trace.samples[i - 1].t
            ));
        }
        if !(s.gpu_util >= zero && s.gpu_util <= hundred) {
            violations.push(format!(
                "sample {i}: gpu_util {} out of range [0,100]",
                s.gpu_util
            ));
        }
        for (field, value) in [
            ("mem_used", s.mem_used),
            ("power", s.power),
            ("sm_clock", s.sm_clock),
        ] {
            if !(value >= zero) {
                violations.push(format!("sample {i}: {field} {value} is negative"));
            }
        }
        if let Some(fps) = s.fps {
            if !(fps >= zero) {
                violations.push(format!("sample {i}: fps {fps} is negative"));
            }
        }
    }

    for (i, k) in trace.kernels.iter().enumerate() {
        if i > 0 && !(k.t >= trace.kernels[i - 1].t) {
            violations.push(format!(
                "kernel {i}: t {} decreases (previous {})",
                k.t,
                trace.kernels[i - 1].t
            ));
        }
        if !(k.duration_us > zero) {
            violations.push(format!(
                "kernel {i}: duration_us {} not positive",
                k.duration_us
            ));
        }
        if !(k.sm_freq > zero) {
            violations.push(format!("kernel {i}: sm_freq {} not positive", k.sm_freq));
        }
        for (field, value) in [
            ("sm_throughput", k.sm_throughput),
            ("dram_throughput", k.dram_throughput),
        ] {
            if !(value >= zero && value <= hundred) {
                violations.push(format!("kernel {i}: {field} {value} out of range [0,100]"));
            }
        }
    }

    if trace.labels.len() != trace.samples.len() {
        violations.push(format!(
            "label count {} does not match sample count {}",
            trace.labels.len(),
            trace.samples.len()
        ));
    }

    violations
}

/// Raw device-sampler row with an absolute wall-clock timestamp (µs since epoch).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerReading<F> {
    pub t_us: i64,
    pub gpu_util: F,
    pub mem_used: F,
    pub power: F,
    pub sm_clock: F,
    pub temperature: F,
}

/// Raw kernel-profiler row with an absolute timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReading<F> {
    pub t_us: i64,
    pub kernel_name: String,
    pub duration_us: F,
    pub sm_throughput: F,
    pub dram_throughput: F,
    pub sm_freq: F,
}

/// Raw application FPS reading with an absolute timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpsReading<F> {
    pub t_us: i64,
    pub fps: F,
}

const MICROS_PER_SEC: f64 = 1e6;

fn rebase<F: Scalar>(t_us: i64, t0_us: i64) -> F {
    F::from_f64((t_us - t0_us) as f64 / MICROS_PER_SEC).unwrap()
}

/// Median gap between consecutive sampler readings; 1 s when fewer than two.
fn infer_interval_us(samples: &[SamplerReading<impl Scalar>]) -> i64 {
    if samples.len() < 2 {
        return 1_000_000;
    }
    let mut gaps: Vec<i64> = samples.windows(2).map(|w| w[1].t_us - w[0].t_us).collect();
    gaps.sort_unstable();
    gaps[gaps.len() / 2]
}

fn check_ordered(times: impl Iterator<Item = i64>, strict: bool, stream: &str) -> Result<()> {
    let mut prev: Option<i64> = None;
    for (i, t) in times.enumerate() {
        if let Some(p) = prev {
            let inverted = if strict { t <= p } else { t < p };
            if inverted {
                return Err(Error::invalid(format!(
                    "{stream} stream not time-ordered at index {i}"
                )));
            }
        }
        prev = Some(t);
    }
    Ok(())
}

/// Merges the raw streams into a [`Trace`] rebased to start at t = 0 from the
/// earliest timestamp across all streams.
///
/// Each FPS reading is attached to the sample with the nearest time, provided
/// the distance is at most half the (inferred) sampling interval; exact ties
/// go to the earlier sample and later readings overwrite earlier ones.
/// Kernel records keep their own timestamps. Labels default to all-benign.
pub fn align_streams<F: Scalar>(
    samples: &[SamplerReading<F>],
    kernels: &[KernelReading<F>],
    fps_log: &[FpsReading<F>],
    labels: Option<&[Label]>,
) -> Result<Trace<F>> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    check_ordered(samples.iter().map(|s| s.t_us), true, "sampler")?;
    check_ordered(kernels.iter().map(|k| k.t_us), false, "kernel")?;
    check_ordered(fps_log.iter().map(|f| f.t_us), false, "fps")?;

    if let Some(labels) = labels {
        if labels.len() != samples.len() {
            return Err(Error::invalid(format!(
                "{} samples, {} labels",
                samples.len(),
                labels.len()
            )));
        }
    }

    let mut t0_us = samples[0].t_us;
    if let Some(k) = kernels.first() {
        t0_us = t0_us.min(k.t_us);
    }
    if let Some(f) = fps_log.first() {
        t0_us = t0_us.min(f.t_us);
    }

    let interval_us = infer_interval_us(samples);

    let mut out_samples: Vec<TelemetrySample<F>> = samples
        .iter()
        .map(|s| TelemetrySample {
            t: rebase(s.t_us, t0_us),
            gpu_util: s.gpu_util,
            mem_used: s.mem_used,
            power: s.power,
            sm_clock: s.sm_clock,
            temperature: s.temperature,
            fps: None,
        })
        .collect();

    // Nearest-neighbor FPS attachment on absolute µs, so translation
    // invariance is exact integer arithmetic.
    let half_interval = interval_us / 2;
    for reading in fps_log {
        let idx = samples.partition_point(|s| s.t_us < reading.t_us);
        let mut best: Option<(usize, i64)> = None;
        for cand in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
            if cand >= samples.len() {
                continue;
            }
            let dist = (samples[cand].t_us - reading.t_us).abs();
            let closer = match best {
                None => true,
                Some((_, d)) => dist < d,
            };
            if closer {
                best = Some((cand, dist));
            }
        }
        if let Some((i, dist)) = best {
            if dist <= half_interval {
                out_samples[i].fps = Some(reading.fps);
            }
        }
    }

    let out_kernels: Vec<KernelRecord<F>> = kernels
        .iter()
        .map(|k| KernelRecord {
            t: rebase(k.t_us, t0_us),
            kernel_name: k.kernel_name.clone(),
            duration_us: k.duration_us,
            sm_throughput: k.sm_throughput,
            dram_throughput: k.dram_throughput,
            sm_freq: k.sm_freq,
        })
        .collect();

    let labels = match labels {
        Some(l) => l.to_vec(),
        None => vec![Label::Benign; out_samples.len()],
    };

    Ok(Trace {
        meta: TraceMeta::ingested("ingested", rebase::<F>(t0_us + interval_us, t0_us)),
        samples: out_samples,
        kernels: out_kernels,
        labels,
    })
}

/// Mean sample spacing in seconds over a sample slice (for window spans).
pub(crate) fn mean_spacing<F: Scalar>(samples: &[TelemetrySample<F>]) -> F {
    if samples.len() < 2 {
        return F::zero();
    }
    let span = samples[samples.len() - 1].t - samples[0].t;
    span / from_usize::<F>(samples.len() - 1)
}
