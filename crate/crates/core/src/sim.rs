//! Synthetic trace generator calibrated to the measured benign and
//! miner-active operating regimes, for hardware-free experiments.
//!
//! Noise model: independent per-sample Gaussian draws clipped to per-channel
//! bounds. During the onset ramp, channel means and stds interpolate linearly
//! from benign to miner while the clip bounds switch to the miner regime at
//! onset, so every sample labeled miner stays inside the miner operating
//! envelope (notably power inside its hard range).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{from_usize, parse_scalar, Scalar};
use crate::trace::{KernelRecord, Label, TelemetrySample, Trace, TraceMeta};

/// RNG algorithm identifier stored in trace metadata for reproducibility.
pub const RNG_ALGO: &str = "chacha8";

const SIM_KERNEL_NAME: &str = "sim_kernel";

/// Gaussian parameters and clip bounds for one telemetry channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams<F> {
    pub mean: F,
    pub std: F,
    pub min: F,
    pub max: F,
}

impl<F: Scalar> ChannelParams<F> {
    pub fn new(mean: F, std: F, min: F, max: F) -> Self {
        ChannelParams {
            mean,
            std,
            min,
            max,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> F {
        let z = F::standard_normal(rng);
        (self.mean + self.std * z).max(self.min).min(self.max)
    }

    /// Linear interpolation of mean/std toward `target`; clip bounds come
    /// from the target regime.
    fn blend_toward(&self, target: &ChannelParams<F>, alpha: F) -> ChannelParams<F> {
        ChannelParams {
            mean: self.mean + (target.mean - self.mean) * alpha,
            std: self.std + (target.std - self.std) * alpha,
            min: target.min,
            max: target.max,
        }
    }
}

/// Per-channel distributions of one operating regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams<F> {
    pub fps: ChannelParams<F>,
    pub power: ChannelParams<F>,
    pub gpu_util: ChannelParams<F>,
    pub mem_used: ChannelParams<F>,
    pub sm_clock: ChannelParams<F>,
    pub temperature: ChannelParams<F>,
    pub duration_us: ChannelParams<F>,
    pub sm_throughput: ChannelParams<F>,
    pub dram_throughput: ChannelParams<F>,
}

pub const REGIME_CHANNELS: [&str; 9] = [
    "fps",
    "power",
    "gpu_util",
    "mem_used",
    "sm_clock",
    "temperature",
    "duration_us",
    "sm_throughput",
    "dram_throughput",
];

impl<F: Scalar> RegimeParams<F> {
    pub fn channel(&self, name: &str) -> Option<&ChannelParams<F>> {
        match name {
            "fps" => Some(&self.fps),
            "power" => Some(&self.power),
            "gpu_util" => Some(&self.gpu_util),
            "mem_used" => Some(&self.mem_used),
            "sm_clock" => Some(&self.sm_clock),
            "temperature" => Some(&self.temperature),
            "duration_us" => Some(&self.duration_us),
            "sm_throughput" => Some(&self.sm_throughput),
            "dram_throughput" => Some(&self.dram_throughput),
            _ => None,
        }
    }

    pub fn channel_mut(&mut self, name: &str) -> Option<&mut ChannelParams<F>> {
        match name {
            "fps" => Some(&mut self.fps),
            "power" => Some(&mut self.power),
            "gpu_util" => Some(&mut self.gpu_util),
            "mem_used" => Some(&mut self.mem_used),
            "sm_clock" => Some(&mut self.sm_clock),
            "temperature" => Some(&mut self.temperature),
            "duration_us" => Some(&mut self.duration_us),
            "sm_throughput" => Some(&mut self.sm_throughput),
            "dram_throughput" => Some(&mut self.dram_throughput),
            _ => None,
        }
    }

    // negated comparisons are load-bearing: NaN must count as a violation
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, prefix: &str) -> Vec<String> {
        let mut violations = Vec::new();
        let zero = F::zero();
        let hundred = F::from_f64(100.0).unwrap();
        let percent_channels = ["gpu_util", "sm_throughput", "dram_throughput"];
        for name in REGIME_CHANNELS {
            let ch = self.channel(name).unwrap();
            if !(ch.std >= zero) {
                violations.push(format!("{prefix}.{name}: std {} is negative", ch.std));
            }
            if !(ch.min <= ch.mean && ch.mean <= ch.max) {
                violations.push(format!(
                    "{prefix}.{name}: mean {} outside clip bounds [{}, {}]",
                    ch.mean, ch.min, ch.max
                ));
            }
            if percent_channels.contains(&name) && !(ch.min >= zero && ch.max <= hundred) {
                violations.push(format!(
                    "{prefix}.{name}: clip bounds [{}, {}] outside [0,100]",
                    ch.min, ch.max
                ));
            }
        }
        violations
    }
}

fn ch<F: Scalar>(mean: f64, std: f64, min: f64, max: f64) -> ChannelParams<F> {
    ChannelParams::new(
        F::from_f64(mean).unwrap(),
        F::from_f64(std).unwrap(),
        F::from_f64(min).unwrap(),
        F::from_f64(max).unwrap(),
    )
}

/// Benign regime: multi-stream video inference with no interference.
pub fn default_benign_params<F: Scalar>() -> RegimeParams<F> {
    RegimeParams {
        fps: ch(28.0, 1.0, 0.0, 240.0),
        power: ch(65.0, 4.0, 0.0, 200.0),
        gpu_util: ch(40.0, 8.0, 0.0, 100.0),
        mem_used: ch(2800.0, 100.0, 0.0, 8192.0),
        sm_clock: ch(1850.0, 30.0, 0.0, 2100.0),
        temperature: ch(62.0, 2.0, 0.0, 110.0),
        duration_us: ch(1800.0, 400.0, 1.0, 1_000_000.0),
        sm_throughput: ch(45.0, 12.0, 0.0, 100.0),
        dram_throughput: ch(15.0, 5.0, 0.0, 100.0),
    }
}

/// Miner-active regime: the same workload with a background cryptominer.
/// Compute saturates (util ~99%, SM throughput high and flat), memory and
/// power rise (power hard-clipped to its observed 95-159 W range), frame
/// rate halves, and SM frequency drops slightly under thermal pressure.
pub fn default_miner_params<F: Scalar>() -> RegimeParams<F> {
    RegimeParams {
        fps: ch(14.0, 1.0, 0.0, 240.0),
        power: ch(110.0, 12.0, 95.0, 159.0),
        gpu_util: ch(99.0, 0.5, 0.0, 100.0),
        mem_used: ch(3900.0, 80.0, 0.0, 8192.0),
        sm_clock: ch(1790.0, 25.0, 0.0, 2100.0),
        temperature: ch(76.0, 2.0, 0.0, 110.0),
        duration_us: ch(3500.0, 500.0, 1.0, 1_000_000.0),
        sm_throughput: ch(92.0, 2.0, 0.0, 100.0),
        dram_throughput: ch(38.0, 6.0, 0.0, 100.0),
    }
}

/// One simulation scenario: duration, sampling interval, optional miner
/// onset with a linear ramp, seed, and the two regimes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig<F> {
    pub duration_s: F,
    pub interval_s: F,
    pub miner_onset_s: Option<F>,
    pub ramp_s: F,
    pub seed: u64,
    pub benign: RegimeParams<F>,
    pub miner: RegimeParams<F>,
}

impl<F: Scalar> Default for ScenarioConfig<F> {
    fn default() -> Self {
        ScenarioConfig {
            duration_s: F::from_f64(600.0).unwrap(),
            interval_s: F::one(),
            miner_onset_s: None,
            ramp_s: F::from_f64(5.0).unwrap(),
            seed: 42,
            benign: default_benign_params(),
            miner: default_miner_params(),
        }
    }
}

impl<F: Scalar> ScenarioConfig<F> {
    /// Default mixed scenario: miner onset at half the duration.
    pub fn default_mixed() -> Self {
        ScenarioConfig {
            miner_onset_s: Some(F::from_f64(300.0).unwrap()),
            ..ScenarioConfig::default()
        }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > F::zero()) {
            return Err(Error::invalid("empty scenario"));
        }
        if !(self.interval_s > F::zero()) {
            return Err(Error::invalid("interval_s must be positive"));
        }
        if let Some(onset) = self.miner_onset_s {
            if !(onset >= F::zero() && onset < self.duration_s) {
                return Err(Error::invalid(format!(
                    "onset {onset} outside [0, {})",
                    self.duration_s
                )));
            }
        }
        if !(self.ramp_s >= F::zero()) {
            return Err(Error::invalid("ramp_s must be non-negative"));
        }
        let mut violations = self.benign.validate("benign");
        violations.extend(self.miner.validate("miner"));
        if !violations.is_empty() {
            return Err(Error::invalid(violations.join("; ")));
        }
        Ok(())
    }
}

enum Phase<F> {
    Benign,
    Ramp(F),
    Miner,
}

fn phase_at<F: Scalar>(cfg: &ScenarioConfig<F>, t: F) -> Phase<F> {
    match cfg.miner_onset_s {
        None => Phase::Benign,
        Some(onset) if t < onset => Phase::Benign,
        Some(onset) => {
            if cfg.ramp_s <= F::zero() {
                return Phase::Miner;
            }
            let alpha = (t - onset) / cfg.ramp_s;
            if alpha >= F::one() {
                Phase::Miner
            } else {
                Phase::Ramp(alpha)
            }
        }
    }
}

fn phase_regime<F: Scalar>(cfg: &ScenarioConfig<F>, phase: &Phase<F>) -> RegimeParams<F> {
    match phase {
        Phase::Benign => cfg.benign,
        Phase::Miner => cfg.miner,
        Phase::Ramp(alpha) => RegimeParams {
            fps: cfg.benign.fps.blend_toward(&cfg.miner.fps, *alpha),
            power: cfg.benign.power.blend_toward(&cfg.miner.power, *alpha),
            gpu_util: cfg
                .benign
                .gpu_util
                .blend_toward(&cfg.miner.gpu_util, *alpha),
            mem_used: cfg
                .benign
                .mem_used
                .blend_toward(&cfg.miner.mem_used, *alpha),
            sm_clock: cfg
                .benign
                .sm_clock
                .blend_toward(&cfg.miner.sm_clock, *alpha),
            temperature: cfg
                .benign
                .temperature
                .blend_toward(&cfg.miner.temperature, *alpha),
            duration_us: cfg
                .benign
                .duration_us
                .blend_toward(&cfg.miner.duration_us, *alpha),
            sm_throughput: cfg
                .benign
                .sm_throughput
                .blend_toward(&cfg.miner.sm_throughput, *alpha),
            dram_throughput: cfg
                .benign
                .dram_throughput
                .blend_toward(&cfg.miner.dram_throughput, *alpha),
        },
    }
}

/// Generates a labeled trace: ⌊duration/interval⌋ samples plus one kernel
/// record per sample, deterministic for a fixed config and seed.
///
/// Draw order per sample (fixed for reproducibility): fps, power, gpu_util,
/// mem_used, sm_clock, temperature, then kernel duration, SM throughput,
/// DRAM throughput, and SM frequency (an independent draw from the sm_clock
/// channel).
pub fn simulate_trace<F: Scalar>(cfg: &ScenarioConfig<F>) -> Result<Trace<F>> {
    cfg.validate()?;
    let n = (cfg.duration_s / cfg.interval_s)
        .floor()
        .to_usize()
        .unwrap_or(0);
    if n == 0 {
        return Err(Error::invalid("empty scenario"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = Vec::with_capacity(n);
    let mut kernels = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);

    for i in 0..n {
        let t = from_usize::<F>(i) * cfg.interval_s;
        let phase = phase_at(cfg, t);
        let regime = phase_regime(cfg, &phase);

        samples.push(TelemetrySample {
            t,
            fps: Some(regime.fps.draw(&mut rng)),
            power: regime.power.draw(&mut rng),
            gpu_util: regime.gpu_util.draw(&mut rng),
            mem_used: regime.mem_used.draw(&mut rng),
            sm_clock: regime.sm_clock.draw(&mut rng),
            temperature: regime.temperature.draw(&mut rng),
        });
        kernels.push(KernelRecord {
            t,
            kernel_name: SIM_KERNEL_NAME.to_string(),
            duration_us: regime.duration_us.draw(&mut rng),
            sm_throughput: regime.sm_throughput.draw(&mut rng),
            dram_throughput: regime.dram_throughput.draw(&mut rng),
            sm_freq: regime.sm_clock.draw(&mut rng),
        });
        labels.push(match cfg.miner_onset_s {
            Some(onset) if t >= onset => Label::Miner,
            _ => Label::Benign,
        });
    }

    let description = match cfg.miner_onset_s {
        None => format!("benign-only, {n} samples @ {} s", cfg.interval_s),
        Some(onset) => format!(
            "miner onset {onset} s, ramp {} s, {n} samples @ {} s",
            cfg.ramp_s, cfg.interval_s
        ),
    };

    Ok(Trace {
        meta: TraceMeta {
            scenario: "sim".to_string(),
            seed: cfg.seed,
            interval_s: cfg.interval_s,
            rng_algo: RNG_ALGO.to_string(),
            description,
        },
        samples,
        kernels,
        labels,
    })
}

fn blended<F: Scalar>(original: F, draw: F, alpha: F) -> F {
    if alpha >= F::one() {
        draw
    } else {
        original + (draw - original) * alpha
    }
}

/// Contaminates an existing trace with miner activity from `onset_s` on.
///
/// Samples and kernel records before the onset are bit-identical to the
/// input. At and after onset, each value moves from the recorded one toward a
/// fresh miner-regime draw, fully replaced once the ramp completes. Labels
/// flip to miner at onset.
// NaN onset/ramp must fail these checks
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn inject_miner<F: Scalar>(
    trace: &Trace<F>,
    onset_s: F,
    miner: &RegimeParams<F>,
    ramp_s: F,
    seed: u64,
) -> Result<Trace<F>> {
    let last_t = trace
        .samples
        .last()
        .map(|s| s.t)
        .ok_or_else(|| Error::invalid("cannot inject into an empty trace"))?;
    if !(onset_s >= F::zero() && onset_s <= last_t) {
        return Err(Error::invalid(format!(
            "onset {onset_s} beyond trace end {last_t}"
        )));
    }
    if !(ramp_s >= F::zero()) {
        return Err(Error::invalid("ramp_s must be non-negative"));
    }
    let violations = miner.validate("miner");
    if !violations.is_empty() {
        return Err(Error::invalid(violations.join("; ")));
    }

    let alpha_at = |t: F| -> F {
        if ramp_s <= F::zero() {
            F::one()
        } else {
            ((t - onset_s) / ramp_s).min(F::one())
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = trace.clone();

    for (sample, label) in out.samples.iter_mut().zip(out.labels.iter_mut()) {
        if sample.t < onset_s {
            continue;
        }
        let alpha = alpha_at(sample.t);
        // fps drawn unconditionally to keep the draw stream independent of
        // which samples carry fps readings.
        let fps_draw = miner.fps.draw(&mut rng);
        if let Some(fps) = sample.fps {
            sample.fps = Some(blended(fps, fps_draw, alpha));
        }
        sample.power = blended(sample.power, miner.power.draw(&mut rng), alpha);
        sample.gpu_util = blended(sample.gpu_util, miner.gpu_util.draw(&mut rng), alpha);
        sample.mem_used = blended(sample.mem_used, miner.mem_used.draw(&mut rng), alpha);
        sample.sm_clock = blended(sample.sm_clock, miner.sm_clock.draw(&mut rng), alpha);
        sample.temperature = blended(sample.temperature, miner.temperature.draw(&mut rng), alpha);
        *label = Label::Miner;
    }

    for kernel in out.kernels.iter_mut() {
        if kernel.t < onset_s {
            continue;
        }
        let alpha = alpha_at(kernel.t);
        kernel.duration_us = blended(kernel.duration_us, miner.duration_us.draw(&mut rng), alpha);
        kernel.sm_throughput = blended(
            kernel.sm_throughput,
            miner.sm_throughput.draw(&mut rng),
            alpha,
        );
        kernel.dram_throughput = blended(
            kernel.dram_throughput,
            miner.dram_throughput.draw(&mut rng),
            alpha,
        );
        kernel.sm_freq = blended(kernel.sm_freq, miner.sm_clock.draw(&mut rng), alpha);
    }

    if out.meta.description.is_empty() {
        out.meta.description = format!("miner injected at {onset_s} s (seed {seed})");
    } else {
        out.meta.description = format!(
            "{}; miner injected at {onset_s} s (seed {seed})",
            out.meta.description
        );
    }
    Ok(out)
}

/// Generates a labeled training corpus: `n_benign` benign-only traces, then
/// `n_mixed` traces with a miner onset.
///
/// All draws come from one master ChaCha8 stream seeded with `seed`: one seed
/// per benign trace, then per mixed trace an onset (uniform over the middle
/// 60% of the duration, skipped when `base.miner_onset_s` pins one) followed
/// by the trace seed. Scenario ids are `benign-NNN` / `mixed-NNN`.
pub fn make_corpus<F: Scalar>(
    n_benign: usize,
    n_mixed: usize,
    base: &ScenarioConfig<F>,
    seed: u64,
) -> Result<Vec<Trace<F>>> {
    if n_benign + n_mixed == 0 {
        return Err(Error::invalid("zero traces requested"));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut traces = Vec::with_capacity(n_benign + n_mixed);
    for i in 0..n_benign {
        let cfg = ScenarioConfig {
            miner_onset_s: None,
            seed: master.next_u64(),
            ..base.clone()
        };
        let mut trace = simulate_trace(&cfg)?;
        trace.meta.scenario = format!("benign-{i:03}");
        traces.push(trace);
    }
    let lo = F::from_f64(0.2).unwrap() * base.duration_s;
    let hi = F::from_f64(0.8).unwrap() * base.duration_s;
    for i in 0..n_mixed {
        let onset = match base.miner_onset_s {
            Some(onset) => onset,
            None => master.random_range(lo..hi),
        };
        let cfg = ScenarioConfig {
            miner_onset_s: Some(onset),
            seed: master.next_u64(),
            ..base.clone()
        };
        let mut trace = simulate_trace(&cfg)?;
        trace.meta.scenario = format!("mixed-{i:03}");
        traces.push(trace);
    }
    Ok(traces)
}

const REGIME_FIELDS: [&str; 4] = ["mean", "std", "min", "max"];

fn channel_field<F: Scalar>(ch: &ChannelParams<F>, field: &str) -> F {
    match field {
        "mean" => ch.mean,
        "std" => ch.std,
        "min" => ch.min,
        "max" => ch.max,
        _ => unreachable!(),
    }
}

/// Renders a scenario as the flat key-value config file format.
pub fn render_scenario_config<F: Scalar>(cfg: &ScenarioConfig<F>) -> String {
    let mut out = String::from("# gpu-sentinel scenario\n");
    out.push_str(&format!("duration_s = {}\n", cfg.duration_s));
    out.push_str(&format!("interval_s = {}\n", cfg.interval_s));
    match cfg.miner_onset_s {
        Some(onset) => out.push_str(&format!("onset_s = {onset}\n")),
        None => out.push_str("onset_s = none\n"),
    }
    out.push_str(&format!("ramp_s = {}\n", cfg.ramp_s));
    out.push_str(&format!("seed = {}\n", cfg.seed));
    for (regime_name, regime) in [("benign", &cfg.benign), ("miner", &cfg.miner)] {
        for channel in REGIME_CHANNELS {
            let ch = regime.channel(channel).unwrap();
            for field in REGIME_FIELDS {
                out.push_str(&format!(
                    "{regime_name}.{channel}.{field} = {}\n",
                    channel_field(ch, field)
                ));
            }
        }
    }
    out
}

/// Parses the flat key-value scenario format on top of `base`; every key is
/// optional and overrides the base value.
pub fn parse_scenario_config<F: Scalar>(
    text: &str,
    base: &ScenarioConfig<F>,
) -> Result<ScenarioConfig<F>> {
    let mut cfg = base.clone();
    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::parse(line_no, "expected 'key = value'"))?;
        let scalar = |v: &str| -> Result<F> {
            parse_scalar(v).ok_or_else(|| Error::parse(line_no, format!("invalid value '{v}'")))
        };
        match key {
            "duration_s" => cfg.duration_s = scalar(value)?,
            "interval_s" => cfg.interval_s = scalar(value)?,
            "ramp_s" => cfg.ramp_s = scalar(value)?,
            "onset_s" => {
                cfg.miner_onset_s = if value == "none" {
                    None
                } else {
                    Some(scalar(value)?)
                };
            }
            "seed" => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("invalid seed '{value}'")))?;
            }
            _ => {
                let mut parts = key.split('.');
                let (regime, channel, field) =
                    match (parts.next(), parts.next(), parts.next(), parts.next()) {
                        (Some(r), Some(c), Some(f), None) => (r, c, f),
                        _ => return Err(Error::parse(line_no, format!("unknown key '{key}'"))),
                    };
                if !REGIME_FIELDS.contains(&field) {
                    return Err(Error::parse(line_no, format!("unknown key '{key}'")));
                }
                let params = match regime {
                    "benign" => &mut cfg.benign,
                    "miner" => &mut cfg.miner,
                    _ => return Err(Error::parse(line_no, format!("unknown key '{key}'"))),
                };
                let ch = params
                    .channel_mut(channel)
                    .ok_or_else(|| Error::parse(line_no, format!("unknown key '{key}'")))?;
                let v = scalar(value)?;
                match field {
                    "mean" => ch.mean = v,
                    "std" => ch.std = v,
                    "min" => ch.min = v,
                    "max" => ch.max = v,
                    _ => unreachable!(),
                }
            }
        }
    }
    Ok(cfg)
}
