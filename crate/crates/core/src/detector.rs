//! Online detection over a growing telemetry stream: model-based scoring of
//! sliding windows, a rule-based threshold baseline, and debounced alerts.
//!
//! Stream contract: one producer pushes samples and kernel records in time
//! order, kernel records no later than the first sample at or past their
//! timestamp ([`replay_trace`] interleaves a recorded trace that way). Each
//! completed window is scored once, in order, and never re-emitted, so
//! replaying a recorded trace yields verdicts identical to batch feature
//! extraction plus prediction.

use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::classifiers::{predict_score, Model};
use crate::error::{Error, Result};
use crate::features::{extract_window_features, feature_names, window_end_t, Window, WindowSpec};
use crate::ingest::parse_sampler_line;
use crate::scalar::{from_usize, Scalar};
use crate::trace::{KernelRecord, Label, TelemetrySample, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictSource {
    Model,
    Rules,
}

impl std::fmt::Display for VerdictSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VerdictSource::Model => "model",
            VerdictSource::Rules => "rules",
        })
    }
}

/// Per-window detection outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionVerdict<F> {
    pub window_start_t: F,
    pub window_end_t: F,
    pub score: F,
    pub label: Label,
    pub source: VerdictSource,
}

/// Raised after `consecutive_positives` positive verdicts in a row.
#[derive(Debug, Clone, PartialEq)]
pub struct AlertEvent<F> {
    pub t_raised: F,
    pub consecutive_positives: usize,
    pub verdicts: Vec<DetectionVerdict<F>>,
}

/// Sustained-load thresholds for the rule-based baseline, placed between the
/// benign (~40%, 65 W) and miner (99%, 95+ W) operating points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleThresholds<F> {
    pub min_gpu_util: F,
    pub min_power: F,
    pub min_sustain_s: F,
}

impl<F: Scalar> Default for RuleThresholds<F> {
    fn default() -> Self {
        RuleThresholds {
            min_gpu_util: F::from_f64(95.0).unwrap(),
            min_power: F::from_f64(85.0).unwrap(),
            min_sustain_s: F::from_f64(60.0).unwrap(),
        }
    }
}

/// Labels a window positive iff every sample sustains both thresholds; the
/// score is the fraction of samples meeting them. The window must span at
/// least `min_sustain_s` seconds.
pub fn rule_detect<F: Scalar>(
    samples: &[TelemetrySample<F>],
    thresholds: &RuleThresholds<F>,
) -> Result<DetectionVerdict<F>> {
    if samples.is_empty() {
        return Err(Error::invalid("empty window"));
    }
    let start_t = samples[0].t;
    let end_t = window_end_t(samples);
    let span = end_t - start_t;
    if span < thresholds.min_sustain_s {
        return Err(Error::invalid(format!(
            "window spans {span} s, below sustain threshold {} s",
            thresholds.min_sustain_s
        )));
    }
    let met = samples
        .iter()
        .filter(|s| s.gpu_util >= thresholds.min_gpu_util && s.power >= thresholds.min_power)
        .count();
    let label = if met == samples.len() {
        Label::Miner
    } else {
        Label::Benign
    };
    Ok(DetectionVerdict {
        window_start_t: start_t,
        window_end_t: end_t,
        score: from_usize::<F>(met) / from_usize(samples.len()),
        label,
        source: VerdictSource::Rules,
    })
}

/// Requires k consecutive positives to fire, then stays quiet until a
/// negative resets the run.
#[derive(Debug, Clone)]
pub struct Debouncer {
    k: usize,
    run: usize,
    fired: bool,
}

impl Debouncer {
    pub fn new(k: usize) -> Result<Debouncer> {
        if k == 0 {
            return Err(Error::invalid("debounce threshold must be at least 1"));
        }
        Ok(Debouncer {
            k,
            run: 0,
            fired: false,
        })
    }

    /// Feeds one verdict polarity; true means "raise an alert now".
    pub fn push(&mut self, positive: bool) -> bool {
        if !positive {
            self.run = 0;
            self.fired = false;
            return false;
        }
        self.run += 1;
        if self.run >= self.k && !self.fired {
            self.fired = true;
            return true;
        }
        false
    }

    pub fn run_length(&self) -> usize {
        self.run
    }
}

/// One item of a merged telemetry stream.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamItem<F> {
    Sample(TelemetrySample<F>),
    Kernel(KernelRecord<F>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutput<F> {
    pub verdict: DetectionVerdict<F>,
    pub alert: Option<AlertEvent<F>>,
}

enum Scorer<F> {
    Model(Box<Model<F>>),
    Rules(RuleThresholds<F>),
}

/// Incremental window detector over a pushed stream.
pub struct StreamDetector<F> {
    scorer: Scorer<F>,
    spec: WindowSpec,
    debounce: Debouncer,
    threshold: F,
    samples: Vec<TelemetrySample<F>>,
    kernels: Vec<KernelRecord<F>>,
    /// Count of samples dropped from the front of `samples`.
    consumed: usize,
    windows_emitted: usize,
    recent: Vec<DetectionVerdict<F>>,
}

impl<F: Scalar> StreamDetector<F> {
    pub fn with_model(model: Model<F>, spec: WindowSpec, debounce_k: usize) -> Result<Self> {
        if model.feature_names != feature_names() {
            return Err(Error::invalid(
                "model feature names do not match the windowed feature extractor",
            ));
        }
        Self::new(Scorer::Model(Box::new(model)), spec, debounce_k)
    }

    pub fn with_rules(
        thresholds: RuleThresholds<F>,
        spec: WindowSpec,
        debounce_k: usize,
    ) -> Result<Self> {
        Self::new(Scorer::Rules(thresholds), spec, debounce_k)
    }

    fn new(scorer: Scorer<F>, spec: WindowSpec, debounce_k: usize) -> Result<Self> {
        Ok(StreamDetector {
            scorer,
            spec,
            debounce: Debouncer::new(debounce_k)?,
            threshold: F::from_f64(0.5).unwrap(),
            samples: Vec::new(),
            kernels: Vec::new(),
            consumed: 0,
            windows_emitted: 0,
            recent: Vec::new(),
        })
    }

    pub fn push(&mut self, item: StreamItem<F>) -> Result<Option<DetectionOutput<F>>> {
        match item {
            StreamItem::Kernel(k) => {
                self.kernels.push(k);
                Ok(None)
            }
            StreamItem::Sample(s) => self.push_sample(s),
        }
    }

    pub fn push_kernel(&mut self, kernel: KernelRecord<F>) {
        self.kernels.push(kernel);
    }

    pub fn push_sample(
        &mut self,
        sample: TelemetrySample<F>,
    ) -> Result<Option<DetectionOutput<F>>> {
        self.samples.push(sample);
        let total = self.consumed + self.samples.len();
        if total < self.spec.width || !(total - self.spec.width).is_multiple_of(self.spec.stride) {
            return Ok(None);
        }

        let window_samples = &self.samples[self.samples.len() - self.spec.width..];
        let start_t = window_samples[0].t;
        let end_t = window_end_t(window_samples);

        let verdict = match &self.scorer {
            Scorer::Rules(thresholds) => rule_detect(window_samples, thresholds)?,
            Scorer::Model(model) => {
                let klo = self.kernels.partition_point(|k| k.t < start_t);
                let khi = self.kernels.partition_point(|k| k.t < end_t);
                let fv = extract_window_features(&Window {
                    samples: window_samples,
                    kernels: &self.kernels[klo..khi],
                    start_t,
                    end_t,
                })?;
                let score = predict_score(model, &fv.values)?;
                DetectionVerdict {
                    window_start_t: start_t,
                    window_end_t: end_t,
                    score,
                    label: if score >= self.threshold {
                        Label::Miner
                    } else {
                        Label::Benign
                    },
                    source: VerdictSource::Model,
                }
            }
        };

        self.windows_emitted += 1;
        self.recent.push(verdict.clone());
        let keep = self.debounce.k;
        if self.recent.len() > keep {
            let drop = self.recent.len() - keep;
            self.recent.drain(..drop);
        }

        let alert = if self.debounce.push(verdict.label.is_miner()) {
            Some(AlertEvent {
                t_raised: verdict.window_end_t,
                consecutive_positives: self.debounce.run_length(),
                verdicts: self.recent.clone(),
            })
        } else {
            None
        };

        // prune buffers to what future windows need
        let next_start = self.windows_emitted * self.spec.stride;
        if next_start > self.consumed {
            let drop = (next_start - self.consumed).min(self.samples.len());
            self.samples.drain(..drop);
            self.consumed += drop;
        }
        if let Some(first) = self.samples.first() {
            let cut = self.kernels.partition_point(|k| k.t < first.t);
            self.kernels.drain(..cut);
        }

        Ok(Some(DetectionOutput { verdict, alert }))
    }
}

/// Interleaves a recorded trace into a time-ordered stream, kernel records
/// before the sample at an equal timestamp.
pub fn replay_trace<F: Scalar>(trace: &Trace<F>) -> Vec<StreamItem<F>> {
    let mut items = Vec::with_capacity(trace.samples.len() + trace.kernels.len());
    let mut ki = 0;
    for sample in &trace.samples {
        while ki < trace.kernels.len() && trace.kernels[ki].t <= sample.t {
            items.push(StreamItem::Kernel(trace.kernels[ki].clone()));
            ki += 1;
        }
        items.push(StreamItem::Sample(sample.clone()));
    }
    for kernel in &trace.kernels[ki..] {
        items.push(StreamItem::Kernel(kernel.clone()));
    }
    items
}

/// Verdicts and alerts produced by one full replay.
pub type DetectionRun<F> = (Vec<DetectionVerdict<F>>, Vec<AlertEvent<F>>);

/// Replays a recorded trace through a model-backed [`StreamDetector`].
pub fn detect_trace<F: Scalar>(
    model: &Model<F>,
    trace: &Trace<F>,
    spec: &WindowSpec,
    debounce_k: usize,
) -> Result<DetectionRun<F>> {
    let mut detector = StreamDetector::with_model(model.clone(), *spec, debounce_k)?;
    run_replay(&mut detector, trace)
}

/// Replays a recorded trace through a rules-backed [`StreamDetector`].
pub fn detect_trace_rules<F: Scalar>(
    thresholds: &RuleThresholds<F>,
    trace: &Trace<F>,
    spec: &WindowSpec,
    debounce_k: usize,
) -> Result<DetectionRun<F>> {
    let mut detector = StreamDetector::with_rules(*thresholds, *spec, debounce_k)?;
    run_replay(&mut detector, trace)
}

fn run_replay<F: Scalar>(
    detector: &mut StreamDetector<F>,
    trace: &Trace<F>,
) -> Result<DetectionRun<F>> {
    let mut verdicts = Vec::new();
    let mut alerts = Vec::new();
    for item in replay_trace(trace) {
        if let Some(output) = detector.push(item)? {
            verdicts.push(output.verdict);
            if let Some(alert) = output.alert {
                alerts.push(alert);
            }
        }
    }
    Ok((verdicts, alerts))
}

pub const ALERT_CSV_HEADER: &str =
    "t_raised,window_start,window_end,score,source,consecutive_positives";

/// One newline-free CSV record for the alert sink.
pub fn alert_csv_line<F: Scalar>(alert: &AlertEvent<F>) -> String {
    let last = alert.verdicts.last().expect("alert carries its verdicts");
    format!(
        "{},{},{},{},{},{}",
        alert.t_raised,
        last.window_start_t,
        last.window_end_t,
        last.score,
        last.source,
        alert.consecutive_positives
    )
}

/// One polled item from a tailed sampler log.
#[derive(Debug, Clone, PartialEq)]
pub enum TailItem<F> {
    Sample(TelemetrySample<F>),
    /// In-band stream error; the stream continues.
    Error {
        line: usize,
        message: String,
    },
}

/// Incremental reader of a growing sampler CSV file. Partial trailing lines
/// are deferred until newline-terminated; unparseable lines surface as
/// [`TailItem::Error`]. Timestamps are rebased to the first parsed line.
#[derive(Debug)]
pub struct TailFollower<F> {
    path: PathBuf,
    offset: u64,
    partial: String,
    line_no: usize,
    base_t_us: Option<i64>,
    last_t_us: Option<i64>,
    _scalar: std::marker::PhantomData<F>,
}

impl<F: Scalar> TailFollower<F> {
    /// Waits up to `grace` (polling every `poll`) for the file to appear.
    pub fn open(path: &Path, grace: Duration, poll: Duration) -> Result<TailFollower<F>> {
        let deadline = Instant::now() + grace;
        while !path.exists() {
            if Instant::now() >= deadline {
                return Err(Error::io(
                    path,
                    std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        format!("did not appear within {:.1} s", grace.as_secs_f64()),
                    ),
                ));
            }
            std::thread::sleep(poll);
        }
        Ok(TailFollower {
            path: path.to_path_buf(),
            offset: 0,
            partial: String::new(),
            line_no: 0,
            base_t_us: None,
            last_t_us: None,
            _scalar: std::marker::PhantomData,
        })
    }

    /// Drains newly appended complete lines. Non-blocking; call repeatedly.
    pub fn poll_once(&mut self) -> Result<Vec<TailItem<F>>> {
        let mut file = std::fs::File::open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        let len = file.metadata().map_err(|e| Error::io(&self.path, e))?.len();
        if len < self.offset {
            // truncated or rotated: start over
            self.offset = 0;
            self.partial.clear();
        }
        file.seek(SeekFrom::Start(self.offset))
            .map_err(|e| Error::io(&self.path, e))?;
        let mut buf = String::new();
        file.read_to_string(&mut buf)
            .map_err(|e| Error::io(&self.path, e))?;
        self.offset += buf.len() as u64;
        self.partial.push_str(&buf);

        let mut items = Vec::new();
        while let Some(newline) = self.partial.find('\n') {
            let line: String = self.partial.drain(..=newline).collect();
            let line = line.trim_end_matches(['\n', '\r']);
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            match parse_sampler_line::<F>(line, self.line_no) {
                Ok(reading) => {
                    if let Some(last) = self.last_t_us {
                        if reading.t_us <= last {
                            items.push(TailItem::Error {
                                line: self.line_no,
                                message: "timestamp moves backwards".to_string(),
                            });
                            continue;
                        }
                    }
                    let base = *self.base_t_us.get_or_insert(reading.t_us);
                    self.last_t_us = Some(reading.t_us);
                    items.push(TailItem::Sample(TelemetrySample {
                        t: F::from_f64((reading.t_us - base) as f64 / 1e6).unwrap(),
                        gpu_util: reading.gpu_util,
                        mem_used: reading.mem_used,
                        power: reading.power,
                        sm_clock: reading.sm_clock,
                        temperature: reading.temperature,
                        fps: None,
                    }));
                }
                Err(err) => {
                    // a leading header line is tolerated silently
                    if self.line_no == 1 {
                        continue;
                    }
                    items.push(TailItem::Error {
                        line: self.line_no,
                        message: err.to_string(),
                    });
                }
            }
        }
        Ok(items)
    }
}
