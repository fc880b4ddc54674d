//! Parsers for the external log formats and the canonical on-disk trace file.
//!
//! External formats (all line-oriented text):
//! - sampler CSV: `YYYY/MM/DD HH:MM:SS.mmm, <util>, <mem>, <power>, <clock>, <temp>`
//!   (the output shape of a device-sampler query such as
//!   `nvidia-smi --query-gpu=timestamp,utilization.gpu,memory.used,power.draw,clocks.sm,temperature.gpu --format=csv,noheader,nounits`)
//! - kernel CSV: `kernel_name,timestamp,duration_us,sm_throughput_pct,dram_throughput_pct,sm_freq_mhz`
//!   with RFC-4180 quoting for the kernel name
//! - FPS log: `timestamp,fps`
//! - labels file: one `0`/`1` per line, aligned to samples
//!
//! The canonical trace file (`GPUSENTINEL-TRACE v1`) is a self-describing
//! text format with a version line, a `[meta]` block, and `[samples]`,
//! `[kernels]`, `[labels]` sections; it is diffable and byte-deterministic.

use std::path::Path;

use chrono::NaiveDateTime;

use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar};
use crate::trace::{
    align_streams, FpsReading, KernelReading, KernelRecord, Label, SamplerReading, TelemetrySample,
    Trace, TraceMeta,
};

pub const TRACE_MAGIC: &str = "GPUSENTINEL-TRACE v1";
const TS_FMT: &str = "%Y/%m/%d %H:%M:%S%.3f";

const SAMPLES_HEADER: &str = "t,gpu_util,mem_used,power,sm_clock,temperature,fps";
const KERNELS_HEADER: &str = "kernel_name,t,duration_us,sm_throughput,dram_throughput,sm_freq";

/// Parses a wall-clock timestamp `YYYY/MM/DD HH:MM:SS.mmm` to µs since epoch.
pub fn parse_timestamp_us(text: &str) -> Option<i64> {
    NaiveDateTime::parse_from_str(text.trim(), TS_FMT)
        .ok()
        .map(|dt| dt.and_utc().timestamp_micros())
}

/// Formats µs since epoch back to `YYYY/MM/DD HH:MM:SS.mmm` (ms precision).
pub fn format_timestamp_us(t_us: i64) -> String {
    chrono::DateTime::from_timestamp_micros(t_us)
        .expect("timestamp in range")
        .naive_utc()
        .format(TS_FMT)
        .to_string()
}

/// Splits one CSV line into fields: RFC-4180 quoting, unquoted fields trimmed
/// of surrounding whitespace, whitespace around quoted fields tolerated.
fn split_csv_fields(line: &str) -> std::result::Result<Vec<String>, String> {
    let mut fields = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while matches!(chars.peek(), Some(' ' | '\t')) {
            chars.next();
        }
        if chars.peek() == Some(&'"') {
            chars.next();
            let mut field = String::new();
            loop {
                match chars.next() {
                    None => return Err("unterminated quoted field".to_string()),
                    Some('"') => {
                        if chars.peek() == Some(&'"') {
                            chars.next();
                            field.push('"');
                        } else {
                            break;
                        }
                    }
                    Some(c) => field.push(c),
                }
            }
            while matches!(chars.peek(), Some(' ' | '\t')) {
                chars.next();
            }
            match chars.next() {
                None => {
                    fields.push(field);
                    return Ok(fields);
                }
                Some(',') => fields.push(field),
                Some(c) => return Err(format!("unexpected '{c}' after quoted field")),
            }
        } else {
            let mut field = String::new();
            let mut at_end = false;
            loop {
                match chars.next() {
                    None => {
                        at_end = true;
                        break;
                    }
                    Some(',') => break,
                    Some(c) => field.push(c),
                }
            }
            fields.push(field.trim().to_string());
            if at_end {
                return Ok(fields);
            }
        }
    }
}

/// Quotes a kernel name for CSV output. Names are always quoted so that the
/// writer's output is byte-stable regardless of the name's content.
fn quote_name(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

fn expect_columns(fields: &[String], expected: usize, line: usize) -> Result<()> {
    if fields.len() != expected {
        return Err(Error::parse(
            line,
            format!("expected {expected} columns, found {}", fields.len()),
        ));
    }
    Ok(())
}

fn parse_field<F: Scalar>(fields: &[String], idx: usize, name: &str, line: usize) -> Result<F> {
    parse_scalar(&fields[idx])
        .ok_or_else(|| Error::parse(line, format!("invalid {name} '{}'", fields[idx])))
}

fn parse_ts_field(fields: &[String], idx: usize, line: usize) -> Result<i64> {
    parse_timestamp_us(&fields[idx])
        .ok_or_else(|| Error::parse(line, format!("invalid timestamp '{}'", fields[idx])))
}

/// Non-empty (line_number, content) pairs, 1-based.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Parses one sampler CSV data line (no header handling).
pub(crate) fn parse_sampler_line<F: Scalar>(
    line: &str,
    line_no: usize,
) -> Result<SamplerReading<F>> {
    let fields = split_csv_fields(line).map_err(|m| Error::parse(line_no, m))?;
    expect_columns(&fields, 6, line_no)?;
    Ok(SamplerReading {
        t_us: parse_ts_field(&fields, 0, line_no)?,
        gpu_util: parse_field(&fields, 1, "gpu_util", line_no)?,
        mem_used: parse_field(&fields, 2, "mem_used", line_no)?,
        power: parse_field(&fields, 3, "power", line_no)?,
        sm_clock: parse_field(&fields, 4, "sm_clock", line_no)?,
        temperature: parse_field(&fields, 5, "temperature", line_no)?,
    })
}

/// Parses a device-sampler CSV export. A leading header line is skipped when
/// its second field is not numeric.
pub fn parse_sampler_csv<F: Scalar>(text: &str) -> Result<Vec<SamplerReading<F>>> {
    let mut rows = Vec::new();
    let mut first = true;
    for (line_no, line) in content_lines(text) {
        if first {
            first = false;
            let fields = split_csv_fields(line).map_err(|m| Error::parse(line_no, m))?;
            if fields.len() >= 2 && parse_scalar::<F>(&fields[1]).is_none() {
                continue; // header
            }
        }
        rows.push(parse_sampler_line(line, line_no)?);
    }
    Ok(rows)
}

/// Parses a kernel-profiler CSV export. A leading header line is skipped when
/// its second field does not parse as a timestamp.
pub fn parse_kernel_csv<F: Scalar>(text: &str) -> Result<Vec<KernelReading<F>>> {
    let mut rows = Vec::new();
    let mut first = true;
    for (line_no, line) in content_lines(text) {
        let fields = split_csv_fields(line).map_err(|m| Error::parse(line_no, m))?;
        if first && fields.len() >= 2 && parse_timestamp_us(&fields[1]).is_none() {
            first = false;
            continue; // header
        }
        first = false;
        expect_columns(&fields, 6, line_no)?;
        rows.push(KernelReading {
            kernel_name: fields[0].clone(),
            t_us: parse_ts_field(&fields, 1, line_no)?,
            duration_us: parse_field(&fields, 2, "duration_us", line_no)?,
            sm_throughput: parse_field(&fields, 3, "sm_throughput_pct", line_no)?,
            dram_throughput: parse_field(&fields, 4, "dram_throughput_pct", line_no)?,
            sm_freq: parse_field(&fields, 5, "sm_freq_mhz", line_no)?,
        });
    }
    Ok(rows)
}

/// Parses an application FPS log (`timestamp,fps`). Negative fps is rejected.
pub fn parse_fps_log<F: Scalar>(text: &str) -> Result<Vec<FpsReading<F>>> {
    let mut rows = Vec::new();
    let mut first = true;
    for (line_no, line) in content_lines(text) {
        let fields = split_csv_fields(line).map_err(|m| Error::parse(line_no, m))?;
        if first && fields.len() >= 2 && parse_scalar::<F>(&fields[1]).is_none() {
            first = false;
            continue; // header
        }
        first = false;
        expect_columns(&fields, 2, line_no)?;
        let fps: F = parse_field(&fields, 1, "fps", line_no)?;
        if fps < F::zero() {
            return Err(Error::parse(line_no, format!("negative fps {fps}")));
        }
        rows.push(FpsReading {
            t_us: parse_ts_field(&fields, 0, line_no)?,
            fps,
        });
    }
    Ok(rows)
}

/// Parses a labels file: one `0`/`1` per line.
pub fn parse_labels(text: &str) -> Result<Vec<Label>> {
    let mut labels = Vec::new();
    for (line_no, line) in content_lines(text) {
        let bit = line
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(Label::from_bit)
            .ok_or_else(|| {
                Error::parse(
                    line_no,
                    format!("invalid label '{}' (expected 0 or 1)", line.trim()),
                )
            })?;
        labels.push(bit);
    }
    Ok(labels)
}

pub fn format_sampler_row<F: Scalar>(row: &SamplerReading<F>) -> String {
    format!(
        "{}, {}, {}, {}, {}, {}",
        format_timestamp_us(row.t_us),
        row.gpu_util,
        row.mem_used,
        row.power,
        row.sm_clock,
        row.temperature
    )
}

pub fn format_kernel_row<F: Scalar>(row: &KernelReading<F>) -> String {
    format!(
        "{},{},{},{},{},{}",
        quote_name(&row.kernel_name),
        format_timestamp_us(row.t_us),
        row.duration_us,
        row.sm_throughput,
        row.dram_throughput,
        row.sm_freq
    )
}

pub fn format_fps_row<F: Scalar>(row: &FpsReading<F>) -> String {
    format!("{},{}", format_timestamp_us(row.t_us), row.fps)
}

fn render_lines<T>(rows: &[T], f: impl Fn(&T) -> String) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&f(row));
        out.push('\n');
    }
    out
}

pub fn render_sampler_csv<F: Scalar>(rows: &[SamplerReading<F>]) -> String {
    render_lines(rows, format_sampler_row)
}

pub fn render_kernel_csv<F: Scalar>(rows: &[KernelReading<F>]) -> String {
    render_lines(rows, format_kernel_row)
}

pub fn render_fps_log<F: Scalar>(rows: &[FpsReading<F>]) -> String {
    render_lines(rows, format_fps_row)
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads and aligns a trace from a sampler log plus optional kernel, FPS, and
/// label files. Labels default to all-benign.
pub fn load_trace<F: Scalar>(
    sampler_path: &Path,
    kernel_path: Option<&Path>,
    fps_path: Option<&Path>,
    labels_path: Option<&Path>,
) -> Result<Trace<F>> {
    let samples = parse_sampler_csv::<F>(&read_file(sampler_path)?)?;
    let kernels = match kernel_path {
        Some(p) => parse_kernel_csv::<F>(&read_file(p)?)?,
        None => Vec::new(),
    };
    let fps = match fps_path {
        Some(p) => parse_fps_log::<F>(&read_file(p)?)?,
        None => Vec::new(),
    };
    let labels = match labels_path {
        Some(p) => Some(parse_labels(&read_file(p)?)?),
        None => None,
    };
    let mut trace = align_streams(&samples, &kernels, &fps, labels.as_deref())?;
    if let Some(stem) = sampler_path.file_stem().and_then(|s| s.to_str()) {
        trace.meta.scenario = stem.to_string();
    }
    Ok(trace)
}

fn check_single_line(value: &str, what: &str) -> Result<()> {
    if value.contains('\n') || value != value.trim() {
        return Err(Error::invalid(format!(
            "{what} must be single-line without surrounding whitespace"
        )));
    }
    Ok(())
}

/// Serializes a trace to the canonical text format. Pure function of the
/// trace, so repeated saves are byte-identical.
pub fn to_canonical_string<F: Scalar>(trace: &Trace<F>) -> Result<String> {
    check_single_line(&trace.meta.scenario, "scenario")?;
    check_single_line(&trace.meta.description, "description")?;
    check_single_line(&trace.meta.rng_algo, "rng")?;
    let mut out = String::new();
    out.push_str(TRACE_MAGIC);
    out.push('\n');
    out.push_str("[meta]\n");
    out.push_str(&format!("scenario = {}\n", trace.meta.scenario));
    out.push_str(&format!("seed = {}\n", trace.meta.seed));
    out.push_str(&format!("interval_s = {}\n", trace.meta.interval_s));
    out.push_str(&format!("rng = {}\n", trace.meta.rng_algo));
    if trace.meta.description.is_empty() {
        out.push_str("description =\n");
    } else {
        out.push_str(&format!("description = {}\n", trace.meta.description));
    }
    out.push_str("[samples]\n");
    out.push_str(SAMPLES_HEADER);
    out.push('\n');
    for s in &trace.samples {
        let fps = s.fps.map(|f| f.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.t, s.gpu_util, s.mem_used, s.power, s.sm_clock, s.temperature, fps
        ));
    }
    out.push_str("[kernels]\n");
    out.push_str(KERNELS_HEADER);
    out.push('\n');
    for k in &trace.kernels {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            quote_name(&k.kernel_name),
            k.t,
            k.duration_us,
            k.sm_throughput,
            k.dram_throughput,
            k.sm_freq
        ));
    }
    out.push_str("[labels]\n");
    for l in &trace.labels {
        out.push_str(&format!("{}\n", l.bit()));
    }
    Ok(out)
}

fn meta_value(line: &str) -> Option<(&str, &str)> {
    let (key, rest) = line.split_once('=')?;
    Some((key.trim_end(), rest.strip_prefix(' ').unwrap_or(rest)))
}

/// Parses the canonical text format produced by [`to_canonical_string`].
pub fn parse_canonical<F: Scalar>(text: &str) -> Result<Trace<F>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, magic) = lines.next().ok_or_else(|| Error::format("empty file"))?;
    if magic != TRACE_MAGIC {
        if magic.starts_with("GPUSENTINEL-TRACE") {
            return Err(Error::format(format!("unsupported version '{magic}'")));
        }
        return Err(Error::format("not a canonical trace file"));
    }

    let mut meta = TraceMeta::<F>::ingested("", F::one());
    let mut samples: Vec<TelemetrySample<F>> = Vec::new();
    let mut kernels: Vec<KernelRecord<F>> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();

    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        Start,
        Meta,
        Samples,
        Kernels,
        Labels,
    }
    let mut section = Section::Start;
    let mut expect_header: Option<&str> = None;

    for (line_no, line) in lines {
        match line {
            "[meta]" => {
                section = Section::Meta;
                continue;
            }
            "[samples]" => {
                section = Section::Samples;
                expect_header = Some(SAMPLES_HEADER);
                continue;
            }
            "[kernels]" => {
                section = Section::Kernels;
                expect_header = Some(KERNELS_HEADER);
                continue;
            }
            "[labels]" => {
                section = Section::Labels;
                continue;
            }
            _ => {}
        }
        if line.trim().is_empty() {
            continue;
        }
        if let Some(header) = expect_header.take() {
            if line != header {
                return Err(Error::parse(line_no, format!("expected header '{header}'")));
            }
            continue;
        }
        match section {
            Section::Start => return Err(Error::parse(line_no, "expected '[meta]'".to_string())),
            Section::Meta => {
                let (key, value) = meta_value(line)
                    .ok_or_else(|| Error::parse(line_no, "expected 'key = value'"))?;
                match key.trim() {
                    "scenario" => meta.scenario = value.to_string(),
                    "seed" => {
                        meta.seed = value.trim().parse().map_err(|_| {
                            Error::parse(line_no, format!("invalid seed '{value}'"))
                        })?;
                    }
                    "interval_s" => {
                        meta.interval_s = parse_scalar(value).ok_or_else(|| {
                            Error::parse(line_no, format!("invalid interval_s '{value}'"))
                        })?;
                    }
                    "rng" => meta.rng_algo = value.to_string(),
                    "description" => meta.description = value.to_string(),
                    other => {
                        return Err(Error::parse(line_no, format!("unknown meta key '{other}'")))
                    }
                }
            }
            Section::Samples => {
                let fields = split_csv_fields(line).map_err(|m| Error::parse(line_no, m))?;
                expect_columns(&fields, 7, line_no)?;
                let fps = if fields[6].is_empty() {
                    None
                } else {
                    Some(parse_field(&fields, 6, "fps", line_no)?)
                };
                samples.push(TelemetrySample {
                    t: parse_field(&fields, 0, "t", line_no)?,
                    gpu_util: parse_field(&fields, 1, "gpu_util", line_no)?,
                    mem_used: parse_field(&fields, 2, "mem_used", line_no)?,
                    power: parse_field(&fields, 3, "power", line_no)?,
                    sm_clock: parse_field(&fields, 4, "sm_clock", line_no)?,
                    temperature: parse_field(&fields, 5, "temperature", line_no)?,
                    fps,
                });
            }
            Section::Kernels => {
                let fields = split_csv_fields(line).map_err(|m| Error::parse(line_no, m))?;
                expect_columns(&fields, 6, line_no)?;
                kernels.push(KernelRecord {
                    kernel_name: fields[0].clone(),
                    t: parse_field(&fields, 1, "t", line_no)?,
                    duration_us: parse_field(&fields, 2, "duration_us", line_no)?,
                    sm_throughput: parse_field(&fields, 3, "sm_throughput", line_no)?,
                    dram_throughput: parse_field(&fields, 4, "dram_throughput", line_no)?,
                    sm_freq: parse_field(&fields, 5, "sm_freq", line_no)?,
                });
            }
            Section::Labels => {
                let bit = line
                    .trim()
                    .parse::<u8>()
                    .ok()
                    .and_then(Label::from_bit)
                    .ok_or_else(|| Error::parse(line_no, format!("invalid label '{line}'")))?;
                labels.push(bit);
            }
        }
    }

    if labels.len() != samples.len() {
        return Err(Error::format(format!(
            "label count {} does not match sample count {}",
            labels.len(),
            samples.len()
        )));
    }

    Ok(Trace {
        meta,
        samples,
        kernels,
        labels,
    })
}

pub fn save_trace<F: Scalar>(trace: &Trace<F>, path: &Path) -> Result<()> {
    let text = to_canonical_string(trace)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_canonical<F: Scalar>(path: &Path) -> Result<Trace<F>> {
    parse_canonical(&read_file(path)?)
}
