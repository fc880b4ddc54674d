//! Golden-file tests for the external log parsers and the canonical trace
//! format, over the fixture corpus in tests/fixtures/.

use std::path::{Path, PathBuf};

use gpu_sentinel::ingest::{
    load_trace, parse_canonical, parse_fps_log, parse_kernel_csv, parse_labels, parse_sampler_csv,
    render_fps_log, render_kernel_csv, render_sampler_csv, to_canonical_string,
};
use gpu_sentinel::trace::validate_trace;
use gpu_sentinel::{Error, Real};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

#[test]
fn sampler_fixture_round_trips_bit_exactly() {
    let text = read("sampler_good.csv");
    let rows = parse_sampler_csv::<Real>(&text).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(render_sampler_csv(&rows), text);
}

#[test]
fn kernel_fixture_round_trips_bit_exactly() {
    let text = read("kernel_good.csv");
    let rows = parse_kernel_csv::<Real>(&text).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1].kernel_name, "gemm, fused");
    assert_eq!(rows[2].kernel_name, "a\"b");
    assert_eq!(render_kernel_csv(&rows), text);
}

#[test]
fn fps_fixture_round_trips_bit_exactly() {
    let text = read("fps_good.csv");
    let rows = parse_fps_log::<Real>(&text).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(render_fps_log(&rows), text);
}

#[test]
fn labels_fixture_parses() {
    let labels = parse_labels(&read("labels_good.txt")).unwrap();
    assert_eq!(labels.len(), 4);
}

#[test]
fn malformed_fixtures_yield_line_numbered_errors() {
    let cases: Vec<(&str, Option<Error>, usize)> = vec![
        (
            "sampler_bad_columns.csv",
            parse_sampler_csv::<Real>(&read("sampler_bad_columns.csv")).err(),
            1,
        ),
        (
            "sampler_bad_number.csv",
            parse_sampler_csv::<Real>(&read("sampler_bad_number.csv")).err(),
            2,
        ),
        (
            "kernel_bad_quote.csv",
            parse_kernel_csv::<Real>(&read("kernel_bad_quote.csv")).err(),
            1,
        ),
        // line 1 is absorbed by the header heuristic; line 2 must fail
        (
            "kernel_bad_timestamp.csv",
            parse_kernel_csv::<Real>(&read("kernel_bad_timestamp.csv")).err(),
            2,
        ),
        (
            "fps_negative.csv",
            parse_fps_log::<Real>(&read("fps_negative.csv")).err(),
            2,
        ),
        (
            "fps_bad_columns.csv",
            parse_fps_log::<Real>(&read("fps_bad_columns.csv")).err(),
            1,
        ),
    ];
    for (name, err, expected_line) in cases {
        let err = err.unwrap_or_else(|| panic!("{name}: expected an error"));
        match err {
            Error::Parse { line, .. } => {
                assert_eq!(line, expected_line, "{name}: {err}")
            }
            other => panic!("{name}: expected a line-numbered parse error, got {other}"),
        }
    }
}

#[test]
fn full_fixture_set_loads_into_a_valid_trace() {
    let trace = load_trace::<Real>(
        &fixture("sampler_good.csv"),
        Some(&fixture("kernel_good.csv")),
        Some(&fixture("fps_good.csv")),
        Some(&fixture("labels_good.txt")),
    )
    .unwrap();
    assert_eq!(validate_trace(&trace), Vec::<String>::new());
    assert_eq!(trace.samples.len(), 4);
    assert_eq!(trace.kernels.len(), 3);
    assert!(trace.samples.iter().all(|s| s.fps.is_some()));

    let text = to_canonical_string(&trace).unwrap();
    let back = parse_canonical::<Real>(&text).unwrap();
    assert_eq!(trace, back);
    assert_eq!(text, to_canonical_string(&back).unwrap());
}
