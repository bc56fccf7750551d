//! End-to-end checks of the binary: exit codes, file layout, determinism,
//! and scoring output.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fueltrace"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn count_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn synth_writes_trace_and_truth() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("s");
    run_ok(&[
        "synth",
        "--n",
        "100000",
        "--refills",
        "37",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(count_rows(&out.join("trace.csv")), 100_000);
    assert_eq!(count_rows(&out.join("truth.csv")), 37);
}

#[test]
fn synth_zero_refills_gives_header_only_truth() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("s");
    run_ok(&[
        "synth",
        "--n",
        "2000",
        "--refills",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        fs::read_to_string(out.join("truth.csv")).unwrap(),
        "index,volume\n"
    );
}

#[test]
fn synth_is_byte_deterministic() {
    let dir = tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "synth".to_string(),
            "--n".into(),
            "5000".into(),
            "--refills".into(),
            "3".into(),
            "--seed".into(),
            "11".into(),
            "--white-sigma".into(),
            "0.5".into(),
            "--spike-prob".into(),
            "0.01".into(),
            "--zero-prob".into(),
            "0.01".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&args(&a).iter().map(|s| s.as_str()).collect::<Vec<_>>());
    run_ok(&args(&b).iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(
        fs::read(a.join("trace.csv")).unwrap(),
        fs::read(b.join("trace.csv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("truth.csv")).unwrap(),
        fs::read(b.join("truth.csv")).unwrap()
    );
}

#[test]
fn synth_rejects_bad_flags_with_exit_1() {
    let out = bin().args(["synth", "--n", "10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_produces_reports_and_stage_dumps() {
    let dir = tempdir().unwrap();
    let synth_out = dir.path().join("s");
    run_ok(&[
        "synth",
        "--n",
        "6000",
        "--refills",
        "3",
        "--seed",
        "5",
        "--white-sigma",
        "0.3",
        "--out",
        synth_out.to_str().unwrap(),
    ]);
    let run_out = dir.path().join("r");
    run_ok(&[
        "run",
        synth_out.join("trace.csv").to_str().unwrap(),
        "--out",
        run_out.to_str().unwrap(),
    ]);

    for name in ["refills.csv", "consumption.csv", "summary.txt"] {
        assert!(run_out.join(name).exists(), "{name} missing");
    }
    let n = 6000;
    for name in [
        "stage_preprocessed.csv",
        "stage_clustered.csv",
        "stage_wavelet.csv",
        "stage_median.csv",
        "stage_final.csv",
    ] {
        let path = run_out.join(name);
        assert!(path.exists(), "{name} missing");
        assert_eq!(count_rows(&path), n, "{name} row count");
    }
    assert_eq!(count_rows(&run_out.join("refills.csv")), 3);
}

#[test]
fn run_twice_is_byte_identical() {
    let dir = tempdir().unwrap();
    let synth_out = dir.path().join("s");
    run_ok(&[
        "synth",
        "--n",
        "5000",
        "--refills",
        "3",
        "--seed",
        "9",
        "--white-sigma",
        "0.5",
        "--spike-prob",
        "0.005",
        "--zero-prob",
        "0.002",
        "--out",
        synth_out.to_str().unwrap(),
    ]);
    let trace = synth_out.join("trace.csv");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&["run", trace.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    run_ok(&["run", trace.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?} differs between runs"
        );
    }
}

#[test]
fn run_rejects_malformed_config_naming_the_key() {
    let dir = tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    fs::write(&trace, "index,level\n0,10\n1,10\n2,10\n3,10\n").unwrap();
    let cfg = dir.path().join("cfg.txt");
    fs::write(&cfg, "median_windw = 5\n").unwrap();
    let out = bin()
        .args([
            "run",
            trace.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("median_windw"), "stderr: {stderr}");
}

#[test]
fn run_rejects_too_short_trace_with_exit_2() {
    let dir = tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    fs::write(&trace, "index,level\n0,10\n1,11\n").unwrap();
    let out = bin()
        .args([
            "run",
            trace.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn score_perfect_detection() {
    let dir = tempdir().unwrap();
    let report = dir.path().join("report.csv");
    fs::write(
        &report,
        "Start_index_refill,Stop_index_refill,Deducted_value\n100,101,10.5\n900,901,20.25\n",
    )
    .unwrap();
    let truth = dir.path().join("truth.csv");
    fs::write(&truth, "index,volume\n100,10.5\n900,20.25\n").unwrap();
    let out = run_ok(&["score", report.to_str().unwrap(), truth.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("r_squared: 1\n"), "stdout: {stdout}");
    assert!(stdout.contains("rmse: 0\n"), "stdout: {stdout}");
    assert!(stdout.contains("matched: 2"));
}

#[test]
fn score_empty_detection_reports_na_and_exits_zero() {
    let dir = tempdir().unwrap();
    let report = dir.path().join("report.csv");
    fs::write(
        &report,
        "Start_index_refill,Stop_index_refill,Deducted_value\n",
    )
    .unwrap();
    let truth = dir.path().join("truth.csv");
    fs::write(&truth, "index,volume\n100,10.5\n900,20.25\n").unwrap();
    let out = run_ok(&["score", report.to_str().unwrap(), truth.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("r_squared: n/a"));
    assert!(stdout.contains("missed: 2"));
}

#[test]
fn score_rejects_schema_mismatch_with_exit_2() {
    let dir = tempdir().unwrap();
    let report = dir.path().join("report.csv");
    fs::write(
        &report,
        "Start_index_refill,Stop_index_refill,Deducted_value\nxx,1,2\n",
    )
    .unwrap();
    let truth = dir.path().join("truth.csv");
    fs::write(&truth, "index,volume\n100,10.5\n").unwrap();
    let out = bin()
        .args(["score", report.to_str().unwrap(), truth.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

/// Feeding the detected and real volumes of the arithmetically consistent
/// reference rows through `score` reproduces the per-event error columns:
/// exactly as recomputed, and matching the frozen digits of the print-exact
/// rows to 1e-9.
#[test]
fn score_reproduces_reference_row_errors() {
    let rows: [(u64, f64, f64, f64, f64); 3] = [
        (
            4041,
            17.75168437,
            17.77,
            0.018315629965759,
            0.103070511906353,
        ),
        (14083, 31.3662363, 33.25, 1.88376369997919, 5.66545473677951),
        (
            31964,
            52.91355821,
            45.71,
            7.20355820989442,
            15.7592610148642,
        ),
    ];
    let dir = tempdir().unwrap();
    let report = dir.path().join("report.csv");
    let truth = dir.path().join("truth.csv");
    let mut report_text = String::from("Start_index_refill,Stop_index_refill,Deducted_value\n");
    let mut truth_text = String::from("index,volume\n");
    for (idx, detected, real, _, _) in rows {
        report_text.push_str(&format!("{idx},{},{detected}\n", idx + 1));
        truth_text.push_str(&format!("{idx},{real}\n"));
    }
    fs::write(&report, report_text).unwrap();
    fs::write(&truth, truth_text).unwrap();
    let out = run_ok(&["score", report.to_str().unwrap(), truth.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let table: Vec<&str> = stdout
        .lines()
        .skip_while(|l| !l.starts_with("start,"))
        .skip(1)
        .collect();
    assert_eq!(table.len(), 3);
    for ((_, _, _, err_col, pct_col), line) in rows.iter().zip(table) {
        let fields: Vec<f64> = line
            .split(',')
            .skip(2)
            .map(|f| f.parse().unwrap())
            .collect();
        assert!((fields[2] - err_col).abs() <= 1e-9, "error column {line}");
        assert!((fields[3] - pct_col).abs() <= 1e-9, "pct column {line}");
    }
}
