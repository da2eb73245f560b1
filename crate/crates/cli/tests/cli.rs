use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn subshot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subshot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data row of a one-row CSV as `column -> cell`.
fn single_row(csv: &str) -> Vec<(String, String)> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap();
    let row = lines.next().unwrap();
    header
        .split(',')
        .map(String::from)
        .zip(row.split(',').map(String::from))
        .collect()
}

fn cell(row: &[(String, String)], column: &str) -> f64 {
    row.iter()
        .find(|(c, _)| c == column)
        .unwrap()
        .1
        .parse()
        .unwrap()
}

#[test]
fn squeezed_probe_at_rest_is_shot_noise_limited() {
    let out = subshot(&[
        "eval", "--scheme", "squeezed", "--N", "1e7", "--A", "0", "--r", "0", "--R", "0",
        "--eta-d", "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let row = single_row(&stdout(&out));
    let delta_a = cell(&row, "delta_A");
    assert!((delta_a * 1e7_f64.sqrt() - 1.0).abs() < 1e-12, "{delta_a}");
    assert!((cell(&row, "Q") - 1.0).abs() < 1e-12);
}

#[test]
fn twin_optimized_reports_k() {
    let out = subshot(&[
        "eval", "--scheme", "twin-opt", "--N", "1e7", "--A", "1e-5", "--eta-d", "0.9", "--R", "2",
    ]);
    assert!(out.status.success());
    let row = single_row(&stdout(&out));
    let k = cell(&row, "k_opt");
    assert!(k > 0.0 && k < 1.0, "{k}");
    assert!(cell(&row, "Q") > 1.0);
}

#[test]
fn missing_photon_number_is_a_usage_error() {
    let out = subshot(&["eval", "--scheme", "squeezed", "--A", "1e-5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--N"));
}

#[test]
fn infeasible_configuration_is_rejected() {
    for args in [
        &[
            "eval",
            "--scheme",
            "twin-simple",
            "--N",
            "1e7",
            "--A",
            "1.5",
        ][..],
        &[
            "eval", "--scheme", "squeezed", "--N", "10", "--A", "1e-5", "--r", "5",
        ][..],
        &[
            "eval", "--scheme", "twin-opt", "--N", "1e7", "--eta-p", "0.5", "--eps-p2", "0.1",
        ][..],
    ] {
        let out = subshot(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn validate_exit_codes_follow_the_checks() {
    let ok = subshot(&["validate", "mc", "--seed", "3"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).lines().all(|l| l.starts_with("PASS")));
    let failing = subshot(&["validate", "asymptotics"]);
    assert_eq!(failing.status.code(), Some(1));
    assert!(stdout(&failing).lines().any(|l| l.starts_with("FAIL")));
}

fn sweep_into(dir: &Path) {
    let out = subshot(&[
        "sweep",
        "--scheme",
        "squeezed",
        "--N",
        "1e6",
        "--A",
        "1e-4",
        "--eta-d",
        "0.5",
        "--axis",
        "r",
        "--from",
        "0",
        "--to",
        "4",
        "--points",
        "17",
        "--optimize-r",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn sweeps_are_reproducible_and_rerunnable() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
    );
    sweep_into(&a);
    sweep_into(&b);
    let first = csv_files(&a);
    assert!(!first.is_empty());
    assert_eq!(first, csv_files(&b));

    let manifest = a.join("manifest.json");
    let out = subshot(&[
        "rerun",
        manifest.to_str().unwrap(),
        "--out",
        c.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(first, csv_files(&c));

    let csv = String::from_utf8(first[0].1.clone()).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("# manifest sha256 ")));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 18);
}
