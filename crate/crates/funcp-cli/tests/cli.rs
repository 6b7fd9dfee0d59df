//! End-to-end checks of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_funcp")
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("funcp_cli_{name}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn simulate_test_pipeline() {
    let dir = temp_dir("pipeline");
    let out = run(
        &[
            "simulate",
            "--dgp",
            "far1-bridge",
            "--c",
            "0.245",
            "--n",
            "200",
            "--grid",
            "31",
            "--seed",
            "5",
            "--change-at",
            "100",
            "--jump",
            "1.0",
            "--out",
            "curves.csv",
        ],
        &dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // tuning pinned: automatic order selection on data with a large fixed
    // change absorbs part of the shift into the fitted dependence
    let out = run(
        &[
            "test",
            "--data",
            "curves.csv",
            "--method",
            "fsb",
            "--alpha",
            "0.05",
            "--bootstrap",
            "200",
            "--seed",
            "9",
            "--m",
            "3",
            "--p",
            "1",
            "--out",
            "result",
        ],
        &dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"method\":\"fsb\""));
    assert!(
        stdout.contains("\"reject\":true"),
        "big jump must reject: {stdout}"
    );
    assert!(dir.join("result/outcome.json").exists());
    assert!(dir.join("result/cusum_profile.csv").exists());
    assert!(dir.join("result/cusum_profile.svg").exists());

    // deterministic: rerun gives the identical record
    let again = run(
        &[
            "test",
            "--data",
            "curves.csv",
            "--method",
            "fsb",
            "--alpha",
            "0.05",
            "--bootstrap",
            "200",
            "--seed",
            "9",
            "--m",
            "3",
            "--p",
            "1",
        ],
        &dir,
    );
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn ragged_input_is_exit_code_2() {
    let dir = temp_dir("ragged");
    std::fs::write(dir.join("bad.csv"), "0.0,1.0,2.0\n0.0,1.0\n").unwrap();
    let out = run(&["test", "--data", "bad.csv"], &dir);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn missing_file_is_exit_code_4() {
    let dir = temp_dir("missing");
    let out = run(&["test", "--data", "nope.csv"], &dir);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn study_snapshot_report_roundtrip() {
    let dir = temp_dir("roundtrip");
    let out = run(
        &[
            "size-study",
            "--dgp",
            "far1-bridge",
            "--c",
            "0.245",
            "--n",
            "40",
            "--grid",
            "21",
            "--methods",
            "fsb",
            "--m",
            "2",
            "--p",
            "1",
            "--replications",
            "6",
            "--bootstrap",
            "100",
            "--alphas",
            "0.05,0.1",
            "--seed",
            "21",
            "--out",
            "study",
        ],
        &dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = std::fs::read(dir.join("study/table.csv")).unwrap();

    let out = run(
        &["report", "study", "--out", "rerun", "--workers", "3"],
        &dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table2 = std::fs::read(dir.join("rerun/table.csv")).unwrap();
    assert_eq!(
        table, table2,
        "snapshot rerun must reproduce the table byte for byte"
    );
}

#[test]
fn power_study_emits_curve() {
    let dir = temp_dir("power");
    let out = run(
        &[
            "power-study",
            "--dgp",
            "far1-bridge",
            "--c",
            "0.49",
            "--n",
            "40",
            "--grid",
            "21",
            "--methods",
            "nbb",
            "--replications",
            "8",
            "--bootstrap",
            "100",
            "--alphas",
            "0.1",
            "--jumps",
            "0,0.5",
            "--change-at",
            "20",
            "--seed",
            "3",
            "--out",
            "power",
        ],
        &dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("power/table.csv").exists());
    assert!(dir.join("power/power_curve.svg").exists());
    let table = std::fs::read_to_string(dir.join("power/table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3, "header + 2 jump rows: {table}");
}

#[test]
fn custom_grid_file() {
    let dir = temp_dir("gridfile");
    std::fs::write(dir.join("grid.csv"), "0.0,0.1,0.3,0.6,1.0\n").unwrap();
    std::fs::write(
        dir.join("data.csv"),
        "1.0,2.0,3.0,4.0,5.0\n2.0,3.0,4.0,5.0,6.0\n0.5,1.5,2.5,3.5,4.5\n1.5,2.0,2.5,3.0,3.5\n\
         1.0,1.0,2.0,2.0,3.0\n2.0,2.5,3.0,3.5,4.0\n1.2,2.2,3.2,4.2,5.2\n0.8,1.8,2.8,3.8,4.8\n\
         1.1,2.1,3.1,4.1,5.1\n0.9,1.9,2.9,3.9,4.9\n",
    )
    .unwrap();
    let out = run(
        &[
            "test",
            "--data",
            "data.csv",
            "--grid-file",
            "grid.csv",
            "--method",
            "nbb",
            "--block-len",
            "2",
            "--bootstrap",
            "100",
            "--seed",
            "2",
        ],
        &dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
