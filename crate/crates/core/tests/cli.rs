// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mtj-bist"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    bin()
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(
        run(&["katan", "enc", "--key", "0", "--pt", "0"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn missing_config_is_an_error() {
    let o = run(&["--config", "/nonexistent/mtj.conf", "exp2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "seed = 3\nno.such.key = 1\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "exp2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn katan_round_trip_and_vectors() {
    let ones = "ffffffffffffffffffff";
    let zero = "00000000000000000000";
    let o = run(&["katan", "enc", "--key", ones, "--pt", "00000000"]);
    assert_eq!(stdout(&o).trim(), "7e1ff945");
    let o = run(&["katan", "enc", "--key", zero, "--pt", "ffffffff"]);
    assert_eq!(stdout(&o).trim(), "432e61da");
    let o = run(&["katan", "dec", "--key", ones, "--ct", "7e1ff945"]);
    assert_eq!(stdout(&o).trim(), "00000000");
}

#[test]
fn bist_exit_codes_follow_the_error_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["bist", "run", "--random", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("bist_results.csv").is_file());

    let o = run_in(dir.path(), &["attack", "inject", "--cell", "2:1.3"]);
    assert_eq!(o.status.code(), Some(0));
    let array = dir.path().join("array.csv");
    let o = run_in(
        dir.path(),
        &[
            "bist",
            "run",
            "--array",
            array.to_str().unwrap(),
            "--pattern",
            "ff",
            "--half-period",
            "1.0",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let csv = std::fs::read_to_string(dir.path().join("bist_results.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("1,ff,1,2"));
}

#[test]
fn bist_sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "bist",
            "sweep",
            "--pattern",
            "5a",
            "--from",
            "3",
            "--to",
            "1",
            "--steps",
            "5",
        ],
    );
    assert!(matches!(o.status.code(), Some(0 | 2)));
    let csv = std::fs::read_to_string(dir.path().join("bist_results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);
}

#[test]
fn trace_detect_score_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run_in(
        d,
        &[
            "trace",
            "gen",
            "--n",
            "6",
            "--condition",
            "trojan",
            "--reference",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let reference = d.join("reference.csv");
    let dataset = d.join("dataset");
    assert!(reference.is_file() && dataset.join("manifest").is_file());

    let o = run_in(
        d,
        &[
            "detect",
            "eval",
            "--dataset",
            dataset.to_str().unwrap(),
            "--reference",
            reference.to_str().unwrap(),
            "--threshold",
            "1000",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let eval = d.join("evaluation.csv");
    let text = std::fs::read_to_string(&eval).unwrap();
    assert_eq!(text.lines().next(), Some("index,value,decision"));
    assert_eq!(text.lines().count(), 1 + 6);

    let o = run_in(
        d,
        &[
            "detect",
            "score",
            "--evaluation",
            eval.to_str().unwrap(),
            "--threshold",
            "1000",
            "--condition",
            "trojan",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(d.join("confusion.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("sensitivity,tp,fp,tn,fn"));
}

#[test]
fn experiments_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = dir.path().join("exp1");
    let e2 = dir.path().join("exp2");
    let o = run_in(&e1, &["--seed", "1", "exp1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("threshold 3074862.4687502543"));
    let o = run_in(&e2, &["exp2"]);
    assert_eq!(o.status.code(), Some(0));
    for f in [
        "config.txt",
        "reference.csv",
        "threshold.csv",
        "evaluation.csv",
        "confusion.csv",
    ] {
        assert!(e1.join(f).is_file(), "{f}");
        assert!(e2.join(f).is_file(), "{f}");
    }

    // The written config reproduces the run.
    let e3 = dir.path().join("exp1b");
    let cfg = e1.join("config.txt");
    let o = run_in(&e3, &["--config", cfg.to_str().unwrap(), "exp1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read(e1.join("confusion.csv")).unwrap(),
        std::fs::read(e3.join("confusion.csv")).unwrap()
    );

    let o = run(&["report", e1.to_str().unwrap(), e2.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!stdout(&o).is_empty());
}
