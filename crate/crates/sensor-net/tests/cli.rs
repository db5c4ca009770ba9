use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_rbv-sensor");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("SENSOR_CLOUD_ADDR")
        .output()
        .expect("spawn rbv-sensor")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn rambudget_prints_total() {
    let dir = tempfile::tempdir().unwrap();
    let table = ok(dir.path(), &["rambudget", "--topology", "51,50,20,2"]);
    let total = table.lines().find(|l| l.to_lowercase().contains("total")).unwrap();
    assert!(total.contains("4350"), "{table}");
    let colon = ok(dir.path(), &["rambudget", "--topology", "51:50:20:2"]);
    assert_eq!(table, colon);
}

#[test]
fn gen_data_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for (seed, out) in [("7", "a.csv"), ("7", "b.csv"), ("8", "c.csv")] {
        ok(
            dir.path(),
            &["gen-data", "--seed", seed, "--n-per-class", "50", "--out", out],
        );
    }
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
    let header = String::from_utf8(read("a.csv")).unwrap();
    let header = header.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 52);
}

#[test]
fn search_ranks_planted_xor_pair_first() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "gen-data",
            "--seed",
            "3",
            "--shape",
            "xor",
            "--features",
            "10",
            "--n-per-class",
            "200",
            "--out",
            "xor.csv",
        ],
    );
    let csv = ok(
        dir.path(),
        &[
            "search",
            "--seed",
            "3",
            "--data",
            "xor.csv",
            "--size",
            "2",
            "--features",
            "10",
            "--top",
            "3",
        ],
    );
    let mut lines = csv.lines();
    lines.next().unwrap();
    let first = lines.next().unwrap();
    let names: Vec<String> = {
        let d = std::fs::read_to_string(dir.path().join("xor.csv")).unwrap();
        d.lines().next().unwrap().split(',').map(str::to_string).collect()
    };
    let pair = format!("{}+{}", names[0], names[1]);
    assert!(first.starts_with(&pair), "first row {first}, expected {pair}");
}

#[test]
fn triple_sweep_needs_flag() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-data", "--n-per-class", "30", "--out", "d.csv"]);
    let out = run(dir.path(), &["search", "--data", "d.csv", "--size", "3"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--full-sweep"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["gen-data", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["predict", "--data", "missing.csv", "--model", "missing.hgb"],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);

    std::fs::write(dir.path().join("junk.lib"), "NOTAMODEL\n").unwrap();
    let out = run(dir.path(), &["import-model", "--model", "junk.lib"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "gen-data",
            "--shape",
            "correlated",
            "--n-per-class",
            "100",
            "--out",
            "d.csv",
        ],
    );
    ok(dir.path(), &["analyze", "--data", "d.csv", "--out", "report"]);
    for f in [
        "correlation_all.csv",
        "correlation_positive.csv",
        "correlation_negative.csv",
        "features.csv",
    ] {
        let text = std::fs::read_to_string(dir.path().join("report").join(f)).unwrap();
        assert!(text.lines().count() > 1, "{f} is empty");
    }
}

#[test]
fn export_import_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-data", "--n-per-class", "60", "--out", "d.csv"]);
    ok(
        dir.path(),
        &["train-hgb", "--data", "d.csv", "--trees", "10", "--out", "m.hgb"],
    );
    ok(dir.path(), &["export-model", "--model", "m.hgb", "--out", "m2.hgb"]);
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("m.hgb"), read("m2.hgb"));
    let summary = ok(dir.path(), &["import-model", "--model", "m2.hgb"]);
    assert!(summary.starts_with("HGB1"), "{summary}");

    ok(
        dir.path(),
        &["train-lognnet", "--data", "d.csv", "--epochs", "5", "--out", "f.json"],
    );
    ok(dir.path(), &["quantize", "--model", "f.json", "--out", "e.lib"]);
    assert!(dir.path().join("e.lib.scaler.json").exists());
    ok(dir.path(), &["export-model", "--model", "e.lib", "--out", "e2.lib"]);
    assert_eq!(read("e.lib"), read("e2.lib"));
}

#[test]
fn offline_edge_answers_every_frame() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-data", "--n-per-class", "60", "--out", "d.csv"]);
    ok(
        dir.path(),
        &["train-lognnet", "--data", "d.csv", "--epochs", "5", "--out", "f.json"],
    );
    ok(dir.path(), &["quantize", "--model", "f.json", "--out", "e.lib"]);
    let frame = format!("{}FNT", "0.5T".repeat(51));
    let mut child = Command::new(BIN)
        .args(["edge", "--model", "e.lib", "--offline"])
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(frame.repeat(3).as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(out.stdout.len(), 3);
    assert!(out.stdout.iter().all(|b| matches!(b, b'0' | b'1')));
}
