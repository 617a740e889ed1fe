use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn hgmnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgmnet")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hgmnet(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_reports_counts_and_skips() {
    let pairs = fixture("synthetic_pairs.csv");
    assert_eq!(ok(&["ingest", "--data", s(&pairs)]).trim(), "64 records, 0 rows skipped");

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("mixed.csv");
    std::fs::write(&csv, "id,anchor,target,context,score\na,x,y,F04D1/00,0.5\nb,x,y,nonsense,0.5\nc,x,y,F04D,2\n").unwrap();
    let out = hgmnet(&["ingest", "--data", s(&csv)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1 records, 2 rows skipped");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("skipped line 3") && err.contains("skipped line 4"), "{err}");
}

#[test]
fn stats_writes_csvs_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["stats", "--data", s(&fixture("synthetic_pairs.csv")), "--out", s(dir.path()), "--top", "3"]);
    assert!(stdout.contains("exactly 0") && stdout.contains("25.00%"), "{stdout}");
    let hist = std::fs::read_to_string(dir.path().join("score_histogram.csv")).unwrap();
    assert!(hist.starts_with("lo,hi,count,percent\n"));
    let terms = std::fs::read_to_string(dir.path().join("top_terms.csv")).unwrap();
    assert_eq!(terms.lines().count(), 4);
    let sections = std::fs::read_to_string(dir.path().join("context_sections.csv")).unwrap();
    assert!(sections.contains("F,32,"), "{sections}");
}

#[test]
fn train_is_reproducible_and_scores() {
    let pairs = fixture("synthetic_pairs.csv");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let stdout = ok(&["train", "--data", s(&pairs), "--out", s(dir.path()), "--seed", "0"]);
        assert!(stdout.starts_with("steps 200"), "{stdout}");
    }
    for name in ["checkpoint.hgm", "loss_curve.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between identical runs");
    }
    let golden = std::fs::read(fixture("synthetic_model.ckpt")).unwrap();
    assert!(std::fs::read(a.path().join("checkpoint.hgm")).unwrap() == golden);

    let ckpt = a.path().join("checkpoint.hgm");
    let one = ok(&["score", "--checkpoint", s(&ckpt), "--anchor", "pump", "--target", "pump", "--context", "F04D1/00"]);
    let v: f64 = one.trim().parse().unwrap();
    assert!(v > 0.9, "{v}");

    let batch = ok(&["score", "--checkpoint", s(&ckpt), "--data", s(&pairs)]);
    let mut lines = batch.lines();
    assert_eq!(lines.next(), Some("id,score,predicted"));
    assert_eq!(lines.count(), 64);
}

#[test]
fn divergent_training_exits_nonzero_but_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hot.toml");
    std::fs::write(&cfg, "lr = 1e300\nsteps = 20\n").unwrap();
    let out = hgmnet(&["train", "--data", s(&fixture("synthetic_pairs.csv")), "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("checkpoint.hgm").exists());
    assert!(dir.path().join("loss_curve.csv").exists());
}

#[test]
fn bench_single_length() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["bench", "--n", "128", "--repeats", "1", "--out", s(dir.path())]);
    assert_eq!(stdout.lines().filter(|l| l.trim_start().starts_with("128 ")).count(), 1, "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("complexity.csv")).unwrap();
    assert!(csv.lines().count() >= 3, "{csv}");
}

#[test]
fn graph_export() {
    let dir = tempfile::tempdir().unwrap();
    let cites = dir.path().join("cites.tsv");
    std::fs::write(&cites, "p00\tp16\np01\tp99\n").unwrap();
    let out = hgmnet(&[
        "graph",
        "--data",
        s(&fixture("synthetic_pairs.csv")),
        "--citations",
        s(&cites),
        "--out",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let nodes = std::fs::read_to_string(dir.path().join("graph_nodes.tsv")).unwrap();
    assert_eq!(nodes.lines().filter(|l| l.contains("\ttext\t")).count(), 128);
    let edges = std::fs::read_to_string(dir.path().join("graph_edges.tsv")).unwrap();
    assert!(edges.lines().any(|l| l.ends_with("\tcitation")), "{edges}");
}

#[test]
fn exit_codes() {
    let missing = hgmnet(&["ingest", "--data", "/definitely/not/here.csv"]);
    assert_eq!(missing.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "dim = 6\n").unwrap();
    let bad = hgmnet(&["train", "--data", s(&fixture("synthetic_pairs.csv")), "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(!dir.path().join("checkpoint.hgm").exists());

    let corrupt = dir.path().join("corrupt.hgm");
    std::fs::write(&corrupt, "HGMNET1\n@config\n").unwrap();
    let out = hgmnet(&["score", "--checkpoint", s(&corrupt), "--anchor", "a", "--target", "b", "--context", "A01B"]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(hgmnet(&["ingest"]).status.code(), Some(1));
    assert_eq!(hgmnet(&["no-such-verb"]).status.code(), Some(1));
    assert_eq!(hgmnet(&["--help"]).status.code(), Some(0));
}
