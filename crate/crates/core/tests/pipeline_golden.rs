//! Committed fixture data: the synthetic pair set, a checkpoint trained on it,
//! and pinned scores. Set `HGMNET_BLESS=1` to regenerate after an intended
//! model change.

use std::path::PathBuf;

use hgmnet::features::CpcCode;
use hgmnet::pipeline::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bless() -> bool {
    std::env::var_os("HGMNET_BLESS").is_some()
}

const GOLDEN_PAIRS: [(&str, &str, &str); 6] = [
    ("pump", "pump", "F04D1/00"),
    ("pump impeller", "rotor", "F04D1/00"),
    ("pump", "valve seal", "F04D1/00"),
    ("pump", "packet", "F04D1/00"),
    ("harrow soil", "plough", "A01B1/00"),
    ("unseen words", "router", "H04L9/00"),
];

fn trained() -> Model {
    let records = ingest(&fixture("synthetic_pairs.csv")).unwrap().records;
    train(&records, &TrainConfig::default(), 0, None).unwrap().model
}

#[test]
fn committed_pairs_match_generator() {
    let path = fixture("synthetic_pairs.csv");
    if bless() {
        let mut buf = Vec::new();
        write_records(&synthetic_pairs(), &mut buf).unwrap();
        std::fs::write(&path, buf).unwrap();
    }
    let report = ingest(&path).unwrap();
    assert!(report.skipped.is_empty());
    assert_eq!(report.records, synthetic_pairs());
}

#[test]
fn retraining_reproduces_committed_checkpoint() {
    let path = fixture("synthetic_model.ckpt");
    let text = save_checkpoint(&trained());
    if bless() {
        std::fs::write(&path, &text).unwrap();
    }
    assert_eq!(text, std::fs::read_to_string(&path).unwrap());
}

#[test]
fn pinned_scores() {
    let model = load_checkpoint_file(&fixture("synthetic_model.ckpt")).unwrap();
    let path = fixture("score_golden.tsv");
    let scores: Vec<f64> = GOLDEN_PAIRS
        .iter()
        .map(|(a, t, c)| model.score(a, t, &CpcCode::parse(c).unwrap()).unwrap())
        .collect();
    if bless() {
        let body: String = GOLDEN_PAIRS
            .iter()
            .zip(&scores)
            .map(|((a, t, c), s)| format!("{a}\t{t}\t{c}\t{s:.17e}\n"))
            .collect();
        std::fs::write(&path, body).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = golden.lines().collect();
    assert_eq!(lines.len(), GOLDEN_PAIRS.len());
    for ((line, (a, t, c)), s) in lines.iter().zip(GOLDEN_PAIRS).zip(&scores) {
        let f: Vec<&str> = line.split('\t').collect();
        assert_eq!(&f[..3], [a, t, c]);
        let want: f64 = f[3].parse().unwrap();
        assert!((s - want).abs() < 1e-12, "{a} / {t}: {s} vs {want}");
        assert!((0.0..=1.0).contains(s));
    }
}

#[test]
fn self_similarity_dominates() {
    let model = load_checkpoint_file(&fixture("synthetic_model.ckpt")).unwrap();
    let records = synthetic_pairs();
    for r in &records {
        let own = model.score(&r.anchor, &r.anchor, &r.context).unwrap();
        for other in records.iter().step_by(5) {
            let s = model.score(&r.anchor, &other.target, &r.context).unwrap();
            assert!(own >= s, "{} vs {}: {own} < {s}", r.anchor, other.target);
        }
        let perturbed = format!("{} gasket", r.anchor);
        assert!(own >= model.score(&r.anchor, &perturbed, &r.context).unwrap());
    }
}

#[test]
fn trained_ranking_follows_labels() {
    let model = load_checkpoint_file(&fixture("synthetic_model.ckpt")).unwrap();
    let records = synthetic_pairs();
    let predicted = model.score_records(&records).unwrap();
    let labels: Vec<f64> = records.iter().map(|r| r.score).collect();
    assert!(spearman(&predicted, &labels).unwrap() >= 0.8);
}
