use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::msa::{n_log_n, sparse_forward, LevelSpans, MsaConfig, MsaParams, MsaPlan, SparsityPattern, REPORT_HEADER};
use crate::numkit::{Matrix, Rng};
use crate::textseg::{Granularity, Span};

pub const SYNTHETIC_PHRASE: usize = 4;
pub const SYNTHETIC_SENTENCE: usize = 16;
pub const SYNTHETIC_PARAGRAPH: usize = 128;

fn chunks(n: usize, size: usize) -> Vec<Span> {
    (0..n).step_by(size).map(|s| Span::new(s, (s + size).min(n))).collect()
}

/// A generated document: random features, phrases of 4 tokens, sentences of
/// 16 and paragraphs of 128, and random tf-idf weights in `[0, 1)`.
#[derive(Debug, Clone)]
pub struct SyntheticDoc {
    pub features: Matrix,
    pub spans: LevelSpans,
    pub weights: Vec<f64>,
}

pub fn synthetic_document(n: usize, dim: usize, seed: u64) -> SyntheticDoc {
    let mut rng = Rng::new(seed);
    SyntheticDoc {
        features: rng.normal_matrix(n, dim, 1.0),
        spans: LevelSpans {
            phrases: chunks(n, SYNTHETIC_PHRASE),
            sentences: chunks(n, SYNTHETIC_SENTENCE),
            paragraphs: chunks(n, SYNTHETIC_PARAGRAPH),
        },
        weights: (0..n).map(|_| rng.next_f64()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub dim: usize,
    pub seed: u64,
    /// Timed runs per measurement; the median is reported.
    pub repeats: usize,
    /// Also time a dense single-level forward pass (O(n²) work).
    pub time_dense: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { dim: 32, seed: 0, repeats: 5, time_dense: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    /// `(level, units, pairs)` for each level of the sparse plan.
    pub levels: Vec<(String, usize, usize)>,
    pub pairs: usize,
    pub wall_ms: f64,
    pub dense_pairs: usize,
    pub dense_wall_ms: Option<f64>,
}

impl SweepRow {
    pub fn ratio(&self) -> f64 {
        self.pairs as f64 / n_log_n(self.n)
    }

    pub fn dense_share(&self) -> f64 {
        self.pairs as f64 / self.dense_pairs as f64
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn timed(repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut times = Vec::with_capacity(repeats.max(1));
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        f()?;
        times.push(t.elapsed().as_secs_f64() * 1e3);
    }
    Ok(median(times))
}

/// Pair counts and timings of the four-level plan, with the dense
/// single-level baseline, for each sequence length.
pub fn complexity_sweep(ns: &[usize], cfg: &MsaConfig, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    let params = MsaParams::init(opts.dim, &mut Rng::new(opts.seed ^ 0x5eed));
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        if n < 2 {
            return Err(Error::invalid(format!("sweep lengths must be at least 2, got {n}")));
        }
        let doc = synthetic_document(n, opts.dim, opts.seed.wrapping_add(n as u64));
        let plan = MsaPlan::build(&doc.features, &doc.spans, doc.weights.clone(), cfg)?;
        let wall_ms = timed(opts.repeats, || sparse_forward(&doc.features, &plan, &params).map(drop))?;
        let dense_wall_ms = if opts.time_dense {
            let dense = MsaPlan::single(SparsityPattern::dense(Granularity::Word, n), doc.weights.clone())?;
            Some(timed(opts.repeats, || sparse_forward(&doc.features, &dense, &params).map(drop))?)
        } else {
            None
        };
        rows.push(SweepRow {
            n,
            levels: plan
                .levels
                .iter()
                .map(|l| (l.level.name().to_string(), l.units(), l.pattern.pairs()))
                .collect(),
            pairs: plan.total_pairs(),
            wall_ms,
            dense_pairs: n * n,
            dense_wall_ms,
        });
    }
    Ok(rows)
}

/// Complexity CSV: per-level rows, a `total` row and a `dense` row per length.
/// Level rows carry no timing of their own, so their `wall_ms` is empty.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{REPORT_HEADER}\n");
    for r in rows {
        let nl = n_log_n(r.n);
        for (level, units, pairs) in &r.levels {
            let _ = writeln!(s, "{level},{units},{pairs},{:.6},", *pairs as f64 / nl);
        }
        let _ = writeln!(s, "total,{},{},{:.6},{:.3}", r.n, r.pairs, r.ratio(), r.wall_ms);
        let dense_ms = r.dense_wall_ms.map_or(String::new(), |t| format!("{t:.3}"));
        let _ = writeln!(s, "dense,{},{},{:.6},{dense_ms}", r.n, r.dense_pairs, r.dense_pairs as f64 / nl);
    }
    s
}

/// Aligned text table of a sweep.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = format!(
        "{:>6}  {:>10}  {:>10}  {:>8}  {:>10}  {:>12}  {:>10}\n",
        "n", "pairs", "pairs/nlgn", "dense%", "sparse_ms", "dense_pairs", "dense_ms"
    );
    for r in rows {
        let dense_ms = r.dense_wall_ms.map_or("-".to_string(), |t| format!("{t:.3}"));
        let _ = writeln!(
            s,
            "{:>6}  {:>10}  {:>10.4}  {:>7.3}%  {:>10.3}  {:>12}  {:>10}",
            r.n,
            r.pairs,
            r.ratio(),
            100.0 * r.dense_share(),
            r.wall_ms,
            r.dense_pairs,
            dense_ms
        );
    }
    s
}
