use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::msa::{
    attn_scores_tape, log_size, phrase_logits_tape, prototype_pattern, window_pattern, PrototypeBank,
    SparsityPattern, DEFAULT_LAMBDA, DEFAULT_PHRASE_TAU,
};
use crate::numkit::{dot, Matrix, Rng, Tape, Var};
use crate::textseg::{Decomposition, Granularity, Span};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsaConfig {
    /// Word-level window radius; `⌈log₂(n+1)⌉` when unset.
    pub window: Option<usize>,
    /// Word-level global set size; `⌈log₂(n+1)⌉` when unset.
    pub top_k: Option<usize>,
    /// Prototypes per level; `⌈√units⌉` when unset.
    pub prototypes: Option<usize>,
    pub fanout: usize,
    pub phrase_tau: f64,
}

impl Default for MsaConfig {
    fn default() -> Self {
        Self {
            window: None,
            top_k: None,
            prototypes: None,
            fanout: 1,
            phrase_tau: DEFAULT_PHRASE_TAU,
        }
    }
}

/// Projections shared by all levels.
#[derive(Debug, Clone, PartialEq)]
pub struct MsaParams {
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
    pub w_phrase: Matrix,
    pub lambda: f64,
}

impl MsaParams {
    pub fn init(dim: usize, rng: &mut Rng) -> Self {
        let s = 1.0 / (dim as f64).sqrt();
        let near_identity = |rng: &mut Rng| {
            Matrix::identity(dim)
                .add(&rng.normal_matrix(dim, dim, 0.1 * s))
                .expect("square matrices of one size")
        };
        Self {
            wq: rng.normal_matrix(dim, dim, s),
            wk: rng.normal_matrix(dim, dim, s),
            wv: near_identity(rng),
            w_phrase: rng.normal_matrix(dim, dim, 0.1 * s),
            lambda: DEFAULT_LAMBDA,
        }
    }

    pub fn dim(&self) -> usize {
        self.wq.rows()
    }

    pub fn on_tape(&self, tape: &Tape) -> MsaVars {
        MsaVars {
            wq: tape.param(self.wq.clone()),
            wk: tape.param(self.wk.clone()),
            wv: tape.param(self.wv.clone()),
            w_phrase: tape.param(self.w_phrase.clone()),
            lambda: tape.param(Matrix::scalar(self.lambda)),
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        for m in [&self.wq, &self.wk, &self.wv, &self.w_phrase] {
            m.ensure_shape("attention projection", d, d)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MsaVars {
    pub wq: Var,
    pub wk: Var,
    pub wv: Var,
    pub w_phrase: Var,
    pub lambda: Var,
}

impl MsaVars {
    pub fn vars(&self) -> [Var; 5] {
        [self.wq, self.wk, self.wv, self.w_phrase, self.lambda]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LevelScoring {
    /// Scaled dot product plus the tf-idf pair statistic.
    Scored,
    /// Bilinear within-paragraph similarity over a temperature.
    Phrase { tau: f64 },
}

/// One granularity level: its spans over the tokens and its pattern over
/// those spans.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPlan {
    pub level: Granularity,
    pub spans: Vec<Span>,
    pub pattern: SparsityPattern,
    pub scoring: LevelScoring,
}

impl LevelPlan {
    pub fn units(&self) -> usize {
        self.spans.len()
    }
}

/// Spans for the three pooled levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSpans {
    pub phrases: Vec<Span>,
    pub sentences: Vec<Span>,
    pub paragraphs: Vec<Span>,
}

impl LevelSpans {
    pub fn from_decomposition(d: &Decomposition) -> Self {
        Self {
            phrases: d.phrases.spans.clone(),
            sentences: d.sentences.spans.clone(),
            paragraphs: d.paragraphs.spans.clone(),
        }
    }
}

/// Levels applied in order, plus per-token tf-idf weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MsaPlan {
    pub n: usize,
    pub levels: Vec<LevelPlan>,
    pub weights: Vec<f64>,
}

pub(crate) fn pool_matrix(spans: &[Span], n: usize) -> Matrix {
    let mut p = Matrix::zeros(spans.len(), n);
    for (u, s) in spans.iter().enumerate() {
        for i in s.indices() {
            p.row_mut(u)[i] = 1.0 / s.len() as f64;
        }
    }
    p
}

fn broadcast_matrix(spans: &[Span], n: usize) -> Matrix {
    let mut b = Matrix::zeros(n, spans.len());
    for (u, s) in spans.iter().enumerate() {
        for i in s.indices() {
            b.row_mut(i)[u] = 1.0;
        }
    }
    b
}

fn pool(x: &Matrix, spans: &[Span]) -> Matrix {
    let mut out = Matrix::zeros(spans.len(), x.cols());
    for (u, s) in spans.iter().enumerate() {
        let row = out.row_mut(u);
        for i in s.indices() {
            row.iter_mut().zip(x.row(i)).for_each(|(a, v)| *a += v);
        }
        row.iter_mut().for_each(|a| *a /= s.len() as f64);
    }
    out
}

fn pool_weights(w: &[f64], spans: &[Span]) -> Vec<f64> {
    spans
        .iter()
        .map(|s| s.indices().map(|i| w[i]).sum::<f64>() / s.len() as f64)
        .collect()
}

fn unit_spans(n: usize) -> Vec<Span> {
    (0..n).map(|i| Span::new(i, i + 1)).collect()
}

fn ceil_sqrt(n: usize) -> usize {
    let mut k = (n as f64).sqrt() as usize;
    while k * k < n {
        k += 1;
    }
    while k > 0 && (k - 1) * (k - 1) >= n {
        k -= 1;
    }
    k
}

impl MsaPlan {
    pub fn new(n: usize, levels: Vec<LevelPlan>, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("sparse attention needs at least one token"));
        }
        if levels.is_empty() {
            return Err(Error::invalid("sparse attention needs at least one level"));
        }
        if weights.len() != n {
            return Err(Error::dim("token weights", n, weights.len()));
        }
        for l in &levels {
            crate::textseg::check_partition(&l.spans, n)
                .map_err(|e| Error::invalid(format!("{} spans: {e}", l.level)))?;
            l.pattern.validate(l.units())?;
        }
        Ok(Self { n, levels, weights })
    }

    /// One token-level layer with the given pattern.
    pub fn single(pattern: SparsityPattern, weights: Vec<f64>) -> Result<Self> {
        let n = pattern.len();
        let level = LevelPlan {
            level: pattern.level,
            spans: unit_spans(n),
            pattern,
            scoring: LevelScoring::Scored,
        };
        Self::new(n, vec![level], weights)
    }

    /// Word window, within-paragraph phrases, and prototype-routed sentence
    /// and paragraph levels, with patterns computed from `h`.
    pub fn build(h: &Matrix, spans: &LevelSpans, weights: Vec<f64>, cfg: &MsaConfig) -> Result<Self> {
        let n = h.rows();
        if n == 0 {
            return Err(Error::invalid("sparse attention needs at least one token"));
        }
        let ls = log_size(n);
        let word = LevelPlan {
            level: Granularity::Word,
            spans: unit_spans(n),
            pattern: window_pattern(
                h,
                cfg.window.unwrap_or(ls) as isize,
                cfg.top_k.unwrap_or(ls) as isize,
                Granularity::Word,
            )?,
            scoring: LevelScoring::Scored,
        };

        let para_of = |s: &Span| {
            spans
                .paragraphs
                .iter()
                .position(|p| p.contains(s))
                .ok_or_else(|| Error::invalid(format!("phrase {s} lies in no paragraph")))
        };
        let group = spans.phrases.iter().map(para_of).collect::<Result<Vec<_>>>()?;
        let phrase = LevelPlan {
            level: Granularity::Phrase,
            spans: spans.phrases.clone(),
            pattern: SparsityPattern::grouped(Granularity::Phrase, &group),
            scoring: LevelScoring::Phrase { tau: cfg.phrase_tau },
        };

        let mut levels = vec![word, phrase];
        for (level, s) in [
            (Granularity::Sentence, &spans.sentences),
            (Granularity::Paragraph, &spans.paragraphs),
        ] {
            let u = pool(h, s);
            let k = cfg.prototypes.unwrap_or_else(|| ceil_sqrt(s.len())).clamp(1, s.len().max(1));
            let bank = PrototypeBank::fit(&u, k)?;
            levels.push(LevelPlan {
                level,
                spans: s.clone(),
                pattern: prototype_pattern(&u, &bank, cfg.fanout.min(bank.len()), level)?,
                scoring: LevelScoring::Scored,
            });
        }
        Self::new(n, levels, weights)
    }

    pub fn total_pairs(&self) -> usize {
        self.levels.iter().map(|l| l.pattern.pairs()).sum()
    }
}

/// Attended pairs and wall time per level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCost {
    pub level: String,
    pub units: usize,
    pub pairs: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    /// Token count.
    pub n: usize,
    pub levels: Vec<LevelCost>,
}

/// `n · log₂ n`, with the logarithm floored at 1 so tiny inputs stay finite.
pub fn n_log_n(n: usize) -> f64 {
    n as f64 * (n as f64).log2().max(1.0)
}

pub const REPORT_HEADER: &str = "level,n,pairs,pairs_per_nlogn,wall_ms";

impl ComplexityReport {
    pub fn total_pairs(&self) -> usize {
        self.levels.iter().map(|l| l.pairs).sum()
    }

    pub fn total_ms(&self) -> f64 {
        self.levels.iter().map(|l| l.wall_ms).sum()
    }

    /// CSV rows (no header): one per level, then a `total` row over `n` tokens.
    pub fn csv_rows(&self) -> String {
        let nl = n_log_n(self.n);
        let mut s = String::new();
        for l in &self.levels {
            let _ = writeln!(s, "{},{},{},{:.6},{:.3}", l.level, l.units, l.pairs, l.pairs as f64 / nl, l.wall_ms);
        }
        let total = self.total_pairs();
        let _ = writeln!(s, "total,{},{},{:.6},{:.3}", self.n, total, total as f64 / nl, self.total_ms());
        s
    }

    pub fn to_csv(&self) -> String {
        format!("{REPORT_HEADER}\n{}", self.csv_rows())
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        z += *v;
    }
    row.iter_mut().for_each(|v| *v /= z);
}

/// Sparse execution: only allowed pairs are scored.
///
/// Queries and keys at each level come from `h` pooled over that level's
/// spans; values come from the previous level's output pooled the same way,
/// starting from `h W_v`. Each level's output is broadcast back to tokens and
/// the result is the mean over levels.
pub fn sparse_forward(h: &Matrix, plan: &MsaPlan, params: &MsaParams) -> Result<(Matrix, ComplexityReport)> {
    let (n, d) = h.shape();
    if n != plan.n {
        return Err(Error::dim("sequence length", plan.n, n));
    }
    params.check(d)?;
    let scale = 1.0 / (d as f64).sqrt();
    let mut prev = h.matmul(&params.wv)?;
    let mut acc = Matrix::zeros(n, d);
    let mut costs = Vec::with_capacity(plan.levels.len());

    for level in &plan.levels {
        let start = Instant::now();
        let u = pool(h, &level.spans);
        let vals = pool(&prev, &level.spans);
        let mut y = Matrix::zeros(u.rows(), d);
        let mut scores = Vec::new();
        match level.scoring {
            LevelScoring::Scored => {
                let q = u.matmul(&params.wq)?;
                let k = u.matmul(&params.wk)?;
                let w = pool_weights(&plan.weights, &level.spans);
                for (i, keys) in level.pattern.allowed.iter().enumerate() {
                    scores.clear();
                    scores.extend(keys.iter().map(|&j| {
                        dot(q.row(i), k.row(j)) * scale + params.lambda * w[i] * w[j]
                    }));
                    softmax_in_place(&mut scores);
                    let out = y.row_mut(i);
                    for (&j, a) in keys.iter().zip(&scores) {
                        out.iter_mut().zip(vals.row(j)).for_each(|(o, v)| *o += a * v);
                    }
                }
            }
            LevelScoring::Phrase { tau } => {
                let uw = u.matmul(&params.w_phrase)?;
                for (i, keys) in level.pattern.allowed.iter().enumerate() {
                    scores.clear();
                    scores.extend(keys.iter().map(|&j| dot(uw.row(i), u.row(j)) / tau));
                    softmax_in_place(&mut scores);
                    let out = y.row_mut(i);
                    for (&j, a) in keys.iter().zip(&scores) {
                        out.iter_mut().zip(vals.row(j)).for_each(|(o, v)| *o += a * v);
                    }
                }
            }
        }
        let mut next = Matrix::zeros(n, d);
        for (u_idx, s) in level.spans.iter().enumerate() {
            for i in s.indices() {
                next.row_mut(i).copy_from_slice(y.row(u_idx));
            }
        }
        acc.add_assign(&next)?;
        prev = next;
        costs.push(LevelCost {
            level: level.level.name().to_string(),
            units: level.units(),
            pairs: level.pattern.pairs(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    let out = acc.scale(1.0 / plan.levels.len() as f64);
    out.ensure_finite("sparse attention output")?;
    Ok((out, ComplexityReport { n, levels: costs }))
}

#[derive(Debug, Clone)]
pub struct MsaTapeOutput {
    /// Per-level outputs broadcast to tokens, `n × d` each.
    pub levels: Vec<Var>,
    /// Mean of `levels`.
    pub output: Var,
}

/// Dense-masked tape version of [`sparse_forward`] for training.
pub fn sparse_forward_tape(tape: &Tape, h: Var, plan: &MsaPlan, p: &MsaVars) -> Result<MsaTapeOutput> {
    let (n, d) = tape.shape(h);
    if n != plan.n {
        return Err(Error::dim("sequence length", plan.n, n));
    }
    let mut prev = tape.matmul(h, p.wv)?;
    let mut levels = Vec::with_capacity(plan.levels.len());
    for level in &plan.levels {
        let pm = tape.constant(pool_matrix(&level.spans, n));
        let u = tape.matmul(pm, h)?;
        let vals = tape.matmul(pm, prev)?;
        let logits = match level.scoring {
            LevelScoring::Scored => {
                let q = tape.matmul(u, p.wq)?;
                let k = tape.matmul(u, p.wk)?;
                let w = pool_weights(&plan.weights, &level.spans);
                attn_scores_tape(tape, q, k, &level.pattern, p.lambda, &w)?
            }
            LevelScoring::Phrase { tau } => phrase_logits_tape(tape, u, p.w_phrase, &level.pattern, tau)?,
        };
        let a = tape.softmax_rows(logits);
        let y = tape.matmul(a, vals)?;
        let next = tape.matmul(tape.constant(broadcast_matrix(&level.spans, n)), y)?;
        levels.push(next);
        prev = next;
    }
    let mut sum = levels[0];
    for &l in &levels[1..] {
        sum = tape.add(sum, l)?;
    }
    let output = tape.scale(sum, 1.0 / levels.len() as f64);
    debug_assert_eq!(tape.shape(output), (n, d));
    Ok(MsaTapeOutput { levels, output })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msa::{complexity_sweep, synthetic_document, SweepOptions};
    use crate::numkit::{grad_check, softmax_rows, DEFAULT_EPS};
    use crate::textseg::{decompose, TransitionTable};
    use std::collections::BTreeSet;

    fn dense_attention(h: &Matrix, p: &MsaParams, w: &[f64]) -> Matrix {
        let q = h.matmul(&p.wq).unwrap();
        let k = h.matmul(&p.wk).unwrap();
        let v = h.matmul(&p.wv).unwrap();
        let d = h.cols() as f64;
        let mut s = q.matmul(&k.transpose()).unwrap().scale(1.0 / d.sqrt());
        for i in 0..h.rows() {
            for j in 0..h.rows() {
                s.row_mut(i)[j] += p.lambda * w[i] * w[j];
            }
        }
        softmax_rows(&s).unwrap().matmul(&v).unwrap()
    }

    #[test]
    fn dense_pattern_matches_standard_attention() {
        for n in [1, 7, 64] {
            let mut rng = Rng::new(n as u64);
            let h = rng.normal_matrix(n, 8, 1.0);
            let mut p = MsaParams::init(8, &mut rng);
            p.lambda = 0.3;
            let w: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let plan = MsaPlan::single(SparsityPattern::dense(Granularity::Word, n), w.clone()).unwrap();
            let (got, report) = sparse_forward(&h, &plan, &p).unwrap();
            let want = dense_attention(&h, &p, &w);
            assert!(got.sub(&want).unwrap().max_abs() < 1e-10, "n={n}");
            assert_eq!(report.total_pairs(), n * n);
        }
    }

    fn doc_plan(text: &str, rng: &mut Rng, d: usize) -> (Matrix, MsaPlan) {
        let dec = decompose(text, &TransitionTable::default(), None).unwrap();
        let h = rng.normal_matrix(dec.len(), d, 1.0);
        let w: Vec<f64> = (0..dec.len()).map(|_| rng.next_f64()).collect();
        let plan = MsaPlan::build(&h, &LevelSpans::from_decomposition(&dec), w, &MsaConfig::default()).unwrap();
        (h, plan)
    }

    #[test]
    fn single_token_returns_value_row() {
        let mut rng = Rng::new(3);
        let (h, plan) = doc_plan("pump", &mut rng, 4);
        assert_eq!(plan.levels.len(), 4);
        let p = MsaParams::init(4, &mut rng);
        let (out, _) = sparse_forward(&h, &plan, &p).unwrap();
        let value = h.matmul(&p.wv).unwrap();
        assert!(out.sub(&value).unwrap().max_abs() < 1e-15);
    }

    const TEXT: &str = "A pump for fluid. The rotor drives the fluid through a valve.\n\n\
        1. A pump assembly comprising a rotor and a seal. 2. The assembly of claim 1 wherein the seal is rubber.";

    #[test]
    fn tape_matches_sparse_execution() {
        let mut rng = Rng::new(4);
        let (h, plan) = doc_plan(TEXT, &mut rng, 6);
        let p = MsaParams::init(6, &mut rng);
        let (sparse, report) = sparse_forward(&h, &plan, &p).unwrap();
        let tape = Tape::new();
        let out = sparse_forward_tape(&tape, tape.constant(h), &plan, &p.on_tape(&tape)).unwrap();
        assert!(tape.value(out.output).sub(&sparse).unwrap().max_abs() < 1e-12);
        assert_eq!(report.levels.len(), 4);
        assert_eq!(report.total_pairs(), plan.total_pairs());
    }

    #[test]
    fn attention_rows_are_stochastic() {
        let mut rng = Rng::new(5);
        let (h, plan) = doc_plan(TEXT, &mut rng, 4);
        let p = MsaParams::init(4, &mut rng);
        for level in &plan.levels {
            let u = pool(&h, &level.spans);
            let logits = match level.scoring {
                LevelScoring::Scored => crate::msa::attn_scores(
                    &u.matmul(&p.wq).unwrap(),
                    &u.matmul(&p.wk).unwrap(),
                    &level.pattern,
                    p.lambda,
                    &pool_weights(&plan.weights, &level.spans),
                )
                .unwrap(),
                LevelScoring::Phrase { tau } => {
                    let groups: Vec<usize> = level.pattern.allowed.iter().map(|k| k[0]).collect();
                    let a = crate::msa::phrase_attention(&u, &groups, &p.w_phrase, tau).unwrap();
                    a.map(|x| if x > 0.0 { x.ln() } else { crate::numkit::MASKED })
                }
            };
            let a = softmax_rows(&logits).unwrap();
            for (i, row) in a.iter_rows().enumerate() {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for (j, &x) in row.iter().enumerate() {
                    if !level.pattern.is_allowed(i, j) {
                        assert_eq!(x, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn forward_gradients() {
        let mut rng = Rng::new(6);
        let (h, plan) = doc_plan(TEXT, &mut rng, 4);
        let p = MsaParams::init(4, &mut rng);
        let probe = rng.normal_matrix(h.rows(), 4, 1.0);
        let err = grad_check(
            |t, v| {
                let vars = MsaVars { wq: v[1], wk: v[2], wv: v[3], w_phrase: v[4], lambda: v[5] };
                let out = sparse_forward_tape(t, v[0], &plan, &vars)?;
                Ok(t.sum(t.mul(out.output, t.constant(probe.clone()))?))
            },
            &[h, p.wq, p.wk, p.wv, p.w_phrase, Matrix::scalar(0.5)],
            DEFAULT_EPS,
        )
        .unwrap();
        assert!(err < 1e-4, "err={err}");
    }

    #[test]
    fn length_mismatch() {
        let mut rng = Rng::new(7);
        let plan = MsaPlan::single(SparsityPattern::dense(Granularity::Word, 3), vec![0.0; 3]).unwrap();
        let p = MsaParams::init(2, &mut rng);
        assert!(matches!(sparse_forward(&Matrix::zeros(4, 2), &plan, &p), Err(Error::Dimension { .. })));
    }

    #[test]
    fn sixty_four_token_pair_count() {
        // Brute-force enumeration of every level's allowed set on the n = 64 synthetic document.
        let doc = synthetic_document(64, 8, 1);
        let plan = MsaPlan::build(&doc.features, &doc.spans, doc.weights.clone(), &MsaConfig::default()).unwrap();
        let n = 64;
        let h = &doc.features;
        let ls = 7;
        let mean: Vec<f64> = (0..8).map(|c| (0..n).map(|r| h[(r, c)]).sum::<f64>() / n as f64).collect();
        let mut by_score: Vec<(f64, usize)> = (0..n)
            .map(|j| ((0..8).map(|c| h[(j, c)] * mean[c]).sum(), j))
            .collect();
        by_score.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let global: BTreeSet<usize> = by_score[..ls].iter().map(|x| x.1).collect();
        let word: usize = (0..n)
            .map(|i| (0..n).filter(|&j| i.abs_diff(j) <= ls || global.contains(&j)).count())
            .sum();
        // One paragraph of 16 four-token phrases.
        let phrase = 16 * 16;
        let sentence = plan.levels[2].pattern.pairs();
        let paragraph = 1;
        let mut brute_sentence = 0;
        let u = pool(h, &doc.spans.sentences);
        let bank = PrototypeBank::fit(&u, 2).unwrap();
        let assign = bank.assign(&u);
        for i in 0..4 {
            brute_sentence += (0..4).filter(|&j| assign[j] == assign[i]).count();
        }
        assert_eq!(sentence, brute_sentence);
        assert_eq!(plan.levels[0].pattern.pairs(), word);
        assert_eq!(plan.levels[1].pattern.pairs(), phrase);
        assert_eq!(plan.levels[3].pattern.pairs(), paragraph);
        let total = word + phrase + sentence + paragraph;
        assert_eq!(plan.total_pairs(), total);
        assert!((total as f64) <= 8.0 * 64.0 * 6.0);
    }

    #[test]
    fn sweep_small_and_dense_law() {
        let opts = SweepOptions { dim: 4, seed: 0, repeats: 1, time_dense: true };
        let rows = complexity_sweep(&[2], &MsaConfig::default(), &opts).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].pairs <= 4 * 4 && rows[0].ratio().is_finite());
        assert!(complexity_sweep(&[1], &MsaConfig::default(), &opts).is_err());

        let rows = complexity_sweep(&[16, 32, 64], &MsaConfig::default(), &opts).unwrap();
        for w in rows.windows(2) {
            assert_eq!(w[1].dense_pairs, 4 * w[0].dense_pairs);
        }
    }

    #[test]
    fn report_csv() {
        let r = ComplexityReport {
            n: 8,
            levels: vec![LevelCost { level: "word".into(), units: 8, pairs: 22, wall_ms: 0.5 }],
        };
        assert_eq!(
            r.to_csv(),
            "level,n,pairs,pairs_per_nlogn,wall_ms\nword,8,22,0.916667,0.500\ntotal,8,22,0.916667,0.500\n"
        );
    }
}
