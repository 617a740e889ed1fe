use crate::error::{Error, Result};
use crate::numkit::{softmax_rows, Matrix, Tape, Var, KL_FLOOR};

/// Initial contrastive temperature.
pub const DEFAULT_TAU: f64 = 0.07;
/// Mass spread over all candidates when building an alignment target.
pub const TARGET_SMOOTHING: f64 = 1e-6;
pub const DEFAULT_MOMENTUM: f64 = 0.9;

/// Positive temperature stored as `ln τ` so gradient steps keep it positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature {
    pub log_tau: f64,
}

impl Temperature {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid(format!("temperature must be positive, got {tau}")));
        }
        Ok(Self { log_tau: tau.ln() })
    }

    pub fn tau(self) -> f64 {
        self.log_tau.exp()
    }
}

impl Default for Temperature {
    fn default() -> Self {
        Self { log_tau: DEFAULT_TAU.ln() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WordLoss {
    pub loss: Var,
    /// No negatives were available; the loss is the constant 0.
    pub no_negatives: bool,
}

/// Contrastive loss from precomputed similarities.
///
/// `s_pos` is 1×1, `s_neg` is 1×m, `log_tau` is 1×1. The standard form puts
/// the positive in the denominator; `literal` sums over negatives only.
pub fn info_nce(tape: &Tape, s_pos: Var, s_neg: Option<Var>, log_tau: Var, literal: bool) -> Result<WordLoss> {
    let s_neg = match s_neg {
        Some(v) if tape.shape(v).1 > 0 => v,
        _ if literal => {
            return Err(Error::invalid(
                "literal contrastive form needs at least one negative",
            ))
        }
        _ => return Ok(WordLoss { loss: tape.scalar(0.0), no_negatives: true }),
    };
    let tau = tape.exp(log_tau);
    let pos = tape.div_by(s_pos, tau)?;
    let neg = tape.div_by(s_neg, tau)?;
    let denom_terms = if literal { neg } else { tape.concat_cols(&[pos, neg])? };
    let lse = tape.logsumexp_rows(denom_terms);
    Ok(WordLoss { loss: tape.sub(lse, pos)?, no_negatives: false })
}

/// Word-level contrastive loss on cosine similarities of `h` (1×d) with its
/// positive (1×d) and the negatives (m×d).
pub fn loss_word(
    tape: &Tape,
    h: Var,
    h_pos: Var,
    negatives: Option<Var>,
    log_tau: Var,
    literal: bool,
) -> Result<WordLoss> {
    let s_pos = tape.cosine_rows(h, h_pos)?;
    let s_neg = negatives
        .filter(|&n| tape.shape(n).0 > 0)
        .map(|n| tape.cosine_rows(h, n))
        .transpose()?;
    info_nce(tape, s_pos, s_neg, log_tau, literal)
}

fn check_widths(q: (usize, usize), k: (usize, usize)) -> Result<usize> {
    if q.1 != k.1 || q.1 == 0 {
        return Err(Error::dim("sentence similarity width", q.1, k.1));
    }
    Ok(q.1)
}

/// Row-stochastic `softmax(Q Kᵀ / √d)`.
pub fn sent_sim_matrix(tape: &Tape, q: Var, k: Var) -> Result<Var> {
    let d = check_widths(tape.shape(q), tape.shape(k))?;
    let kt = tape.transpose(k);
    let scores = tape.matmul(q, kt)?;
    Ok(tape.softmax_rows(tape.scale(scores, 1.0 / (d as f64).sqrt())))
}

/// Plain-matrix `softmax(Q Kᵀ / √d)`.
pub fn sent_sim_values(q: &Matrix, k: &Matrix) -> Result<Matrix> {
    let d = check_widths(q.shape(), k.shape())?;
    softmax_rows(&q.matmul(&k.transpose())?.scale(1.0 / (d as f64).sqrt()))
}

/// A sentence and its candidate partners with the target distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentPair {
    /// Row of the similarity matrix.
    pub anchor: usize,
    /// Columns compared against.
    pub candidates: Vec<usize>,
    pub target: Vec<f64>,
    pub label: bool,
}

impl AlignmentPair {
    pub fn new(anchor: usize, candidates: Vec<usize>, target: Vec<f64>, label: bool) -> Result<Self> {
        if candidates.is_empty() || candidates.len() != target.len() {
            return Err(Error::dim("alignment target", candidates.len(), target.len()));
        }
        if target.iter().any(|&t| !(0.0..=1.0).contains(&t))
            || (target.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::invalid("alignment target must be a distribution"));
        }
        Ok(Self { anchor, candidates, target, label })
    }

    /// One-hot target on `aligned`, smoothed by `TARGET_SMOOTHING`.
    pub fn one_hot(anchor: usize, candidates: Vec<usize>, aligned: usize, label: bool) -> Result<Self> {
        let k = candidates.len() as f64;
        let pos = candidates.iter().position(|&c| c == aligned).ok_or_else(|| {
            Error::invalid(format!("aligned sentence {aligned} is not a candidate"))
        })?;
        let target = (0..candidates.len())
            .map(|j| {
                let hot = if j == pos { 1.0 } else { 0.0 };
                (1.0 - TARGET_SMOOTHING) * hot + TARGET_SMOOTHING / k
            })
            .collect();
        Self::new(anchor, candidates, target, label)
    }
}

/// Mean over pairs of `1[y = 1] · KL(p ‖ q)`, with `p` the similarity row
/// restricted to the candidates and renormalized.
pub fn loss_sentence(tape: &Tape, pairs: &[AlignmentPair], a: Var) -> Result<Var> {
    if pairs.is_empty() {
        return Err(Error::invalid("sentence alignment needs at least one pair"));
    }
    let (rows, cols) = tape.shape(a);
    let mut terms = Vec::new();
    for pair in pairs.iter().filter(|p| p.label) {
        if pair.anchor >= rows || pair.candidates.iter().any(|&c| c >= cols) {
            return Err(Error::dim(
                "alignment pair",
                format!("indices within {rows}x{cols}"),
                format!("anchor {} candidates {:?}", pair.anchor, pair.candidates),
            ));
        }
        let idx = pair.candidates.iter().map(|&c| pair.anchor * cols + c).collect();
        let row = tape.gather(a, idx, 1, pair.candidates.len())?;
        let p = tape.div_by(row, tape.sum(row))?;
        let ln_q = Matrix::row_vector(
            &pair.target.iter().map(|q| q.max(KL_FLOOR).ln()).collect::<Vec<_>>(),
        );
        let log_ratio = tape.sub(tape.ln_floor(p, KL_FLOOR), tape.constant(ln_q))?;
        terms.push(tape.sum(tape.mul(p, log_ratio)?));
    }
    let total = match terms.len() {
        0 => tape.scalar(0.0),
        _ => tape.sum(tape.concat_cols(&terms)?),
    };
    Ok(tape.scale(total, 1.0 / pairs.len() as f64))
}

/// Category prototypes, updated by moving average outside the tape.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    pub prototypes: Matrix,
    pub momentum: f64,
}

#[derive(Debug, Clone)]
pub struct PrototypeLoss {
    pub loss: Var,
    /// The frozen prototype leaf; no gradient ever reaches it.
    pub prototypes: Var,
    /// Member mean per category, `None` for categories with no members.
    pub means: Vec<Option<Vec<f64>>>,
    pub skipped: Vec<usize>,
}

impl PrototypeSet {
    pub fn new(prototypes: Matrix, momentum: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&momentum) {
            return Err(Error::invalid(format!("momentum {momentum} outside [0, 1]")));
        }
        prototypes.ensure_finite("prototypes")?;
        Ok(Self { prototypes, momentum })
    }

    pub fn zeros(categories: usize, dim: usize) -> Self {
        Self { prototypes: Matrix::zeros(categories, dim), momentum: DEFAULT_MOMENTUM }
    }

    pub fn len(&self) -> usize {
        self.prototypes.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.prototypes.rows() == 0
    }

    /// `μ_c ← ρ μ_c + (1 − ρ) mean_c` for categories that had members.
    pub fn ema_update(&mut self, means: &[Option<Vec<f64>>]) -> Result<()> {
        if means.len() != self.len() {
            return Err(Error::dim("prototype update", self.len(), means.len()));
        }
        let rho = self.momentum;
        for (c, m) in means.iter().enumerate() {
            if let Some(m) = m {
                // Written as a step toward the mean so that a prototype already
                // equal to its mean stays bit-identical.
                for (mu, x) in self.prototypes.row_mut(c).iter_mut().zip(m) {
                    *mu += (1.0 - rho) * (x - *mu);
                }
            }
        }
        self.prototypes.ensure_finite("prototypes")
    }
}

/// `Σ_c ‖μ_c − mean_{x ∈ c} f(x)‖²` with the prototypes frozen.
///
/// `encoded` is n×d; `category[i]` is the category of row `i`.
pub fn loss_prototype(
    tape: &Tape,
    protos: &PrototypeSet,
    encoded: Var,
    category: &[usize],
) -> Result<PrototypeLoss> {
    let (n, d) = tape.shape(encoded);
    if category.len() != n {
        return Err(Error::dim("prototype assignments", n, category.len()));
    }
    if d != protos.prototypes.cols() {
        return Err(Error::dim("prototype width", protos.prototypes.cols(), d));
    }
    let c_total = protos.len();
    let mut counts = vec![0usize; c_total];
    for &c in category {
        if c >= c_total {
            return Err(Error::Lookup { kind: "category", key: c.to_string() });
        }
        counts[c] += 1;
    }
    let present: Vec<usize> = (0..c_total).filter(|&c| counts[c] > 0).collect();
    let skipped = (0..c_total).filter(|&c| counts[c] == 0).collect();

    let mut avg = Matrix::zeros(present.len(), n);
    for (r, &c) in present.iter().enumerate() {
        for (i, &ci) in category.iter().enumerate() {
            if ci == c {
                avg.row_mut(r)[i] = 1.0 / counts[c] as f64;
            }
        }
    }
    let mu_leaf = tape.param(protos.prototypes.clone());
    let mu = tape.stop_gradient(mu_leaf);
    let loss = if present.is_empty() {
        tape.scalar(0.0)
    } else {
        let means = tape.matmul(tape.constant(avg), encoded)?;
        let mu_present = tape.select_rows(mu, &present)?;
        tape.sum(tape.square(tape.sub(mu_present, means)?))
    };

    let encoded_value = tape.value(encoded);
    let mut means = vec![None; c_total];
    for &c in &present {
        let mut m = vec![0.0; d];
        for (i, _) in category.iter().enumerate().filter(|(_, &ci)| ci == c) {
            for (a, x) in m.iter_mut().zip(encoded_value.row(i)) {
                *a += x / counts[c] as f64;
            }
        }
        means[c] = Some(m);
    }
    Ok(PrototypeLoss { loss, prototypes: mu_leaf, means, skipped })
}

/// Unconstrained logits whose softmax gives the level weights (α, β, γ).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossWeights {
    pub logits: [f64; 3],
}

impl LossWeights {
    pub fn realized(&self) -> [f64; 3] {
        let m = softmax_rows(&Matrix::row_vector(&self.logits)).expect("three finite logits");
        [m.data()[0], m.data()[1], m.data()[2]]
    }
}

/// `α L_w + β L_s + γ L_p` with `(α, β, γ) = softmax(weights)`; `weights` is 1×3.
pub fn loss_hcl(tape: &Tape, weights: Var, lw: Var, ls: Var, lp: Var) -> Result<Var> {
    for (name, v) in [("word", lw), ("sentence", ls), ("prototype", lp)] {
        let x = tape.item(v);
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("{name}-level loss is {x}")));
        }
    }
    let alpha = tape.softmax_rows(weights);
    let comps = tape.concat_cols(&[lw, ls, lp])?;
    Ok(tape.sum(tape.mul(alpha, comps)?))
}
