use crate::error::{Error, Result};
use crate::msa::SparsityPattern;
use crate::numkit::{dot, softmax_rows, Matrix, Tape, Var, MASKED};

pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_PHRASE_TAU: f64 = 1.0;

/// Min–max scaling to `[0, 1]`; all zeros when the weights are constant.
pub fn normalize_weights(raw: &[f64]) -> Vec<f64> {
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|w| (w - lo) / (hi - lo)).collect()
}

fn check_square(q: (usize, usize), k: (usize, usize), pattern: &SparsityPattern, stat: usize) -> Result<()> {
    if q.1 != k.1 {
        return Err(Error::dim("query/key width", q.1, k.1));
    }
    if q.0 != k.0 || pattern.len() != q.0 || stat != q.0 {
        return Err(Error::dim(
            "attention length",
            q.0,
            format!("keys {} pattern {} weights {}", k.0, pattern.len(), stat),
        ));
    }
    Ok(())
}

/// `q_i · k_j / √d + λ w_i w_j` on allowed pairs, `MASKED` elsewhere.
pub fn attn_scores(q: &Matrix, k: &Matrix, pattern: &SparsityPattern, lambda: f64, w: &[f64]) -> Result<Matrix> {
    check_square(q.shape(), k.shape(), pattern, w.len())?;
    let n = q.rows();
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let mut out = Matrix::filled(n, n, MASKED);
    for (i, keys) in pattern.allowed.iter().enumerate() {
        for &j in keys {
            out.row_mut(i)[j] = dot(q.row(i), k.row(j)) * scale + lambda * w[i] * w[j];
        }
    }
    Ok(out)
}

/// Tape version of [`attn_scores`]; `lambda` is 1×1.
pub fn attn_scores_tape(
    tape: &Tape,
    q: Var,
    k: Var,
    pattern: &SparsityPattern,
    lambda: Var,
    w: &[f64],
) -> Result<Var> {
    check_square(tape.shape(q), tape.shape(k), pattern, w.len())?;
    let d = tape.shape(q).1;
    let qk = tape.scale(tape.matmul(q, tape.transpose(k))?, 1.0 / (d as f64).sqrt());
    let wv = Matrix::from_vec(w.len(), 1, w.to_vec())?;
    let outer = tape.constant(wv.matmul(&wv.transpose())?);
    let stat = tape.scale_by(outer, lambda)?;
    let masked = tape.add(tape.add(qk, stat)?, tape.constant(pattern.mask(MASKED)))?;
    Ok(masked)
}

/// Within-group weights `softmax_n(h_m W h_nᵀ / τ)`; exactly 0 across groups.
pub fn phrase_attention(h: &Matrix, group: &[usize], w_phrase: &Matrix, tau: f64) -> Result<Matrix> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("phrase temperature must be positive, got {tau}")));
    }
    if group.len() != h.rows() {
        return Err(Error::dim("phrase grouping", h.rows(), group.len()));
    }
    let sim = h.matmul(w_phrase)?.matmul(&h.transpose())?.scale(1.0 / tau);
    let mut masked = sim;
    for (i, gi) in group.iter().enumerate() {
        for (j, gj) in group.iter().enumerate() {
            if gi != gj {
                masked.row_mut(i)[j] = MASKED;
            }
        }
    }
    softmax_rows(&masked)
}

/// Tape version of the masked phrase logits (before the row softmax).
pub fn phrase_logits_tape(tape: &Tape, h: Var, w_phrase: Var, pattern: &SparsityPattern, tau: f64) -> Result<Var> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("phrase temperature must be positive, got {tau}")));
    }
    let sim = tape.matmul(tape.matmul(h, w_phrase)?, tape.transpose(h))?;
    tape.add(tape.scale(sim, 1.0 / tau), tape.constant(pattern.mask(MASKED)))
}
