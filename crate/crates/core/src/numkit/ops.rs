use crate::error::{Error, Result};
use crate::numkit::tape::softmax_row_in_place;
use crate::numkit::{dot, norm, Matrix};

/// Floor applied to the reference distribution of [`kl_div`].
pub const KL_FLOOR: f64 = 1e-9;

/// Tolerance on the unit sum of a probability vector.
const SIMPLEX_TOL: f64 = 1e-9;

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(m: &Matrix) -> Result<Matrix> {
    if m.is_empty() {
        return Err(Error::dim("softmax_rows", "non-empty matrix", "0 entries"));
    }
    m.ensure_finite("softmax_rows input")?;
    let mut out = m.clone();
    for r in 0..out.rows() {
        softmax_row_in_place(out.row_mut(r));
    }
    Ok(out)
}

/// Cosine similarity with a degeneracy flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineSim {
    pub value: f64,
    /// Set when either operand has zero norm; `value` is then 0.
    pub degenerate: bool,
}

pub fn cosine_sim(a: &[f64], b: &[f64]) -> CosineSim {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return CosineSim {
            value: 0.0,
            degenerate: true,
        };
    }
    CosineSim {
        value: (dot(a, b) / (na * nb)).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

fn check_simplex(name: &str, p: &[f64]) -> Result<()> {
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::invalid(format!("{name} has invalid probability {v}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::invalid(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

/// `KL(p ‖ q) = Σ p ln(p / max(q, 1e-9))`, with `0 ln 0 = 0`.
pub fn kl_div(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::dim("kl_div", p.len(), q.len()));
    }
    check_simplex("p", p)?;
    check_simplex("q", q)?;
    let kl = p
        .iter()
        .zip(q)
        .filter(|(pv, _)| **pv > 0.0)
        .map(|(pv, qv)| pv * (pv / qv.max(KL_FLOOR)).ln())
        .sum::<f64>();
    // Rounding can leave a tiny negative residue for p == q.
    Ok(kl.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softmax_examples() {
        let s = softmax_rows(&Matrix::row_vector(&[0.0, 0.0])).unwrap();
        assert_eq!(s.data(), &[0.5, 0.5]);

        let s = softmax_rows(&Matrix::row_vector(&[1000.0, 1000.0, 1000.0])).unwrap();
        for v in s.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }

        // e^0 / (e^0 + 3) = 0.25
        let s = softmax_rows(&Matrix::row_vector(&[0.0, 3f64.ln()])).unwrap();
        assert!((s.data()[0] - 0.25).abs() < 1e-15);
        assert!((s.data()[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn softmax_rejects_empty() {
        assert!(matches!(
            softmax_rows(&Matrix::zeros(0, 0)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn cosine_examples() {
        let v = [0.3, -1.2, 4.0];
        assert!((cosine_sim(&v, &v).value - 1.0).abs() < 1e-15);
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]).value, 0.0);
        let c = cosine_sim(&[1.0, 1.0], &[1.0, 0.0]);
        assert!((c.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(!c.degenerate);
    }

    #[test]
    fn cosine_zero_vector_is_flagged() {
        let c = cosine_sim(&[0.0, 0.0], &[1.0, 2.0]);
        assert_eq!(c.value, 0.0);
        assert!(c.degenerate);
    }

    #[test]
    fn kl_examples() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_div(&p, &p).unwrap(), 0.0);
        let v = kl_div(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(kl_div(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn kl_errors() {
        assert!(matches!(
            kl_div(&[1.0], &[0.5, 0.5]),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            kl_div(&[0.7, 0.7], &[0.5, 0.5]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn kl_floors_zero_reference() {
        let v = kl_div(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        let expected = 0.5 * 0.5f64.ln() + 0.5 * (0.5 / 1e-9f64).ln();
        assert!((v - expected).abs() < 1e-12);
    }

    fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, len).prop_filter_map("non-zero mass", |raw| {
            let total: f64 = raw.iter().sum();
            (total > 1e-6).then(|| raw.iter().map(|v| v / total).collect())
        })
    }

    proptest! {
        #[test]
        fn softmax_rows_sum_to_one(vals in proptest::collection::vec(-700.0f64..700.0, 1..40)) {
            let s = softmax_rows(&Matrix::row_vector(&vals)).unwrap();
            let total: f64 = s.data().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(s.data().iter().all(|v| *v >= 0.0));
        }

        #[test]
        fn kl_is_nonnegative((p, q) in (2usize..8).prop_flat_map(|n| (simplex(n), simplex(n)))) {
            prop_assert!(kl_div(&p, &q).unwrap() >= 0.0);
        }

        #[test]
        fn cosine_is_bounded(
            a in proptest::collection::vec(-10.0f64..10.0, 4),
            b in proptest::collection::vec(-10.0f64..10.0, 4),
        ) {
            let c = cosine_sim(&a, &b).value;
            prop_assert!((-1.0..=1.0).contains(&c));
        }
    }
}
