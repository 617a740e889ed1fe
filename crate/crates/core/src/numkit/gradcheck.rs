use crate::error::{Error, Result};
use crate::numkit::{Matrix, Tape, Var};

pub const DEFAULT_EPS: f64 = 1e-5;

/// Compares tape gradients against central finite differences.
///
/// `f` builds a scalar on the given tape from the registered parameter vars.
/// Returns the maximum over all parameter entries of
/// `|analytic - numeric| / max(1, |analytic|)`.
pub fn grad_check<F>(f: F, params: &[Matrix], eps: f64) -> Result<f64>
where
    F: Fn(&Tape, &[Var]) -> Result<Var>,
{
    let tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let out = f(&tape, &vars)?;
    let value = tape.item(out);
    if !value.is_finite() {
        return Err(Error::NonFinite("grad_check objective".into()));
    }
    let grads = tape.backward(out)?;
    let analytic: Vec<Matrix> = vars.iter().map(|v| grads.get(*v)).collect();

    let eval = |perturbed: &[Matrix]| -> Result<f64> {
        let t = Tape::new();
        let vs: Vec<Var> = perturbed.iter().map(|p| t.param(p.clone())).collect();
        let o = f(&t, &vs)?;
        let v = t.item(o);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("grad_check objective (perturbed)".into()))
        }
    };

    let mut work: Vec<Matrix> = params.to_vec();
    let mut worst = 0.0f64;
    for (pi, grad) in analytic.iter().enumerate() {
        for k in 0..params[pi].len() {
            let orig = params[pi].data()[k];
            work[pi].data_mut()[k] = orig + eps;
            let plus = eval(&work)?;
            work[pi].data_mut()[k] = orig - eps;
            let minus = eval(&work)?;
            work[pi].data_mut()[k] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = grad.data()[k];
            let err = (a - numeric).abs() / a.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
