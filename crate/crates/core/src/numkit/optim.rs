use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Plain gradient descent: `p <- p - lr * g` for every pair.
pub fn sgd_step(params: &mut [Matrix], grads: &[Matrix], lr: f64) -> Result<()> {
    if !(lr >= 0.0) {
        return Err(Error::invalid(format!("learning rate must be >= 0, got {lr}")));
    }
    if params.len() != grads.len() {
        return Err(Error::dim("sgd_step", params.len(), grads.len()));
    }
    for (p, g) in params.iter_mut().zip(grads) {
        if p.shape() != g.shape() {
            return Err(Error::dim(
                "sgd_step",
                format!("{:?}", p.shape()),
                format!("{:?}", g.shape()),
            ));
        }
    }
    for (p, g) in params.iter_mut().zip(grads) {
        for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
            *pv -= lr * gv;
        }
    }
    Ok(())
}
