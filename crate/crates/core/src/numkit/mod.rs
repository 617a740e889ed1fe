//! Dense numeric core: matrices, a seeded generator, a reverse-mode gradient
//! tape, finite-difference checking and a gradient-descent step.

mod gradcheck;
mod matrix;
mod ops;
mod optim;
mod rng;
mod tape;

pub use gradcheck::{grad_check, DEFAULT_EPS};
pub use matrix::{dot, norm, Matrix};
pub use ops::{cosine_sim, kl_div, softmax_rows, CosineSim, KL_FLOOR};
pub use optim::sgd_step;
pub use rng::Rng;
pub use tape::{Gradients, Tape, Var};

/// Large negative additive mask; underflows to an exact zero weight after softmax.
pub const MASKED: f64 = -1e30;
