//! Patent phrase modelling with hierarchical contrastive losses, heterogeneous
//! multimodal graph attention and multi-granularity sparse attention.

pub mod error;
pub mod features;
pub mod hcl;
pub mod mgat;
pub mod msa;
pub mod numkit;
pub mod pipeline;
pub mod textseg;

pub use error::{Error, Result};
pub use numkit::{Matrix, Rng, Tape, Var};
