use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the word-level contrastive loss draws its negatives from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeSource {
    /// The other augmented anchors of the current batch.
    Batch,
    /// A FIFO of anchor embeddings from earlier steps.
    Queue,
}

/// Training and model hyperparameters. Every field has a default, so an empty
/// TOML file is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub dim: usize,
    pub steps: usize,
    pub lr: f64,
    /// Records per step; 0 means the whole set every step.
    pub batch_size: usize,

    pub hcl: bool,
    pub mgat: bool,
    pub msa: bool,

    pub hcl_weight: f64,
    pub tau: f64,
    pub literal_infonce: bool,
    pub negatives: NegativeSource,
    pub queue_capacity: usize,
    pub mask_rate: f64,
    pub momentum: f64,

    pub mgat_layers: usize,
    pub mgat_heads: usize,

    /// Initial phrase threshold.
    pub theta: f64,
    /// Temperature of the smooth phrase gate used while training.
    pub gate_temperature: f64,
    pub phrase_tau: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dim: 16,
            steps: 200,
            lr: 0.5,
            batch_size: 0,
            hcl: true,
            mgat: true,
            msa: true,
            hcl_weight: 0.1,
            tau: crate::hcl::DEFAULT_TAU,
            literal_infonce: false,
            negatives: NegativeSource::Batch,
            queue_capacity: crate::hcl::DEFAULT_QUEUE_CAPACITY,
            mask_rate: crate::hcl::DEFAULT_MASK_RATE,
            momentum: crate::hcl::DEFAULT_MOMENTUM,
            mgat_layers: 1,
            mgat_heads: 1,
            theta: crate::textseg::DEFAULT_THETA,
            gate_temperature: 0.1,
            phrase_tau: crate::msa::DEFAULT_PHRASE_TAU,
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are plain scalars")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dim == 0 || !self.dim.is_multiple_of(4) {
            return bad(format!("dim must be a positive multiple of 4, got {}", self.dim));
        }
        if self.mgat && (self.mgat_heads == 0 || !self.dim.is_multiple_of(self.mgat_heads)) {
            return bad(format!("dim {} is not divisible into {} heads", self.dim, self.mgat_heads));
        }
        if self.mgat && self.mgat_layers == 0 {
            return bad("mgat needs at least one layer".into());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be finite and >= 0, got {}", self.lr));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("theta must lie in (0, 1), got {}", self.theta));
        }
        for (name, v) in [
            ("tau", self.tau),
            ("gate_temperature", self.gate_temperature),
            ("phrase_tau", self.phrase_tau),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.mask_rate) || !(0.0..1.0).contains(&self.momentum) {
            return bad("mask_rate must lie in [0, 1] and momentum in [0, 1)".into());
        }
        if !(self.hcl_weight >= 0.0) {
            return bad(format!("hcl_weight must be >= 0, got {}", self.hcl_weight));
        }
        if self.hcl && self.negatives == NegativeSource::Queue && self.queue_capacity == 0 {
            return bad("queue negatives need queue_capacity > 0".into());
        }
        Ok(())
    }
}
