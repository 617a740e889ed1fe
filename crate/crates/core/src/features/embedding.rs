use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};

/// Half-width of the uniform initialization interval.
pub const INIT_SCALE: f64 = 0.1;

/// Trainable token → vector lookup. Row 0 is the out-of-vocabulary row; known
/// tokens follow in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    weights: Matrix,
}

impl EmbeddingTable {
    pub const OOV: usize = 0;

    /// Builds a table over the distinct tokens of `tokens` (first occurrence
    /// wins), initialized uniformly in `[-0.1, 0.1]`.
    pub fn new<I, S>(tokens: I, dim: usize, rng: &mut Rng) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vec::new();
        let mut index = HashMap::new();
        for t in tokens {
            let t = t.as_ref();
            if !index.contains_key(t) {
                index.insert(t.to_string(), vocab.len() + 1);
                vocab.push(t.to_string());
            }
        }
        let weights = rng.uniform_matrix(vocab.len() + 1, dim, -INIT_SCALE, INIT_SCALE);
        Self { vocab, index, weights }
    }

    /// `weights` must have one row per vocabulary entry plus the OOV row.
    pub fn from_parts(vocab: Vec<String>, weights: Matrix) -> Result<Self> {
        if weights.rows() != vocab.len() + 1 {
            return Err(Error::dim(
                "embedding table",
                format!("{} rows", vocab.len() + 1),
                format!("{} rows", weights.rows()),
            ));
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, v) in vocab.iter().enumerate() {
            if index.insert(v.clone(), i + 1).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary entry {v:?}")));
            }
        }
        Ok(Self { vocab, index, weights })
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    /// Row index for `token`, falling back to the OOV row.
    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Self::OOV)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn embed(&self, token: &str) -> &[f64] {
        self.weights.row(self.lookup(token))
    }
}

/// Mean of the token rows of a sentence.
pub fn embed_text_node<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> Result<Vec<f64>> {
    if tokens.is_empty() {
        return Err(Error::invalid("cannot embed an empty sentence"));
    }
    let mut out = vec![0.0; table.dim()];
    for t in tokens {
        for (o, v) in out.iter_mut().zip(table.embed(t.as_ref())) {
            *o += v;
        }
    }
    let n = tokens.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    Ok(out)
}
