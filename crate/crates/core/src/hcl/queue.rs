use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::numkit::Matrix;

pub const DEFAULT_QUEUE_CAPACITY: usize = 64;

/// Fixed-capacity FIFO of embeddings from earlier batches.
///
/// Callers enqueue a batch only after its loss is computed, so the queue never
/// holds the pair it is scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeQueue {
    capacity: usize,
    dim: usize,
    items: VecDeque<Vec<f64>>,
}

impl NegativeQueue {
    pub fn new(capacity: usize, dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("negative queue capacity must be positive"));
        }
        Ok(Self { capacity, dim, items: VecDeque::with_capacity(capacity) })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::dim("negative queue entry", self.dim, v.len()));
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(v);
        Ok(())
    }

    pub fn push_rows(&mut self, m: &Matrix) -> Result<()> {
        m.iter_rows().try_for_each(|r| self.push(r.to_vec()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.items.iter().map(Vec::as_slice)
    }

    /// Queue contents as rows, oldest first, leaving out exact copies of
    /// `exclude`.
    pub fn snapshot_excluding(&self, exclude: &[&[f64]]) -> Matrix {
        let rows: Vec<&[f64]> = self
            .iter()
            .filter(|r| !exclude.contains(r))
            .collect();
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        rows.iter().for_each(|r| data.extend_from_slice(r));
        Matrix::from_vec(rows.len(), self.dim, data).expect("rows share the queue width")
    }
}
