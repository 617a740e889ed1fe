//! Node features: token embeddings, hierarchical CPC embeddings, tf-idf
//! statistics and citation-node initialization.

mod cite;
mod cpc;
mod embedding;
mod tfidf;

pub use cite::{cite_init, parse_citations, weighted_sum, CiteInit, Cited};
pub use cpc::{CpcCode, NO_SUBCLASS};
pub use embedding::{embed_text_node, EmbeddingTable, INIT_SCALE};
pub use tfidf::{document_terms, sparse_cosine, SparseVec, TfIdfModel};

use crate::error::{Error, Result};
use crate::numkit::Rng;

/// Concatenates the section, class, subclass and group sub-embeddings.
pub fn cpc_embed(code: &CpcCode, tables: &[EmbeddingTable; 4]) -> Result<Vec<f64>> {
    let width = tables[0].dim();
    if tables.iter().any(|t| t.dim() != width) {
        return Err(Error::invalid("CPC level tables must share one width"));
    }
    let mut out = Vec::with_capacity(4 * width);
    for (table, key) in tables.iter().zip(code.level_keys()) {
        out.extend_from_slice(table.embed(&key));
    }
    Ok(out)
}

/// Four level tables of width `d / 4` built from a set of known codes.
#[derive(Debug, Clone, PartialEq)]
pub struct CpcEmbedder {
    pub tables: [EmbeddingTable; 4],
}

impl CpcEmbedder {
    pub fn new<'a, I>(codes: I, dim: usize, rng: &mut Rng) -> Result<Self>
    where
        I: IntoIterator<Item = &'a CpcCode>,
    {
        if dim == 0 || !dim.is_multiple_of(4) {
            return Err(Error::invalid(format!(
                "embedding width {dim} must be a positive multiple of 4"
            )));
        }
        let mut keys: [Vec<String>; 4] = Default::default();
        for code in codes {
            for (k, key) in keys.iter_mut().zip(code.level_keys()) {
                k.push(key);
            }
        }
        let tables = keys.map(|k| EmbeddingTable::new(k, dim / 4, rng));
        Ok(Self { tables })
    }

    pub fn dim(&self) -> usize {
        4 * self.tables[0].dim()
    }

    pub fn embed(&self, code: &CpcCode) -> Vec<f64> {
        cpc_embed(code, &self.tables).expect("tables share a width by construction")
    }

    /// Row index of each level's key, for gathering on a tape.
    pub fn rows(&self, code: &CpcCode) -> [usize; 4] {
        let keys = code.level_keys();
        std::array::from_fn(|i| self.tables[i].lookup(&keys[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Matrix;
    use proptest::prelude::*;
    use crate::numkit::Rng;

    fn level_table(key: &str, row: &[f64]) -> EmbeddingTable {
        let w = Matrix::from_rows(&[vec![0.0; row.len()], row.to_vec()]).unwrap();
        EmbeddingTable::from_parts(vec![key.to_string()], w).unwrap()
    }

    #[test]
    fn zero_tables_give_zero_vector() {
        let e = CpcEmbedder {
            tables: std::array::from_fn(|_| {
                EmbeddingTable::from_parts(vec![], Matrix::zeros(1, 3)).unwrap()
            }),
        };
        assert_eq!(e.embed(&CpcCode::parse("A01B1/00").unwrap()), vec![0.0; 12]);
    }

    #[test]
    fn concatenation_order() {
        let tables = [
            level_table("A", &[1.0, 0.0]),
            level_table("01", &[0.0, 1.0]),
            level_table("B", &[2.0, 0.0]),
            level_table("1", &[0.0, 2.0]),
        ];
        let v = cpc_embed(&CpcCode::parse("A01B1/00").unwrap(), &tables).unwrap();
        assert_eq!(v, vec![1.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn shared_section_differs_only_outside_first_block() {
        let codes: Vec<CpcCode> = ["A01B1/00", "A47", "H04L9/00"]
            .iter()
            .map(|c| CpcCode::parse(c).unwrap())
            .collect();
        let e = CpcEmbedder::new(&codes, 8, &mut Rng::new(2)).unwrap();
        let (a, b) = (e.embed(&codes[0]), e.embed(&codes[1]));
        assert_eq!(a[..2], b[..2]);
        assert_ne!(a[2..], b[2..]);
        assert_ne!(a[..2], e.embed(&codes[2])[..2]);
    }

    #[test]
    fn width_must_divide_by_four() {
        assert!(CpcEmbedder::new(&[], 6, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn unknown_levels_use_oov_rows() {
        let e = CpcEmbedder::new(&[CpcCode::parse("A01B").unwrap()], 4, &mut Rng::new(0)).unwrap();
        assert_eq!(e.rows(&CpcCode::parse("G06F17/00").unwrap()), [0; 4]);
        assert_eq!(e.rows(&CpcCode::parse("A01B").unwrap()), [1, 1, 1, 1]);
    }

    proptest! {
        #[test]
        fn blocks_are_independent(delta in proptest::collection::vec(-1.0f64..1.0, 6)) {
            let code = CpcCode::parse("F16K1/00").unwrap();
            let mut e = CpcEmbedder::new(std::iter::once(&code), 8, &mut Rng::new(9)).unwrap();
            let before = e.embed(&code);
            for (w, d) in e.tables[1].weights_mut().data_mut().iter_mut().zip(&delta) {
                *w += d;
            }
            let after = e.embed(&code);
            prop_assert_eq!(&before[..2], &after[..2]);
            prop_assert_eq!(&before[4..], &after[4..]);
        }
    }
}
