use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::textseg::{tokenize, TokenKind};

/// Sparse term → weight vector; sorted keys keep sums reproducible.
pub type SparseVec = BTreeMap<String, f64>;

/// TF-IDF statistics over a fixed corpus.
///
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, term frequency is the raw count.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    df: BTreeMap<String, usize>,
    n_docs: usize,
    docs: Vec<SparseVec>,
}

/// Lowercased word and number surfaces of `text`; punctuation and claim
/// markers carry no term content.
pub fn document_terms(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| matches!(t.kind, TokenKind::Word | TokenKind::Number))
        .map(|t| t.surface)
        .collect()
}

fn counts<S: AsRef<str>>(terms: &[S]) -> BTreeMap<&str, usize> {
    let mut c = BTreeMap::new();
    for t in terms {
        *c.entry(t.as_ref()).or_insert(0) += 1;
    }
    c
}

impl TfIdfModel {
    pub fn fit<S: AsRef<str>>(corpus: &[Vec<S>]) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::invalid("tf-idf needs at least one document"));
        }
        let mut df = BTreeMap::new();
        for doc in corpus {
            for term in counts(doc).keys() {
                *df.entry(term.to_string()).or_insert(0) += 1;
            }
        }
        let mut model = Self { df, n_docs: corpus.len(), docs: Vec::new() };
        model.docs = corpus.iter().map(|d| model.vectorize(d)).collect();
        Ok(model)
    }

    pub fn fit_texts<S: AsRef<str>>(texts: &[S]) -> Result<Self> {
        let corpus: Vec<Vec<String>> = texts.iter().map(|t| document_terms(t.as_ref())).collect();
        Self::fit(&corpus)
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn idf(&self, term: &str) -> f64 {
        ((1 + self.n_docs) as f64 / (1 + self.df(term)) as f64).ln() + 1.0
    }

    pub fn vectorize<S: AsRef<str>>(&self, terms: &[S]) -> SparseVec {
        counts(terms)
            .into_iter()
            .map(|(t, c)| (t.to_string(), c as f64 * self.idf(t)))
            .collect()
    }

    pub fn doc(&self, id: usize) -> Result<&SparseVec> {
        self.docs.get(id).ok_or_else(|| Error::Lookup {
            kind: "document",
            key: id.to_string(),
        })
    }

    /// Cosine similarity of two fitted documents.
    pub fn cosine(&self, d1: usize, d2: usize) -> Result<f64> {
        Ok(sparse_cosine(self.doc(d1)?, self.doc(d2)?))
    }

    /// Per-token tf-idf weight, with tf counted within `terms` itself.
    pub fn token_weights<S: AsRef<str>>(&self, terms: &[S]) -> Vec<f64> {
        let c = counts(terms);
        terms
            .iter()
            .map(|t| c[t.as_ref()] as f64 * self.idf(t.as_ref()))
            .collect()
    }
}

/// Cosine of two sparse vectors; 0 when either is empty or all-zero.
pub fn sparse_cosine(a: &SparseVec, b: &SparseVec) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter_map(|(k, v)| large.get(k).map(|w| v * w))
        .sum();
    let na = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}
