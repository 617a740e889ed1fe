use crate::error::{Error, Result};
use crate::features::TfIdfModel;

/// Citation-node initial feature.
#[derive(Debug, Clone, PartialEq)]
pub struct CiteInit {
    pub vector: Vec<f64>,
    /// True when the cited set was empty and `vector` is all zeros.
    pub degenerate: bool,
}

/// One cited patent: its document id in the tf-idf model and its embedding.
#[derive(Debug, Clone, Copy)]
pub struct Cited<'a> {
    pub doc: usize,
    pub embedding: &'a [f64],
}

/// `Σ_p cos_tfidf(target, p) · embedding(p)` over the cited set.
pub fn cite_init(model: &TfIdfModel, target: usize, cited: &[Cited<'_>], dim: usize) -> Result<CiteInit> {
    let sims = cited
        .iter()
        .map(|c| model.cosine(target, c.doc))
        .collect::<Result<Vec<_>>>()?;
    let embeddings: Vec<&[f64]> = cited.iter().map(|c| c.embedding).collect();
    weighted_sum(&sims, &embeddings, dim)
}

/// `Σ_p w_p · e_p`; zero vector flagged degenerate when empty.
pub fn weighted_sum(weights: &[f64], embeddings: &[&[f64]], dim: usize) -> Result<CiteInit> {
    if weights.len() != embeddings.len() {
        return Err(Error::dim(
            "cite_init weights",
            embeddings.len().to_string(),
            weights.len().to_string(),
        ));
    }
    let mut vector = vec![0.0; dim];
    for (w, e) in weights.iter().zip(embeddings) {
        if e.len() != dim {
            return Err(Error::dim("cited embedding", dim.to_string(), e.len().to_string()));
        }
        for (v, x) in vector.iter_mut().zip(e.iter()) {
            *v += w * x;
        }
    }
    Ok(CiteInit { vector, degenerate: embeddings.is_empty() })
}

/// Parses a citations sidecar: one `citing_id<TAB>cited_id` pair per line;
/// blank lines and `#` comments are skipped.
pub fn parse_citations(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t').map(str::trim);
        match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                out.push((a.to_string(), b.to_string()));
            }
            _ => {
                return Err(Error::invalid(format!(
                    "citations line {}: expected `citing<TAB>cited`, got {line:?}",
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}
