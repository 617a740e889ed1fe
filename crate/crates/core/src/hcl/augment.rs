use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkit::Rng;

/// Share of lexicon-covered tokens replaced by default.
pub const DEFAULT_MASK_RATE: f64 = 0.15;

/// Term → synonym list, read from `term<TAB>syn1,syn2,...` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, syns) = line.split_once('\t').ok_or_else(|| {
                Error::invalid(format!("lexicon line {}: missing tab separator", i + 1))
            })?;
            let term = term.trim().to_lowercase();
            let syns: Vec<String> = syns
                .split(',')
                .map(|s| s.trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect();
            if term.is_empty() || syns.is_empty() {
                return Err(Error::invalid(format!(
                    "lexicon line {}: needs a term and at least one synonym",
                    i + 1
                )));
            }
            entries.insert(term, syns);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<S>)>,
        S: Into<String>,
    {
        let entries = pairs
            .into_iter()
            .map(|(t, s)| (t.into(), s.into_iter().map(Into::into).collect()))
            .collect();
        Self { entries }
    }

    pub fn synonyms(&self, term: &str) -> Option<&[String]> {
        self.entries.get(term).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Augmented {
    pub tokens: Vec<String>,
    /// Positions that were replaced, ascending.
    pub replaced: Vec<usize>,
    /// Set when augmentation was skipped.
    pub warning: Option<String>,
}

/// Number of replacements for `covered` maskable tokens at `rate`.
///
/// The small tolerance stops products like `0.15 * 20 = 3.0000000000000004`
/// from rounding up to an extra token.
pub fn mask_count(covered: usize, rate: f64) -> usize {
    let raw = rate * covered as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(covered)
}

/// Replaces `⌈rate · covered⌉` lexicon-covered tokens with a uniformly drawn
/// synonym; positions are drawn without replacement.
pub fn augment_mask<S: AsRef<str>>(
    tokens: &[S],
    lexicon: &Lexicon,
    rate: f64,
    rng: &mut Rng,
) -> Result<Augmented> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::invalid(format!("mask rate {rate} outside [0, 1]")));
    }
    let mut out: Vec<String> = tokens.iter().map(|t| t.as_ref().to_string()).collect();
    if lexicon.is_empty() {
        return Ok(Augmented {
            tokens: out,
            replaced: Vec::new(),
            warning: Some("empty lexicon; augmentation skipped".into()),
        });
    }
    let covered: Vec<usize> = (0..out.len())
        .filter(|&i| lexicon.synonyms(&out[i]).is_some())
        .collect();
    let k = mask_count(covered.len(), rate);
    let mut replaced: Vec<usize> = rng
        .sample_indices(covered.len(), k)
        .into_iter()
        .map(|j| covered[j])
        .collect();
    replaced.sort_unstable();
    for &i in &replaced {
        let syns = lexicon.synonyms(&out[i]).expect("covered token");
        out[i] = syns[rng.below(syns.len())].clone();
    }
    Ok(Augmented { tokens: out, replaced, warning: None })
}
