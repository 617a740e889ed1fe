//! Tokenization and the four-level word / phrase / sentence / paragraph
//! decomposition of a document.
//!
//! Paragraphs are split first, sentences inside each paragraph, phrases inside
//! each sentence, so the levels nest strictly by construction.

mod segment;
mod token;

use std::fmt;

pub use segment::{
    parse_section_labels, segment_by_scores, segment_paragraphs, segment_phrases,
    segment_sentences, Paragraph, SectionLabel, Span, TransitionTable, DEFAULT_THETA,
};
pub use token::{is_stopword, reconstruct, tokenize, Token, TokenClass, TokenKind, STOPWORDS};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Granularity {
    Word,
    Phrase,
    Sentence,
    Paragraph,
}

impl Granularity {
    pub const ALL: [Granularity; 4] = [
        Granularity::Word,
        Granularity::Phrase,
        Granularity::Sentence,
        Granularity::Paragraph,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Granularity::Word => "word",
            Granularity::Phrase => "phrase",
            Granularity::Sentence => "sentence",
            Granularity::Paragraph => "paragraph",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GranularityView {
    pub level: Granularity,
    pub spans: Vec<Span>,
}

impl GranularityView {
    /// Index of the span holding token `i`.
    pub fn unit_of(&self, i: usize) -> Option<usize> {
        let k = self.spans.partition_point(|s| s.end <= i);
        (k < self.spans.len() && self.spans[k].start <= i).then_some(k)
    }

    /// For each token, the index of its span.
    pub fn membership(&self, n_tokens: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n_tokens];
        for (k, s) in self.spans.iter().enumerate() {
            for i in s.indices() {
                out[i] = k;
            }
        }
        out
    }
}

/// A document split into the four granularity views.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub tokens: Vec<Token>,
    pub words: GranularityView,
    pub phrases: GranularityView,
    pub sentences: GranularityView,
    pub paragraphs: GranularityView,
    /// Section label per paragraph span, when labels were supplied.
    pub paragraph_labels: Vec<Option<String>>,
}

impl Decomposition {
    pub fn view(&self, level: Granularity) -> &GranularityView {
        match level {
            Granularity::Word => &self.words,
            Granularity::Phrase => &self.phrases,
            Granularity::Sentence => &self.sentences,
            Granularity::Paragraph => &self.paragraphs,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Checks that `spans` are sorted, disjoint and cover `0..n`.
pub fn check_partition(spans: &[Span], n: usize) -> Result<()> {
    let mut cursor = 0;
    for s in spans {
        if s.start != cursor || s.is_empty() {
            return Err(Error::Internal(format!(
                "span {s} breaks the partition at token {cursor}"
            )));
        }
        cursor = s.end;
    }
    if cursor != n {
        return Err(Error::Internal(format!("spans stop at {cursor} of {n} tokens")));
    }
    Ok(())
}

/// Checks that every inner span lies inside exactly one outer span.
pub fn check_nesting(inner: &[Span], outer: &[Span]) -> Result<()> {
    for s in inner {
        let holders = outer.iter().filter(|o| o.contains(s)).count();
        if holders != 1 {
            return Err(Error::Internal(format!(
                "span {s} is contained in {holders} enclosing spans"
            )));
        }
    }
    Ok(())
}

fn shift(spans: Vec<Span>, by: usize) -> impl Iterator<Item = Span> {
    spans.into_iter().map(move |s| Span::new(s.start + by, s.end + by))
}

pub fn decompose(
    text: &str,
    table: &TransitionTable,
    labels: Option<&[SectionLabel]>,
) -> Result<Decomposition> {
    decompose_tokens(tokenize(text), table, labels)
}

pub fn decompose_tokens(
    tokens: Vec<Token>,
    table: &TransitionTable,
    labels: Option<&[SectionLabel]>,
) -> Result<Decomposition> {
    let paragraphs = segment_paragraphs(&tokens, labels)?;
    let mut sentences = Vec::new();
    let mut phrases = Vec::new();
    for p in &paragraphs {
        let para = &tokens[p.span.indices()];
        for s in shift(segment_sentences(para), p.span.start) {
            phrases.extend(shift(segment_phrases(&tokens[s.indices()], table), s.start));
            sentences.push(s);
        }
    }
    let words: Vec<Span> = (0..tokens.len()).map(|i| Span::new(i, i + 1)).collect();
    let paragraph_spans: Vec<Span> = paragraphs.iter().map(|p| p.span).collect();

    let n = tokens.len();
    for spans in [&words, &phrases, &sentences, &paragraph_spans] {
        check_partition(spans, n)?;
    }
    check_nesting(&phrases, &sentences)?;
    check_nesting(&sentences, &paragraph_spans)?;

    Ok(Decomposition {
        tokens,
        words: GranularityView { level: Granularity::Word, spans: words },
        phrases: GranularityView { level: Granularity::Phrase, spans: phrases },
        sentences: GranularityView { level: Granularity::Sentence, spans: sentences },
        paragraphs: GranularityView { level: Granularity::Paragraph, spans: paragraph_spans },
        paragraph_labels: paragraphs.into_iter().map(|p| p.label).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_sentence_text() {
        let d = decompose("a valve for a pump", &TransitionTable::default(), None).unwrap();
        assert_eq!(d.sentences.spans, vec![Span::new(0, 5)]);
        assert_eq!(d.paragraphs.spans, vec![Span::new(0, 5)]);
        assert_eq!(d.words.spans.len(), 5);
    }

    #[test]
    fn empty_text() {
        let d = decompose("", &TransitionTable::default(), None).unwrap();
        assert!(d.is_empty());
        for level in Granularity::ALL {
            assert!(d.view(level).spans.is_empty());
        }
    }

    #[test]
    fn phrases_snap_to_sentences() {
        // A table that would merge everything still cannot cross the sentence end.
        let table = TransitionTable::uniform(1.0, 0.5).unwrap();
        let d = decompose("red pump. blue valve", &table, None).unwrap();
        assert_eq!(d.sentences.spans, vec![Span::new(0, 3), Span::new(3, 5)]);
        assert_eq!(d.phrases.spans, vec![Span::new(0, 3), Span::new(3, 5)]);
    }

    #[test]
    fn unit_lookup() {
        let d = decompose("red pump. blue valve", &TransitionTable::default(), None).unwrap();
        assert_eq!(d.sentences.unit_of(4), Some(1));
        assert_eq!(d.sentences.membership(5), vec![0, 0, 0, 1, 1]);
        assert_eq!(d.sentences.unit_of(9), None);
    }

    #[test]
    fn nesting_check_catches_straddling_span() {
        let outer = [Span::new(0, 3), Span::new(3, 6)];
        assert!(check_nesting(&[Span::new(2, 4)], &outer).is_err());
        assert!(check_partition(&[Span::new(0, 2), Span::new(3, 4)], 4).is_err());
    }

    proptest! {
        #[test]
        fn views_partition_and_nest(
            text in "([a-z]{1,8}|[0-9]{1,4}|[.!?]|\\n\\n|1\\. | ){0,60}",
            theta in 0.05f64..0.95,
        ) {
            let table = TransitionTable::new(TransitionTable::default().scores().to_owned(), theta).unwrap();
            let d = decompose(&text, &table, None).unwrap();
            let n = d.len();
            for level in Granularity::ALL {
                prop_assert!(check_partition(&d.view(level).spans, n).is_ok());
            }
            prop_assert!(check_nesting(&d.phrases.spans, &d.sentences.spans).is_ok());
            prop_assert!(check_nesting(&d.sentences.spans, &d.paragraphs.spans).is_ok());

            // Every multi-token phrase clears theta and is maximal inside its sentence.
            for p in &d.phrases.spans {
                let scores = table.pair_scores(&d.tokens[p.indices()]);
                let product: f64 = scores.iter().product();
                if p.len() >= 2 {
                    prop_assert!(product > theta);
                }
                let sentence = d.sentences.spans[d.sentences.unit_of(p.start).unwrap()];
                if p.end < sentence.end {
                    let next = table.score(d.tokens[p.end - 1].class(), d.tokens[p.end].class());
                    prop_assert!(product * next <= theta);
                }
            }
            prop_assert_eq!(&d, &decompose(&text, &table, None).unwrap());
        }
    }
}
