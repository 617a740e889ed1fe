use std::fmt;

use crate::error::{Error, Result};
use crate::textseg::token::{Token, TokenClass, TokenKind};

/// Half-open interval of token indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}:{}]", self.start, self.end)
    }
}

/// Learned compatibility of adjacent token classes plus the phrase threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    scores: [[f64; TokenClass::COUNT]; TokenClass::COUNT],
    theta: f64,
}

pub const DEFAULT_THETA: f64 = 0.5;

impl TransitionTable {
    pub fn new(scores: [[f64; TokenClass::COUNT]; TokenClass::COUNT], theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid(format!("theta_phrase must lie in (0,1), got {theta}")));
        }
        if let Some(v) = scores.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("transition score {v} outside [0,1]")));
        }
        Ok(Self { scores, theta })
    }

    /// Every pair scored `score`.
    pub fn uniform(score: f64, theta: f64) -> Result<Self> {
        Self::new([[score; TokenClass::COUNT]; TokenClass::COUNT], theta)
    }

    pub fn score(&self, left: TokenClass, right: TokenClass) -> f64 {
        self.scores[left.index()][right.index()]
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn scores(&self) -> &[[f64; TokenClass::COUNT]; TokenClass::COUNT] {
        &self.scores
    }

    /// Row-major flattening of the score grid.
    pub fn flat_scores(&self) -> Vec<f64> {
        self.scores.iter().flatten().copied().collect()
    }

    pub fn from_flat(flat: &[f64], theta: f64) -> Result<Self> {
        if flat.len() != TokenClass::COUNT * TokenClass::COUNT {
            return Err(Error::dim("TransitionTable::from_flat", 25, flat.len()));
        }
        let mut scores = [[0.0; TokenClass::COUNT]; TokenClass::COUNT];
        for (i, v) in flat.iter().enumerate() {
            scores[i / TokenClass::COUNT][i % TokenClass::COUNT] = *v;
        }
        Self::new(scores, theta)
    }

    /// Scores of each adjacent pair in `tokens`.
    pub fn pair_scores(&self, tokens: &[Token]) -> Vec<f64> {
        tokens
            .windows(2)
            .map(|w| self.score(w[0].class(), w[1].class()))
            .collect()
    }
}

impl Default for TransitionTable {
    /// Content words chain into phrases; stopwords weakly; markers and
    /// punctuation never join.
    fn default() -> Self {
        //            word  stop  num   mark  punct
        let scores = [
            [0.90, 0.30, 0.70, 0.00, 0.00], // word
            [0.80, 0.30, 0.60, 0.00, 0.00], // stopword
            [0.70, 0.30, 0.80, 0.00, 0.00], // number
            [0.00, 0.00, 0.00, 0.00, 0.00], // marker
            [0.00, 0.00, 0.00, 0.00, 0.00], // punct
        ];
        Self::new(scores, DEFAULT_THETA).expect("default table is valid")
    }
}

/// Greedy left-to-right phrase spans over `pair_scores.len() + 1` tokens.
///
/// A span extends to the next token while the running product of the pair
/// scores inside it stays strictly above `theta`.
pub fn segment_by_scores(pair_scores: &[f64], theta: f64) -> Vec<Span> {
    segment_by_scores_len(pair_scores, theta, pair_scores.len() + 1)
}

fn segment_by_scores_len(pair_scores: &[f64], theta: f64, n: usize) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        let mut product = 1.0;
        while end < n {
            let next = product * pair_scores[end - 1];
            if next > theta {
                product = next;
                end += 1;
            } else {
                break;
            }
        }
        spans.push(Span::new(start, end));
        start = end;
    }
    spans
}

/// Phrase spans of `tokens`, with indices relative to the slice.
pub fn segment_phrases(tokens: &[Token], table: &TransitionTable) -> Vec<Span> {
    segment_by_scores_len(&table.pair_scores(tokens), table.theta(), tokens.len())
}

/// Sentence spans: a boundary follows every `.`/`!`/`?` and precedes every
/// claim marker.
pub fn segment_sentences(tokens: &[Token]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if t.kind == TokenKind::Marker && i > start {
            spans.push(Span::new(start, i));
            start = i;
        }
        if t.is_sentence_end() {
            spans.push(Span::new(start, i + 1));
            start = i + 1;
        }
    }
    if start < tokens.len() {
        spans.push(Span::new(start, tokens.len()));
    }
    spans
}

/// Externally supplied section range, e.g. `claims` over tokens `[10, 30)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionLabel {
    pub label: String,
    pub span: Span,
}

/// Parses `label<TAB>start_token<TAB>end_token` lines. Blank lines and `#`
/// comments are ignored.
pub fn parse_section_labels(text: &str) -> Result<Vec<SectionLabel>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::invalid(format!(
                "section labels line {}: expected 3 tab-separated fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let num = |s: &str| {
            s.trim().parse::<usize>().map_err(|e| {
                Error::invalid(format!("section labels line {}: {s:?}: {e}", lineno + 1))
            })
        };
        let (start, end) = (num(fields[1])?, num(fields[2])?);
        if start >= end {
            return Err(Error::invalid(format!(
                "section labels line {}: empty range {start}..{end}",
                lineno + 1
            )));
        }
        out.push(SectionLabel {
            label: fields[0].to_string(),
            span: Span::new(start, end),
        });
    }
    Ok(out)
}

/// A paragraph span with its section label, if one was supplied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paragraph {
    pub span: Span,
    pub label: Option<String>,
}

fn has_blank_line(gap: &str) -> bool {
    let mut newline_seen = false;
    for c in gap.chars() {
        if c == '\n' {
            if newline_seen {
                return true;
            }
            newline_seen = true;
        } else if !c.is_whitespace() {
            newline_seen = false;
        }
    }
    false
}

/// Paragraph spans from section labels when given, else from blank lines.
///
/// Tokens not covered by any label become unlabeled paragraphs.
pub fn segment_paragraphs(tokens: &[Token], labels: Option<&[SectionLabel]>) -> Result<Vec<Paragraph>> {
    let n = tokens.len();
    let Some(labels) = labels.filter(|l| !l.is_empty()) else {
        let mut spans = Vec::new();
        let mut start = 0;
        for (i, t) in tokens.iter().enumerate().skip(1) {
            if has_blank_line(&t.gap_before) {
                spans.push(Paragraph { span: Span::new(start, i), label: None });
                start = i;
            }
        }
        if start < n {
            spans.push(Paragraph { span: Span::new(start, n), label: None });
        }
        return Ok(spans);
    };

    let mut sorted: Vec<&SectionLabel> = labels.iter().collect();
    sorted.sort_by_key(|l| (l.span.start, l.span.end));
    for l in &sorted {
        if l.span.is_empty() || l.span.end > n {
            return Err(Error::invalid(format!(
                "section {:?} range {} outside the {n} tokens",
                l.label, l.span
            )));
        }
    }
    for w in sorted.windows(2) {
        if w[1].span.start < w[0].span.end {
            return Err(Error::invalid(format!(
                "sections {:?} {} and {:?} {} overlap",
                w[0].label, w[0].span, w[1].label, w[1].span
            )));
        }
    }

    let mut out = Vec::new();
    let mut cursor = 0;
    for l in sorted {
        if l.span.start > cursor {
            out.push(Paragraph { span: Span::new(cursor, l.span.start), label: None });
        }
        out.push(Paragraph { span: l.span, label: Some(l.label.clone()) });
        cursor = l.span.end;
    }
    if cursor < n {
        out.push(Paragraph { span: Span::new(cursor, n), label: None });
    }
    Ok(out)
}
