//! Tokenizer.
//!
//! Rules, applied left to right:
//!
//! | input                                   | token                     |
//! |-----------------------------------------|---------------------------|
//! | run of alphanumerics containing a letter| `word` (lowercased)       |
//! | run of digits, optionally `d.d` decimal | `number`                  |
//! | 1-3 digits + `.` + space/end, at start of text or after whitespace | `marker` (e.g. `1.`) |
//! | `.` `!` `?`                             | `punctuation`             |
//! | anything else                           | gap (not a token)         |
//!
//! So `"1. A device, comprising:"` yields `[1.] [a] [device] [comprising]`.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Word,
    Number,
    Punctuation,
    Marker,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased form used for lookups.
    pub surface: String,
    /// Exact source slice.
    pub raw: String,
    /// Source text between the previous token (or start) and this one.
    pub gap_before: String,
    /// Position in the token list.
    pub index: usize,
    /// Byte offset of `raw` in the source.
    pub offset: usize,
    pub kind: TokenKind,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

/// Coarse classes scored by the phrase transition table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenClass {
    Word = 0,
    Stopword = 1,
    Number = 2,
    Marker = 3,
    Punct = 4,
}

impl TokenClass {
    pub const COUNT: usize = 5;
    pub const ALL: [TokenClass; 5] = [
        TokenClass::Word,
        TokenClass::Stopword,
        TokenClass::Number,
        TokenClass::Marker,
        TokenClass::Punct,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

pub const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in", "is", "it", "its",
    "of", "on", "or", "said", "that", "the", "to", "wherein", "which", "with",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.binary_search(&word).is_ok()
}

impl Token {
    pub fn class(&self) -> TokenClass {
        match self.kind {
            TokenKind::Word if is_stopword(&self.surface) => TokenClass::Stopword,
            TokenKind::Word => TokenClass::Word,
            TokenKind::Number => TokenClass::Number,
            TokenKind::Marker => TokenClass::Marker,
            TokenKind::Punctuation => TokenClass::Punct,
        }
    }

    pub fn is_sentence_end(&self) -> bool {
        self.kind == TokenKind::Punctuation
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |c| c.0);
    let mut tokens = Vec::new();
    let mut gap_start = 0usize;
    let mut i = 0usize;

    while i < chars.len() {
        let (start, c) = chars[i];
        let (kind, end_idx) = if is_terminal(c) {
            (TokenKind::Punctuation, i + 1)
        } else if c.is_alphanumeric() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_alphanumeric() {
                j += 1;
            }
            let run = &chars[i..j];
            let all_digits = run.iter().all(|(_, ch)| ch.is_ascii_digit());
            let next = chars.get(j).map(|c| c.1);
            let after = chars.get(j + 1).map(|c| c.1);
            let at_line_start = i == 0 || chars[i - 1].1.is_whitespace();
            if all_digits
                && run.len() <= 3
                && next == Some('.')
                && after.is_none_or(char::is_whitespace)
                && at_line_start
            {
                (TokenKind::Marker, j + 1)
            } else if all_digits {
                // decimal continuation: digits '.' digits
                let mut end = j;
                if next == Some('.') && after.is_some_and(|c| c.is_ascii_digit()) {
                    end = j + 1;
                    while end < chars.len() && chars[end].1.is_ascii_digit() {
                        end += 1;
                    }
                }
                (TokenKind::Number, end)
            } else {
                (TokenKind::Word, j)
            }
        } else {
            i += 1;
            continue;
        };

        let end = byte_at(end_idx);
        let raw = &text[start..end];
        tokens.push(Token {
            surface: raw.to_lowercase(),
            raw: raw.to_string(),
            gap_before: text[gap_start..start].to_string(),
            index: tokens.len(),
            offset: start,
            kind,
        });
        gap_start = end;
        i = end_idx;
    }
    tokens
}

/// Source text up to the end of the last token, rebuilt from gaps and raw slices.
pub fn reconstruct(tokens: &[Token]) -> String {
    tokens
        .iter()
        .flat_map(|t| [t.gap_before.as_str(), t.raw.as_str()])
        .collect()
}
