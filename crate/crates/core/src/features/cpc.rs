use std::fmt;

use crate::error::{Error, Result};

/// A CPC classification code split into its four hierarchical levels.
///
/// `"A01B1/00"` is section `A`, class `01`, subclass `B`, main group `1`.
/// Bare contexts such as `"A47"` have no subclass and main group 0.
#[derive(Debug, Clone, Eq)]
pub struct CpcCode {
    pub section: char,
    pub class: u8,
    pub subclass: Option<char>,
    pub main_group: u32,
    /// The string this code was parsed from.
    pub raw: String,
}

/// Equality is on the four levels; `raw` only keeps the original text.
impl PartialEq for CpcCode {
    fn eq(&self, other: &Self) -> bool {
        self.levels() == other.levels()
    }
}

impl std::hash::Hash for CpcCode {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.levels().hash(state);
    }
}

/// Stand-in key for an absent subclass.
pub const NO_SUBCLASS: &str = "_";

const SECTIONS: &str = "ABCDEFGHY";

impl CpcCode {
    pub fn parse(code: &str) -> Result<Self> {
        let trimmed = code.trim();
        let lead = code.len() - code.trim_start().len();
        let chars: Vec<char> = trimmed.chars().collect();
        let fail = |pos: usize, reason: &str| Error::Parse {
            input: code.to_string(),
            position: lead + pos,
            reason: reason.to_string(),
        };

        let section = *chars.first().ok_or_else(|| fail(0, "empty code"))?;
        if !SECTIONS.contains(section) {
            return Err(fail(0, "section must be one of A-H or Y"));
        }
        let mut class = 0u8;
        for pos in 1..3 {
            let c = *chars.get(pos).ok_or_else(|| fail(pos, "class needs two digits"))?;
            let d = c.to_digit(10).ok_or_else(|| fail(pos, "class must be two digits"))?;
            class = class * 10 + d as u8;
        }
        let mut pos = 3;
        let subclass = match chars.get(pos) {
            None => None,
            Some(c) if c.is_ascii_uppercase() => {
                pos += 1;
                Some(*c)
            }
            Some(_) => return Err(fail(pos, "subclass must be an uppercase letter")),
        };

        let mut main_group = 0u32;
        if pos < chars.len() {
            let digits_start = pos;
            while pos < chars.len() && chars[pos].is_ascii_digit() {
                main_group = main_group
                    .checked_mul(10)
                    .and_then(|g| g.checked_add(chars[pos].to_digit(10).unwrap()))
                    .ok_or_else(|| fail(pos, "main group too large"))?;
                pos += 1;
            }
            if pos == digits_start {
                return Err(fail(pos, "main group must be digits"));
            }
            if pos < chars.len() {
                if chars[pos] != '/' {
                    return Err(fail(pos, "expected '/' before subgroup"));
                }
                pos += 1;
                let sub_start = pos;
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    pos += 1;
                }
                if pos == sub_start {
                    return Err(fail(pos, "subgroup must be digits"));
                }
                if pos < chars.len() {
                    return Err(fail(pos, "unexpected trailing character"));
                }
            }
        }

        Ok(Self {
            section,
            class,
            subclass,
            main_group,
            raw: code.to_string(),
        })
    }

    fn levels(&self) -> (char, u8, Option<char>, u32) {
        (self.section, self.class, self.subclass, self.main_group)
    }

    /// Canonical text form: `A47`, `A01B`, or `A01B1/00`.
    pub fn render(&self) -> String {
        let mut s = format!("{}{:02}", self.section, self.class);
        if let Some(sub) = self.subclass {
            s.push(sub);
            if self.main_group > 0 {
                s.push_str(&format!("{}/00", self.main_group));
            }
        }
        s
    }

    /// Embedding lookup keys for section, class, subclass, main group.
    pub fn level_keys(&self) -> [String; 4] {
        [
            self.section.to_string(),
            format!("{:02}", self.class),
            self.subclass
                .map_or_else(|| NO_SUBCLASS.to_string(), |c| c.to_string()),
            self.main_group.to_string(),
        ]
    }
}

impl fmt::Display for CpcCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl std::str::FromStr for CpcCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
