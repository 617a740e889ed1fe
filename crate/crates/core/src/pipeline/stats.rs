use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::features::document_terms;
use crate::pipeline::PhrasePairRecord;

pub const DEFAULT_BUCKET_WIDTH: f64 = 0.05;
pub const DEFAULT_TOP_TERMS: usize = 20;

/// Score histogram over `[0, 1]` with the exact-zero mass counted separately.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogram {
    pub width: f64,
    pub counts: Vec<usize>,
    pub exact_zero: usize,
    pub total: usize,
}

impl ScoreHistogram {
    pub fn new(scores: impl IntoIterator<Item = f64>, width: f64) -> Self {
        let buckets = (1.0 / width).round().max(1.0) as usize;
        let mut counts = vec![0; buckets];
        let mut exact_zero = 0;
        let mut total = 0;
        for s in scores {
            total += 1;
            if s == 0.0 {
                exact_zero += 1;
            }
            // the small nudge keeps 0.25 / 0.05 = 4.999… in bucket 5
            let b = ((s / width) + 1e-9).floor().max(0.0) as usize;
            counts[b.min(buckets - 1)] += 1;
        }
        Self { width, counts, exact_zero, total }
    }

    pub fn edges(&self, bucket: usize) -> (f64, f64) {
        let lo = bucket as f64 * self.width;
        (lo, (lo + self.width).min(1.0))
    }

    fn pct(&self, count: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * count as f64 / self.total as f64
        }
    }

    pub fn percentages(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| self.pct(c)).collect()
    }

    pub fn zero_share(&self) -> f64 {
        self.pct(self.exact_zero)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lo,hi,count,percent\n");
        for (b, (&c, p)) in self.counts.iter().zip(self.percentages()).enumerate() {
            let (lo, hi) = self.edges(b);
            let _ = writeln!(out, "{lo:.2},{hi:.2},{c},{p:.4}");
        }
        let _ = writeln!(out, "exact_zero,exact_zero,{},{:.4}", self.exact_zero, self.zero_share());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermCount {
    pub term: String,
    pub anchor: usize,
    pub target: usize,
}

impl TermCount {
    pub fn total(&self) -> usize {
        self.anchor + self.target
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub histogram: ScoreHistogram,
    /// Most frequent terms, by total count then alphabetically.
    pub terms: Vec<TermCount>,
    /// Records per CPC section.
    pub sections: BTreeMap<char, usize>,
}

pub fn stats(records: &[PhrasePairRecord], top_n: usize) -> CorpusStats {
    let histogram = ScoreHistogram::new(records.iter().map(|r| r.score), DEFAULT_BUCKET_WIDTH);

    let mut counts: BTreeMap<String, TermCount> = BTreeMap::new();
    for r in records {
        for (text, is_anchor) in [(&r.anchor, true), (&r.target, false)] {
            for term in document_terms(text) {
                let e = counts.entry(term.clone()).or_insert(TermCount { term, anchor: 0, target: 0 });
                if is_anchor {
                    e.anchor += 1;
                } else {
                    e.target += 1;
                }
            }
        }
    }
    let mut terms: Vec<TermCount> = counts.into_values().collect();
    terms.sort_by(|a, b| b.total().cmp(&a.total()).then_with(|| a.term.cmp(&b.term)));
    terms.truncate(top_n);

    let mut sections = BTreeMap::new();
    for r in records {
        *sections.entry(r.context.section).or_insert(0) += 1;
    }
    CorpusStats { histogram, terms, sections }
}

impl CorpusStats {
    pub fn terms_csv(&self) -> String {
        let mut out = String::from("term,anchor,target,total\n");
        for t in &self.terms {
            let _ = writeln!(out, "{},{},{},{}", t.term, t.anchor, t.target, t.total());
        }
        out
    }

    pub fn sections_csv(&self) -> String {
        let total: usize = self.sections.values().sum();
        let mut out = String::from("section,count,percent\n");
        for (s, &c) in &self.sections {
            let _ = writeln!(out, "{s},{c},{:.4}", 100.0 * c as f64 / total.max(1) as f64);
        }
        out
    }

    /// Human-readable report: histogram, sections and terms as aligned tables.
    pub fn table(&self) -> String {
        let h = &self.histogram;
        let mut rows = vec![vec!["bucket".to_string(), "count".into(), "percent".into()]];
        for (b, (&c, p)) in h.counts.iter().zip(h.percentages()).enumerate() {
            let (lo, hi) = h.edges(b);
            rows.push(vec![format!("[{lo:.2}, {hi:.2})"), c.to_string(), format!("{p:.2}%")]);
        }
        rows.push(vec!["exactly 0".into(), h.exact_zero.to_string(), format!("{:.2}%", h.zero_share())]);
        let mut out = format!("{} records\n\n", h.total);
        out += &aligned(&rows);

        let total: usize = self.sections.values().sum();
        let mut rows = vec![vec!["section".to_string(), "count".into(), "percent".into()]];
        for (s, &c) in &self.sections {
            rows.push(vec![s.to_string(), c.to_string(), format!("{:.2}%", 100.0 * c as f64 / total.max(1) as f64)]);
        }
        out += "\n";
        out += &aligned(&rows);

        let mut rows = vec![vec!["term".to_string(), "anchor".into(), "target".into(), "total".into()]];
        for t in &self.terms {
            rows.push(vec![t.term.clone(), t.anchor.to_string(), t.target.to_string(), t.total().to_string()]);
        }
        out += "\n";
        out += &aligned(&rows);
        out
    }
}

/// Left-aligns the first column and right-aligns the rest.
pub fn aligned(rows: &[Vec<String>]) -> String {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out += cells.join("  ").trim_end();
        out.push('\n');
    }
    out
}
