use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::CpcCode;

pub const REQUIRED_COLUMNS: [&str; 5] = ["id", "anchor", "target", "context", "score"];

/// One labelled anchor/target phrase pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PhrasePairRecord {
    pub id: String,
    pub anchor: String,
    pub target: String,
    pub context: CpcCode,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRow {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub records: Vec<PhrasePairRecord>,
    pub skipped: Vec<SkippedRow>,
}

impl IngestReport {
    pub fn summary(&self) -> String {
        format!("{} records, {} rows skipped", self.records.len(), self.skipped.len())
    }
}

pub fn ingest(path: &Path) -> Result<IngestReport> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn ingest_reader(input: impl Read) -> Result<IngestReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::Headers)
        .from_reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut cols = [0usize; 5];
    for (slot, name) in cols.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Config(format!("missing required column {name:?}")))?;
    }

    let mut report = IngestReport { records: Vec::new(), skipped: Vec::new() };
    let mut seen = HashSet::new();
    let mut row = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {
                let line = row.position().map_or(0, |p| p.line());
                match parse_row(&row, &cols, &seen) {
                    Ok(rec) => {
                        seen.insert(rec.id.clone());
                        report.records.push(rec);
                    }
                    Err(reason) => report.skipped.push(SkippedRow { line, reason }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(csv_error(e));
                }
                report.skipped.push(SkippedRow { line, reason: e.to_string() });
            }
        }
    }
    Ok(report)
}

fn parse_row(row: &csv::StringRecord, cols: &[usize; 5], seen: &HashSet<String>) -> Result<PhrasePairRecord, String> {
    let field = |k: usize| {
        row.get(cols[k])
            .map(str::trim)
            .ok_or_else(|| format!("missing field {:?}", REQUIRED_COLUMNS[k]))
    };
    let id = field(0)?;
    if id.is_empty() {
        return Err("empty id".into());
    }
    if seen.contains(id) {
        return Err(format!("duplicate id {id:?}"));
    }
    let anchor = field(1)?;
    let target = field(2)?;
    if anchor.is_empty() || target.is_empty() {
        return Err("empty anchor or target".into());
    }
    let context = CpcCode::parse(field(3)?).map_err(|e| e.to_string())?;
    let raw = field(4)?;
    let score: f64 = raw.parse().map_err(|_| format!("score {raw:?} is not a number"))?;
    if !(0.0..=1.0).contains(&score) {
        return Err(format!("score {score} outside [0, 1]"));
    }
    Ok(PhrasePairRecord {
        id: id.to_string(),
        anchor: anchor.to_string(),
        target: target.to_string(),
        context,
        score,
    })
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv input>", io),
        other => Error::Config(format!("{other:?}")),
    }
}

/// Writes records back out with the required header.
pub fn write_records(records: &[PhrasePairRecord], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(REQUIRED_COLUMNS).map_err(io)?;
    for r in records {
        w.write_record([
            r.id.as_str(),
            &r.anchor,
            &r.target,
            &r.context.render(),
            &r.score.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}
