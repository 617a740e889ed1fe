//! Plain-text checkpoint.
//!
//! ```text
//! HGMNET1
//! @config
//! <TOML training config>
//! @vocab <name> <count>
//! <one entry per line>
//! @tensor <name> <rows> <cols>
//! <one row per line, 17 significant digits>
//! @end
//! ```
//!
//! Tags outside this set are rejected. Vocabularies come before tensors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkit::Matrix;
use crate::pipeline::model::CPC_LEVELS;
use crate::pipeline::{Model, TrainConfig};

pub const MAGIC: &str = "HGMNET1";

fn vocab_names() -> [String; 5] {
    let mut names = [String::from("words"), String::new(), String::new(), String::new(), String::new()];
    for (slot, level) in names[1..].iter_mut().zip(CPC_LEVELS) {
        *slot = format!("cpc.{level}");
    }
    names
}

pub fn save(model: &Model) -> String {
    let mut out = format!("{MAGIC}\n@config\n");
    out += &model.config.to_toml();
    if !out.ends_with('\n') {
        out.push('\n');
    }
    let vocabs = std::iter::once(model.words.vocab()).chain(model.cpc.tables.iter().map(|t| t.vocab()));
    for (name, vocab) in vocab_names().iter().zip(vocabs) {
        let _ = writeln!(out, "@vocab {name} {}", vocab.len());
        for v in vocab {
            out += v;
            out.push('\n');
        }
    }
    for (name, t) in model.tensors() {
        let _ = writeln!(out, "@tensor {name} {} {}", t.rows(), t.cols());
        for row in t.iter_rows() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            out += &cells.join(" ");
            out.push('\n');
        }
    }
    out += "@end\n";
    out
}

pub fn save_file(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, save(model)).map_err(|e| Error::io(path, e))
}

pub fn load_file(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load(&text)
}

fn at(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::invalid(format!("checkpoint line {}: {msg}", line + 1))
}

pub fn load(text: &str) -> Result<Model> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.first() != Some(&MAGIC) {
        return Err(Error::invalid(format!("not a checkpoint: first line must be {MAGIC}")));
    }
    let mut i = 1;
    let mut config_text = None;
    let mut vocabs: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut tensors: Vec<(usize, String, Matrix)> = Vec::new();
    let mut ended = false;

    let count = |line: usize, s: Option<&str>| -> Result<usize> {
        s.and_then(|s| s.parse().ok()).ok_or_else(|| at(line, "expected a count"))
    };
    while i < lines.len() {
        let line = lines[i];
        if ended {
            if !line.trim().is_empty() {
                return Err(at(i, "content after @end"));
            }
            i += 1;
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("@config") => {
                let start = i + 1;
                i = start;
                while i < lines.len() && !lines[i].starts_with('@') {
                    i += 1;
                }
                config_text = Some(lines[start..i].join("\n"));
                continue;
            }
            Some("@vocab") => {
                let name = parts.next().ok_or_else(|| at(i, "vocabulary needs a name"))?.to_string();
                let n = count(i, parts.next())?;
                if i + 1 + n > lines.len() {
                    return Err(at(i, format!("vocabulary {name} is truncated")));
                }
                let entries = lines[i + 1..i + 1 + n].iter().map(|s| s.to_string()).collect();
                if vocabs.insert(name.clone(), entries).is_some() {
                    return Err(at(i, format!("duplicate vocabulary {name}")));
                }
                i += 1 + n;
            }
            Some("@tensor") => {
                let name = parts.next().ok_or_else(|| at(i, "tensor needs a name"))?.to_string();
                let rows = count(i, parts.next())?;
                let cols = count(i, parts.next())?;
                if i + 1 + rows > lines.len() {
                    return Err(at(i, format!("tensor {name} is truncated")));
                }
                let mut data = Vec::with_capacity(rows * cols);
                for (r, row) in lines[i + 1..i + 1 + rows].iter().enumerate() {
                    let before = data.len();
                    for cell in row.split_whitespace() {
                        data.push(cell.parse::<f64>().map_err(|_| at(i + 1 + r, format!("bad number {cell:?}")))?);
                    }
                    if data.len() - before != cols {
                        return Err(at(i + 1 + r, format!("expected {cols} values")));
                    }
                }
                tensors.push((i, name, Matrix::from_vec(rows, cols, data)?));
                i += 1 + rows;
            }
            Some("@end") => {
                ended = true;
                i += 1;
            }
            Some(tag) if tag.starts_with('@') => return Err(at(i, format!("unknown tag {tag}"))),
            _ => return Err(at(i, "expected a tag")),
        }
    }
    if !ended {
        return Err(Error::invalid("checkpoint is missing @end"));
    }

    let config = TrainConfig::from_toml(&config_text.ok_or_else(|| Error::invalid("checkpoint has no @config block"))?)
        .map_err(|e| Error::invalid(format!("checkpoint config: {e}")))?;
    let names = vocab_names();
    let mut take = |name: &str| {
        vocabs
            .remove(name)
            .ok_or_else(|| Error::invalid(format!("checkpoint has no vocabulary {name}")))
    };
    let words = take(&names[0])?;
    let cpc = [take(&names[1])?, take(&names[2])?, take(&names[3])?, take(&names[4])?];
    if let Some(extra) = vocabs.keys().next() {
        return Err(Error::invalid(format!("unknown vocabulary {extra}")));
    }

    let mut model = Model::skeleton(&config, words, cpc)?;
    let mut filled = BTreeMap::new();
    {
        let mut slots: BTreeMap<String, &mut Matrix> =
            model.tensors_mut().into_iter().map(|(n, t, _)| (n, t)).collect();
        let mut lambda = None;
        for (line, name, value) in tensors {
            if filled.insert(name.clone(), ()).is_some() {
                return Err(at(line, format!("duplicate tensor {name}")));
            }
            if name == "msa.lambda" && config.msa {
                value.ensure_shape("msa.lambda", 1, 1).map_err(|e| at(line, e))?;
                lambda = Some(value.item());
                continue;
            }
            let slot = slots
                .get_mut(&name)
                .ok_or_else(|| at(line, format!("tensor {name} does not belong to this config")))?;
            if slot.shape() != value.shape() {
                return Err(at(
                    line,
                    format!("tensor {name} is {:?} but the config implies {:?}", value.shape(), slot.shape()),
                ));
            }
            **slot = value;
        }
        let missing: Vec<&String> = slots.keys().filter(|n| !filled.contains_key(*n)).collect();
        if !missing.is_empty() {
            return Err(Error::invalid(format!("checkpoint is missing tensors {missing:?}")));
        }
        drop(slots);
        if let Some(m) = &mut model.msa {
            m.lambda = lambda.ok_or_else(|| Error::invalid("checkpoint is missing tensor msa.lambda"))?;
        }
    }
    model.validate()?;
    Ok(model)
}
