//! JSON and JSON Lines files. The path `-` means standard output.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use reviewlens_core::model::{validate_taxonomy, Taxonomy};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingRow {
    pub text: String,
    pub vec: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconRow {
    pub token: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRow {
    pub text: String,
    pub p: f64,
    pub n: f64,
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::data_at(path, e))
}

/// Blank lines are skipped; errors carry the 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    parse_jsonl(open(path)?, path)
}

pub fn parse_jsonl<T: DeserializeOwned>(reader: impl BufRead, path: &Path) -> CliResult<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::data_at(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| CliError::data_at(path, format!("line {}: {e}", i + 1)))?;
        out.push(row);
    }
    Ok(out)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::data_at(path, e))
}

fn writer(path: &Path) -> CliResult<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let f = File::create(path).map_err(|e| CliError::data_at(path, e))?;
    Ok(Box::new(BufWriter::new(f)))
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, rows: impl IntoIterator<Item = &'a T>) -> CliResult<()> {
    let mut w = writer(path)?;
    let fail = |e: &dyn std::fmt::Display| CliError::data_at(path, e);
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(|e| fail(&e))?;
        w.write_all(b"\n").map_err(|e| fail(&e))?;
    }
    w.flush().map_err(|e| fail(&e))
}

/// Pretty-printed with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = writer(path)?;
    let fail = |e: &dyn std::fmt::Display| CliError::data_at(path, e);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| fail(&e))?;
    w.write_all(b"\n").map_err(|e| fail(&e))?;
    w.flush().map_err(|e| fail(&e))
}

/// Reads a taxonomy and rejects it when any invariant is violated.
pub fn load_taxonomy(path: &Path) -> CliResult<Taxonomy> {
    let t: Taxonomy = read_json(path)?;
    let violations = validate_taxonomy(&t);
    if let Some(first) = violations.first() {
        return Err(CliError::data_at(
            path,
            format!(
                "{} taxonomy violation(s); first: topic `{}`: {:?}: {}",
                violations.len(),
                first.topic_id,
                first.rule,
                first.detail
            ),
        ));
    }
    Ok(t)
}
