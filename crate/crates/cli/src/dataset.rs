//! JSONL datasets: one `{"id", "lang", "code", "label", "io_pairs"?}`
//! object per line.

use gencode_core::ir::Program;
use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("duplicate id `{id}` on line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("labels are not dense 0..{classes}: missing {missing:?}")]
    SparseLabels { classes: usize, missing: Vec<usize> },
    #[error("dataset {0} is empty")]
    Empty(String),
}

pub fn parse_dataset(text: &str) -> Result<Vec<Program>, DatasetError> {
    let mut programs = Vec::new();
    let mut ids = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let p: Program = serde_json::from_str(raw)
            .map_err(|e| DatasetError::MalformedLine { line, message: e.to_string() })?;
        if !ids.insert(p.id.clone()) {
            return Err(DatasetError::DuplicateId { id: p.id, line });
        }
        programs.push(p);
    }
    let labels: BTreeSet<usize> = programs.iter().map(|p| p.label).collect();
    if let Some(&max) = labels.last() {
        let missing: Vec<usize> = (0..=max).filter(|l| !labels.contains(l)).collect();
        if !missing.is_empty() {
            return Err(DatasetError::SparseLabels { classes: max + 1, missing });
        }
    }
    Ok(programs)
}

pub fn ingest_dataset(path: &Path) -> Result<Vec<Program>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    let programs = parse_dataset(&text)?;
    if programs.is_empty() {
        return Err(DatasetError::Empty(path.display().to_string()));
    }
    Ok(programs)
}

pub fn write_dataset(mut out: impl Write, programs: &[Program]) -> io::Result<()> {
    for p in programs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
