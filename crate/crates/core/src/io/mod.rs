//! Readers and writers for corpus, grid, logits and graph-export files.

mod cell;
mod corpus;
mod dot;
mod grid;
mod logits;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::Violation;

pub use cell::{format_cell, parse_cell};
pub use corpus::{
    graph_to_json, load_corpus, load_corpus_any, parse_corpus, parse_corpus_lenient, process_to_json,
    write_corpus, CorpusFile, CorpusRecordOut,
};
pub use dot::export_dot;
pub use grid::{load_grid_tsv, parse_grid_tsv, write_grid_tsv};
pub use logits::{load_logits, parse_logits, write_logits, LogitsRecord, LogitsTable};

/// Everything that went wrong with one process during validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessIssues {
    pub process: String,
    pub violations: Vec<Violation>,
    pub errors: Vec<String>,
}

impl fmt::Display for ProcessIssues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "process `{}`:", self.process)?;
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        for e in &self.errors {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}", format_issues(.0))]
    Validation(Vec<ProcessIssues>),
    #[error("line {line}: probabilities sum to {sum}, expected 1")]
    Normalization { line: usize, sum: f64 },
}

fn format_issues(issues: &[ProcessIssues]) -> String {
    let mut s = format!("validation failed for {} process(es)", issues.len());
    for i in issues {
        s.push('\n');
        s.push_str(&i.to_string());
    }
    s
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let wrap = |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(wrap)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(wrap)?;
    tmp.write_all(contents.as_bytes()).map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}
