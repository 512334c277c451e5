//! Table-backed edge plausibility.
//!
//! The file has two sections, each introduced by a `[exact]` or `[generic]`
//! line:
//!
//! ```text
//! [exact]
//! process_id  src_step  entity  change  score
//! [generic]
//! entity  change  verb  score
//! ```
//!
//! Columns are tab-separated; header rows are optional and `#` starts a
//! comment line.

use std::collections::HashMap;
use std::path::Path;

use crate::io::{parse_err, read_text, IoError};
use crate::mention::normalize;
use crate::model::ChangeKind;

use super::lexical::{lemma, main_verb, LexicalConfig};
use super::{EdgeCandidate, EdgeScorer};

pub const DEFAULT_EDGE_SCORE: f64 = 0.5;

#[derive(Debug, Clone, Default)]
pub struct EdgeScoreTable {
    exact: HashMap<(String, usize, String, ChangeKind), f64>,
    generic: HashMap<(String, ChangeKind, String), f64>,
    lexicon: LexicalConfig,
}

fn check_score(s: f64) -> Result<f64, String> {
    if (0.0..=1.0).contains(&s) {
        Ok(s)
    } else {
        Err(format!("score {s} outside [0, 1]"))
    }
}

impl EdgeScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_lexicon(mut self, lexicon: LexicalConfig) -> Self {
        self.lexicon = lexicon;
        self
    }

    pub fn insert_exact(
        &mut self,
        process_id: &str,
        src_step: usize,
        entity: &str,
        change: ChangeKind,
        score: f64,
    ) -> Result<(), String> {
        let score = check_score(score)?;
        self.exact.insert(
            (process_id.trim().to_string(), src_step, normalize(entity), change),
            score,
        );
        Ok(())
    }

    pub fn insert_generic(
        &mut self,
        entity: &str,
        change: ChangeKind,
        verb: &str,
        score: f64,
    ) -> Result<(), String> {
        let score = check_score(score)?;
        let verb = lemma(verb.trim(), &self.lexicon);
        self.generic.insert((normalize(entity), change, verb), score);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.generic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact key, then generic key on the target sentence's main verb, then
    /// [`DEFAULT_EDGE_SCORE`].
    pub fn table_edge_score(&self, edge: &EdgeCandidate<'_>) -> f64 {
        let kind = edge.change.kind();
        let keys: Vec<String> = edge.entity.aliases().iter().map(|a| normalize(a)).collect();
        for k in &keys {
            let key = (edge.process_id.to_string(), edge.src_step, k.clone(), kind);
            if let Some(&s) = self.exact.get(&key) {
                return s;
            }
        }
        if !self.generic.is_empty() {
            if let Some(verb) = main_verb(edge.target_sentence, &self.lexicon) {
                for k in &keys {
                    if let Some(&s) = self.generic.get(&(k.clone(), kind, verb.clone())) {
                        return s;
                    }
                }
            }
        }
        DEFAULT_EDGE_SCORE
    }
}

impl EdgeScorer for EdgeScoreTable {
    fn score(&self, edge: &EdgeCandidate<'_>) -> f64 {
        self.table_edge_score(edge)
    }
}

pub fn load_edge_scores(path: &Path) -> Result<EdgeScoreTable, IoError> {
    parse_edge_scores(&read_text(path)?)
}

#[derive(Clone, Copy)]
enum Section {
    Exact,
    Generic,
}

pub fn parse_edge_scores(text: &str) -> Result<EdgeScoreTable, IoError> {
    let mut table = EdgeScoreTable::new();
    let mut section = None;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t.to_ascii_lowercase().as_str() {
            "[exact]" => {
                section = Some(Section::Exact);
                continue;
            }
            "[generic]" => {
                section = Some(Section::Generic);
                continue;
            }
            _ => {}
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        let kind = |s: &str| {
            ChangeKind::parse(s).ok_or_else(|| parse_err(ln, format!("unknown change `{s}`")))
        };
        let score = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(ln, format!("bad score `{s}`")))
        };
        match section {
            None => return Err(parse_err(ln, "row outside an `[exact]` or `[generic]` section")),
            Some(Section::Exact) => {
                if f.len() != 5 {
                    return Err(parse_err(ln, format!("exact rows need 5 fields, found {}", f.len())));
                }
                if f[0] == "process_id" {
                    continue;
                }
                let step: usize = f[1]
                    .parse()
                    .map_err(|_| parse_err(ln, format!("bad step `{}`", f[1])))?;
                table
                    .insert_exact(f[0], step, f[2], kind(f[3])?, score(f[4])?)
                    .map_err(|m| parse_err(ln, m))?;
            }
            Some(Section::Generic) => {
                if f.len() != 4 {
                    return Err(parse_err(ln, format!("generic rows need 4 fields, found {}", f.len())));
                }
                if f[0] == "entity" && f[2] == "verb" {
                    continue;
                }
                table
                    .insert_generic(f[0], kind(f[1])?, f[2], score(f[3])?)
                    .map_err(|m| parse_err(ln, m))?;
            }
        }
    }
    Ok(table)
}
