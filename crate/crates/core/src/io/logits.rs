//! Per-cell log-probability files exchanged with external encoders.
//!
//! Tab separated, mandatory header:
//! `process_id step entity lp_create lp_move lp_destroy lp_none from to`,
//! with `?` for an absent location.

use std::collections::HashMap;
use std::path::Path;

use super::{parse_err, read_text, IoError};
use crate::mention::normalize;
use crate::model::ChangeKind;

pub const HEADER: [&str; 9] = [
    "process_id",
    "step",
    "entity",
    "lp_create",
    "lp_move",
    "lp_destroy",
    "lp_none",
    "from",
    "to",
];

const NORM_TOL: f64 = 1e-6;

/// Log-probabilities for one `(process, step, entity)` cell, ordered
/// `Create, Move, Destroy, None`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitsRecord {
    pub process_id: String,
    pub step: usize,
    pub entity: String,
    pub logp: [f64; 4],
    pub from_loc: Option<String>,
    pub to_loc: Option<String>,
}

impl LogitsRecord {
    /// Builds a record from (not necessarily normalized) probabilities.
    pub fn from_probs(
        process_id: impl Into<String>,
        step: usize,
        entity: impl Into<String>,
        probs: [f64; 4],
    ) -> Self {
        let total: f64 = probs.iter().sum();
        LogitsRecord {
            process_id: process_id.into(),
            step,
            entity: entity.into(),
            logp: probs.map(|p| (p / total).ln()),
            from_loc: None,
            to_loc: None,
        }
    }

    pub fn with_locations(mut self, from_loc: Option<String>, to_loc: Option<String>) -> Self {
        self.from_loc = from_loc;
        self.to_loc = to_loc;
        self
    }

    pub fn logp(&self, kind: ChangeKind) -> f64 {
        self.logp[kind.index()]
    }

    pub fn prob_sum(&self) -> f64 {
        self.logp.iter().map(|l| l.exp()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.logp.iter().all(|l| l.is_finite() && *l <= 1e-12)
            && (self.prob_sum() - 1.0).abs() <= NORM_TOL
    }

    /// Highest-probability kind; ties go to the lower kind index.
    pub fn argmax(&self) -> ChangeKind {
        let mut best = 0;
        for k in 1..4 {
            if self.logp[k] > self.logp[best] {
                best = k;
            }
        }
        ChangeKind::from_index(best).expect("index < 4")
    }
}

/// Keyed lookup over a logits file, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogitsTable {
    records: Vec<LogitsRecord>,
    index: HashMap<(String, usize, String), usize>,
}

impl LogitsTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces an existing record with the same key.
    pub fn insert(&mut self, record: LogitsRecord) {
        let key = (
            record.process_id.clone(),
            record.step,
            normalize(&record.entity),
        );
        match self.index.get(&key) {
            Some(&i) => self.records[i] = record,
            None => {
                self.index.insert(key, self.records.len());
                self.records.push(record);
            }
        }
    }

    pub fn get(&self, process_id: &str, step: usize, entity: &str) -> Option<&LogitsRecord> {
        self.index
            .get(&(process_id.to_string(), step, normalize(entity)))
            .map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[LogitsRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl FromIterator<LogitsRecord> for LogitsTable {
    fn from_iter<I: IntoIterator<Item = LogitsRecord>>(iter: I) -> Self {
        let mut t = LogitsTable::new();
        for r in iter {
            t.insert(r);
        }
        t
    }
}

pub fn load_logits(path: &Path) -> Result<LogitsTable, IoError> {
    parse_logits(&read_text(path)?)
}

fn loc(field: &str) -> Option<String> {
    let f = field.trim();
    (!f.is_empty() && f != "?").then(|| f.to_string())
}

pub fn parse_logits(text: &str) -> Result<LogitsTable, IoError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing header row"))?;
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    if cols != HEADER {
        return Err(parse_err(hl + 1, format!("expected header `{}`", HEADER.join("\t"))));
    }
    let mut table = LogitsTable::new();
    for (i, line) in lines {
        let ln = i + 1;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 9 {
            return Err(parse_err(ln, format!("expected 9 fields, found {}", f.len())));
        }
        let step: usize = f[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(ln, format!("bad step `{}`", f[1])))?;
        if step == 0 {
            return Err(parse_err(ln, "steps are 1-based"));
        }
        let mut logp = [0.0; 4];
        for k in 0..4 {
            let v: f64 = f[3 + k]
                .trim()
                .parse()
                .map_err(|_| parse_err(ln, format!("bad log-probability `{}`", f[3 + k])))?;
            if !v.is_finite() || v > 1e-12 {
                return Err(parse_err(ln, format!("log-probability {v} must be finite and <= 0")));
            }
            logp[k] = v;
        }
        let record = LogitsRecord {
            process_id: f[0].trim().to_string(),
            step,
            entity: f[2].trim().to_string(),
            logp,
            from_loc: loc(f[7]),
            to_loc: loc(f[8]),
        };
        let sum = record.prob_sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(IoError::Normalization { line: ln, sum });
        }
        table.insert(record);
    }
    Ok(table)
}

pub fn write_logits<'a, I: IntoIterator<Item = &'a LogitsRecord>>(records: I) -> String {
    let mut out = HEADER.join("\t");
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.process_id,
            r.step,
            r.entity,
            r.logp[0],
            r.logp[1],
            r.logp[2],
            r.logp[3],
            r.from_loc.as_deref().unwrap_or("?"),
            r.to_loc.as_deref().unwrap_or("?"),
        ));
    }
    out
}
