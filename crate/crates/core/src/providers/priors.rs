//! Topic-conditioned priors over change kinds.
//!
//! File format: tab-separated `topic entity change probability`, `*` as a
//! wildcard in the topic or entity column, optional header row, `#` comments.
//! Lookups back off `(topic, entity) -> (*, entity) -> (topic, *)` and finally
//! to the uniform `1/4`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::io::{parse_err, read_text, IoError};
use crate::mention::{normalize, tokenize};
use crate::model::{ChangeKind, Entity};

pub const PRIOR_EPSILON: f64 = 1e-6;
const WILDCARD: &str = "*";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopicPriorTable {
    // topic pattern -> (entity, kind) -> probability
    rows: BTreeMap<String, BTreeMap<(String, ChangeKind), f64>>,
}

impl TopicPriorTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// `p` must lie in `(0, 1]`.
    pub fn insert(&mut self, topic: &str, entity: &str, kind: ChangeKind, p: f64) -> Result<(), String> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(format!("probability {p} outside (0, 1]"));
        }
        let topic = normalize(topic);
        let entity = normalize(entity);
        if topic == WILDCARD && entity == WILDCARD {
            return Err("topic and entity cannot both be wildcards".into());
        }
        self.rows.entry(topic).or_default().insert((entity, kind), p);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Topic patterns that apply to `topic`, most specific first: an exact
    /// match, then patterns whose tokens occur contiguously in the topic
    /// (longest first).
    fn matching_topics(&self, topic: &str) -> Vec<&str> {
        let key = normalize(topic);
        let words = tokenize(topic);
        let mut out: Vec<&str> = Vec::new();
        if self.rows.contains_key(&key) && key != WILDCARD {
            out.push(self.rows.get_key_value(&key).unwrap().0);
        }
        let mut partial: Vec<(usize, &str)> = self
            .rows
            .keys()
            .filter(|p| p.as_str() != WILDCARD && **p != key)
            .filter_map(|p| {
                let needle = tokenize(p);
                let hit = !needle.is_empty()
                    && words.len() >= needle.len()
                    && words.windows(needle.len()).any(|w| w == needle.as_slice());
                hit.then_some((needle.len(), p.as_str()))
            })
            .collect();
        partial.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
        out.extend(partial.into_iter().map(|(_, p)| p));
        out
    }

    fn lookup(&self, topic: &str, entity_keys: &[String], kind: ChangeKind) -> Option<f64> {
        let find = |t: &str, e: &str| self.rows.get(t)?.get(&(e.to_string(), kind)).copied();
        let topics = self.matching_topics(topic);
        for t in &topics {
            for e in entity_keys {
                if let Some(p) = find(t, e) {
                    return Some(p);
                }
            }
        }
        for e in entity_keys {
            if let Some(p) = find(WILDCARD, e) {
                return Some(p);
            }
        }
        topics.iter().find_map(|t| find(t, WILDCARD))
    }

    /// Probability before smoothing, after backoff.
    pub fn probability(&self, topic: &str, entity: &Entity, kind: ChangeKind) -> f64 {
        let keys: Vec<String> = entity.aliases().iter().map(|a| normalize(a)).collect();
        self.lookup(topic, &keys, kind).unwrap_or(0.25)
    }

    /// `ln P_ext(kind | entity, topic)`, floored at `ln ε`.
    pub fn prior_logprob(&self, topic: &str, entity: &Entity, kind: ChangeKind) -> f64 {
        self.probability(topic, entity, kind)
            .clamp(PRIOR_EPSILON, 1.0)
            .ln()
    }
}

pub fn load_priors(path: &Path) -> Result<TopicPriorTable, IoError> {
    parse_priors(&read_text(path)?)
}

pub fn parse_priors(text: &str) -> Result<TopicPriorTable, IoError> {
    let mut table = TopicPriorTable::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != 4 {
            return Err(parse_err(ln, format!("expected 4 fields, found {}", f.len())));
        }
        if f[0] == "topic" && f[3] == "probability" {
            continue;
        }
        let kind = ChangeKind::parse(f[2])
            .ok_or_else(|| parse_err(ln, format!("unknown change `{}`", f[2])))?;
        let p: f64 = f[3]
            .parse()
            .map_err(|_| parse_err(ln, format!("bad probability `{}`", f[3])))?;
        table.insert(f[0], f[1], kind, p).map_err(|m| parse_err(ln, m))?;
    }
    Ok(table)
}
