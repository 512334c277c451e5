//! Pluggable score sources: per-cell change log-probabilities, topic priors
//! over change kinds, and plausibility scores for candidate dependency edges.

mod edges;
mod file;
mod lexical;
mod priors;

use std::fmt;

use crate::io::LogitsRecord;
use crate::model::{Entity, ProcessRecord, StateChange};

pub use edges::{load_edge_scores, parse_edge_scores, EdgeScoreTable, DEFAULT_EDGE_SCORE};
pub use file::{FileLogitProvider, MissingKey};
pub use lexical::{lemma, lexical_logits, main_verb, LexicalConfig, LexicalProvider};
pub use priors::{load_priors, parse_priors, TopicPriorTable, PRIOR_EPSILON};

/// Source of normalized log-probabilities over the four change kinds.
///
/// `step` is 1-based and `entity` is the 0-based column in `process`.
pub trait LogitProvider: Send + Sync {
    fn logits(&self, process: &ProcessRecord, step: usize, entity: usize) -> LogitsRecord;
}

/// A dependency edge the decoder is considering adding.
#[derive(Debug, Clone, Copy)]
pub struct EdgeCandidate<'a> {
    pub process_id: &'a str,
    pub src_step: usize,
    pub dst_step: usize,
    pub entity: &'a Entity,
    pub change: &'a StateChange,
    pub source_sentence: &'a str,
    pub target_sentence: &'a str,
}

impl fmt::Display for EdgeCandidate<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: s_{} -> s_{} {}({})",
            self.process_id,
            self.src_step,
            self.dst_step,
            self.change.kind().label(),
            self.entity.name()
        )
    }
}

/// Background plausibility of an edge, in `[0, 1]`.
pub trait EdgeScorer: Send + Sync {
    fn score(&self, edge: &EdgeCandidate<'_>) -> f64;
}

/// Scores every edge the same.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEdgeScorer(pub f64);

impl Default for ConstantEdgeScorer {
    fn default() -> Self {
        ConstantEdgeScorer(DEFAULT_EDGE_SCORE)
    }
}

impl EdgeScorer for ConstantEdgeScorer {
    fn score(&self, _edge: &EdgeCandidate<'_>) -> f64 {
        self.0.clamp(0.0, 1.0)
    }
}
