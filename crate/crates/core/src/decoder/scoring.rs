//! Per-step scoring terms.
//!
//! A step's assignment `π_t` is scored as
//! `λ·f + (1−λ)·(β·g_edge + (1−β)·g_kb)`, where `f` weighs encoder
//! log-probabilities against topic priors, `g_edge` rewards changes that give
//! their step a purpose (an outgoing dependency edge), and `g_kb` adds the
//! background plausibility of each new edge.

use crate::depgraph::NextMentionTable;
use crate::io::LogitsRecord;
use crate::model::{ChangeKind, Entity, ProcessRecord, StateChange};
use crate::providers::{EdgeCandidate, EdgeScorer, LogitProvider, TopicPriorTable};

use super::{Ablation, DecoderConfig};

/// One entity's contribution to `f`.
pub fn f_cell(logp: f64, prior_logp: f64, alpha: f64) -> f64 {
    alpha * logp + (1.0 - alpha) * prior_logp
}

/// State-change score of one step's assignment.
pub fn f_score(
    logits: &[LogitsRecord],
    priors: &TopicPriorTable,
    topic: &str,
    entities: &[Entity],
    assignment: &[ChangeKind],
    alpha: f64,
) -> f64 {
    let mut total = 0.0;
    for (j, &kind) in assignment.iter().enumerate() {
        total += f_cell(
            logits[j].logp(kind),
            priors.prior_logprob(topic, &entities[j], kind),
            alpha,
        );
    }
    total
}

/// `+c` when the change adds an edge, `0` when the entity is never mentioned
/// again, `−c` when a `None` leaves a later mention without a cause.
pub fn score_p(kind: ChangeKind, next_mention: Option<usize>, c: f64) -> f64 {
    match (next_mention, kind) {
        (None, _) => 0.0,
        (Some(_), ChangeKind::None) => -c,
        (Some(_), _) => c,
    }
}

/// `Σ_j ln(1 + score_p)`; `targets[j]` is entity `j`'s next mention.
pub fn g_edge(assignment: &[ChangeKind], targets: &[Option<usize>], c: f64) -> f64 {
    let mut total = 0.0;
    for (&kind, &next) in assignment.iter().zip(targets) {
        total += (1.0 + score_p(kind, next, c)).ln();
    }
    total
}

/// `Σ ln(1 + score_e)` over the edges added at this step.
pub fn g_kb(new_edges: &[EdgeCandidate<'_>], scorer: &dyn EdgeScorer) -> f64 {
    let mut total = 0.0;
    for e in new_edges {
        total += (1.0 + scorer.score(e).clamp(0.0, 1.0)).ln();
    }
    total
}

pub fn phi(f: f64, g_edge: f64, g_kb: f64, lambda: f64, beta: f64) -> f64 {
    lambda * f + (1.0 - lambda) * (beta * g_edge + (1.0 - beta) * g_kb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScore {
    pub f: f64,
    pub g_edge: f64,
    pub g_kb: f64,
    pub phi: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct CellTable {
    pub record: LogitsRecord,
    pub f: [f64; 4],
    pub edge: [f64; 4],
    pub kb: [f64; 4],
}

impl CellTable {
    pub fn change(&self, kind: ChangeKind) -> StateChange {
        StateChange::with_kind_from_locations(
            kind,
            self.record.from_loc.as_deref(),
            self.record.to_loc.as_deref(),
        )
    }
}

/// Every per-cell term of one step, precomputed for all four kinds so that a
/// row's score is a sum of lookups.
#[derive(Debug, Clone)]
pub(crate) struct StepTable {
    pub cells: Vec<CellTable>,
}

impl StepTable {
    pub fn build(
        process: &ProcessRecord,
        step: usize,
        targets: &NextMentionTable,
        provider: &dyn LogitProvider,
        priors: &TopicPriorTable,
        scorer: &dyn EdgeScorer,
        config: &DecoderConfig,
    ) -> StepTable {
        let cells = process
            .entities()
            .iter()
            .enumerate()
            .map(|(j, entity)| {
                let record = provider.logits(process, step, j);
                debug_assert!(record.is_normalized(), "provider returned unnormalized logits");
                let target = targets.get(step, j);
                let mut cell = CellTable {
                    record,
                    f: [0.0; 4],
                    edge: [0.0; 4],
                    kb: [0.0; 4],
                };
                for kind in ChangeKind::ALL {
                    let k = kind.index();
                    cell.f[k] = f_cell(
                        cell.record.logp(kind),
                        priors.prior_logprob(process.topic(), entity, kind),
                        config.alpha,
                    );
                    cell.edge[k] = (1.0 + score_p(kind, target, config.c)).ln();
                    if let (Some(dst), false) = (target, kind == ChangeKind::None) {
                        let change = cell.change(kind);
                        let candidate = EdgeCandidate {
                            process_id: process.id(),
                            src_step: step,
                            dst_step: dst,
                            entity,
                            change: &change,
                            source_sentence: process.step(step),
                            target_sentence: process.step(dst),
                        };
                        cell.kb[k] = g_kb(&[candidate], scorer);
                    }
                }
                cell
            })
            .collect();
        StepTable { cells }
    }

    pub fn f_of(&self, row: &[ChangeKind]) -> f64 {
        let mut f = 0.0;
        for (cell, &kind) in self.cells.iter().zip(row) {
            f += cell.f[kind.index()];
        }
        f
    }

    pub fn score_row(
        &self,
        row: &[ChangeKind],
        config: &DecoderConfig,
        ablation: Ablation,
    ) -> StepScore {
        let f = self.f_of(row);
        let mut ge = 0.0;
        let mut gk = 0.0;
        for (cell, &kind) in self.cells.iter().zip(row) {
            ge += cell.edge[kind.index()];
            gk += cell.kb[kind.index()];
        }
        let ge = if ablation.use_g_edge { ge } else { 0.0 };
        let gk = if ablation.use_g_kb { gk } else { 0.0 };
        StepScore {
            f,
            g_edge: ge,
            g_kb: gk,
            phi: phi(f, ge, gk, config.lambda, config.beta),
        }
    }
}
