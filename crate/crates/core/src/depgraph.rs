//! Dependency-graph derivation from a state-change matrix.
//!
//! Every non-`None` change of entity `e` at step `i` is taken to exist for the
//! sake of the next step that needs `e`: an edge `s_i -> s_j` labelled with the
//! change is added for the first `j > i` that mentions `e` (or, in
//! [`DeriveMode::MentionOrChange`], changes `e` again).

use thiserror::Error;

use crate::mention::mentions;
use crate::model::{
    validate_matrix, DependencyEdge, DependencyGraph, ModelError, ProcessRecord,
    StateChangeMatrix, Violation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeriveMode {
    /// Targets come from the text alone; used while decoding, when later rows
    /// of the matrix are still undecided.
    MentionOnly,
    /// Targets are the next mention or the next change, whichever is first.
    MentionOrChange,
}

#[derive(Debug, Error)]
pub enum DeriveError {
    #[error("matrix violates existence constraints: {0:?}")]
    InvalidMatrix(Vec<Violation>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `next_mention` for every `(step, entity)` pair, precomputed so decode-time
/// scoring needs one lookup per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NextMentionTable {
    // targets[t-1][j]
    targets: Vec<Vec<Option<usize>>>,
}

impl NextMentionTable {
    pub fn get(&self, step: usize, entity: usize) -> Option<usize> {
        self.targets[step - 1][entity]
    }

    pub fn steps(&self) -> usize {
        self.targets.len()
    }
}

/// Builds the table with one backward sweep per entity.
pub fn incremental_targets(process: &ProcessRecord) -> NextMentionTable {
    let t_max = process.num_steps();
    let n = process.num_entities();
    let mut targets = vec![vec![None; n]; t_max];
    for (j, entity) in process.entities().iter().enumerate() {
        let mut next = None;
        for t in (1..=t_max).rev() {
            targets[t - 1][j] = next;
            if mentions(process.step(t), entity) {
                next = Some(t);
            }
        }
    }
    NextMentionTable { targets }
}

pub fn derive_graph(
    process: &ProcessRecord,
    matrix: &StateChangeMatrix,
    mode: DeriveMode,
) -> Result<DependencyGraph, DeriveError> {
    let violations = validate_matrix(process, matrix)?;
    if !violations.is_empty() {
        return Err(DeriveError::InvalidMatrix(violations));
    }
    let mentions = incremental_targets(process);
    Ok(derive_with_targets(process, matrix, mode, &mentions))
}

/// Same as [`derive_graph`] but trusts `matrix` and reuses a precomputed table.
pub(crate) fn derive_with_targets(
    process: &ProcessRecord,
    matrix: &StateChangeMatrix,
    mode: DeriveMode,
    mentions: &NextMentionTable,
) -> DependencyGraph {
    let t_max = process.num_steps();
    let mut graph = DependencyGraph::new();
    for (k, entity) in process.entities().iter().enumerate() {
        for i in 1..=t_max {
            let change = matrix.cell(i, k);
            if change.is_none() {
                continue;
            }
            let by_mention = mentions.get(i, k);
            let target = match mode {
                DeriveMode::MentionOnly => by_mention,
                DeriveMode::MentionOrChange => {
                    let by_change = (i + 1..=t_max).find(|&j| !matrix.cell(j, k).is_none());
                    match (by_mention, by_change) {
                        (Some(a), Some(b)) => Some(a.min(b)),
                        (a, b) => a.or(b),
                    }
                }
            };
            if let Some(j) = target {
                let edge = DependencyEdge::new(i, j, entity.name(), change.clone())
                    .expect("target is strictly after source");
                graph
                    .insert(edge)
                    .expect("one edge per (step, entity) source cell");
            }
        }
    }
    graph
}
