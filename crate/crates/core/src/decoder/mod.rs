//! Joint decoding of the state-change matrix and dependency graph.
//!
//! Steps are decoded left to right. At each step a beam entry is extended by
//! the best-scoring assignments that respect every entity's existence state,
//! and the beam keeps the `beam_width` highest-scoring paths. A path's score
//! is the sum of its per-step `phi` values.
//!
//! Ranking is total: scores are compared after quantizing to
//! [`TIE_TOLERANCE`], and equal scores fall back to the row-major tuple of
//! kind codes (`Create < Move < Destroy < None`), smaller first. The same key
//! drives the beam, candidate cutoffs and the exhaustive search, so beam and
//! exhaustive results agree whenever the beam is wide enough.

mod candidates;
pub mod scoring;

use std::cmp::Ordering;
use std::collections::HashMap;

use thiserror::Error;

use crate::depgraph::{derive_with_targets, incremental_targets, DeriveMode};
use crate::model::{
    apply_change, validate_matrix, ChangeKind, DependencyGraph, ExistenceState, ProcessRecord,
    StateChangeMatrix,
};
use crate::providers::{EdgeScorer, LogitProvider, TopicPriorTable};

pub use scoring::{f_cell, f_score, g_edge, g_kb, phi, score_p, StepScore};
use scoring::StepTable;

/// Scores closer than this are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Largest `steps × entities` the exhaustive search accepts.
pub const EXHAUSTIVE_MAX_CELLS: usize = 9;

pub(crate) fn quantize(score: f64) -> i64 {
    (score / TIE_TOLERANCE).round() as i64
}

/// Total order used everywhere a ranking is needed: better first.
pub fn rank(a_score: f64, a_kinds: &[ChangeKind], b_score: f64, b_kinds: &[ChangeKind]) -> Ordering {
    quantize(b_score)
        .cmp(&quantize(a_score))
        .then_with(|| a_kinds.cmp(b_kinds))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("invalid decoder configuration: {0}")]
    Config(String),
    #[error("exhaustive search over {cells} cells exceeds the limit of {EXHAUSTIVE_MAX_CELLS}")]
    TooLarge { cells: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    /// Weight of the state-change score against the graph score.
    pub lambda: f64,
    /// Weight of encoder log-probabilities against topic priors.
    pub alpha: f64,
    /// Weight of the purpose term against the background-knowledge term.
    pub beta: f64,
    /// Purpose reward or penalty magnitude.
    pub c: f64,
    pub beam_width: usize,
    pub candidate_cap: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            lambda: 0.5,
            alpha: 0.8,
            beta: 0.8,
            c: 0.5,
            beam_width: 20,
            candidate_cap: 128,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(DecodeError::Config(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        unit("lambda", self.lambda)?;
        unit("alpha", self.alpha)?;
        unit("beta", self.beta)?;
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(DecodeError::Config(format!("c = {} is outside (0, 1)", self.c)));
        }
        if self.beam_width == 0 {
            return Err(DecodeError::Config("beam width must be at least 1".into()));
        }
        if self.candidate_cap == 0 {
            return Err(DecodeError::Config("candidate cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Which graph terms take part in scoring. A disabled term contributes zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ablation {
    pub use_g_edge: bool,
    pub use_g_kb: bool,
}

impl Ablation {
    pub const FULL: Ablation = Ablation {
        use_g_edge: true,
        use_g_kb: true,
    };
    pub const NO_KB: Ablation = Ablation {
        use_g_edge: true,
        use_g_kb: false,
    };
    pub const NO_GRAPH: Ablation = Ablation {
        use_g_edge: false,
        use_g_kb: false,
    };
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation::FULL
    }
}

/// The score sources a decode draws on.
#[derive(Clone, Copy)]
pub struct Scorers<'a> {
    pub provider: &'a dyn LogitProvider,
    pub priors: &'a TopicPriorTable,
    pub edges: &'a dyn EdgeScorer,
}

/// A partial path: the kinds chosen for steps `1..=t`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamEntry {
    kinds: Vec<ChangeKind>,
    existence: Vec<ExistenceState>,
    score: f64,
}

impl BeamEntry {
    pub fn initial(entities: usize) -> Self {
        BeamEntry {
            kinds: Vec::new(),
            existence: vec![ExistenceState::Unknown; entities],
            score: 0.0,
        }
    }

    pub fn kinds(&self) -> &[ChangeKind] {
        &self.kinds
    }

    pub fn existence(&self) -> &[ExistenceState] {
        &self.existence
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    fn extend(&self, row: &[ChangeKind], step_phi: f64) -> BeamEntry {
        let mut kinds = Vec::with_capacity(self.kinds.len() + row.len());
        kinds.extend_from_slice(&self.kinds);
        kinds.extend_from_slice(row);
        let existence = self
            .existence
            .iter()
            .zip(row)
            .map(|(&s, &k)| apply_change(s, k).expect("candidates respect existence"))
            .collect();
        BeamEntry {
            kinds,
            existence,
            score: self.score + step_phi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub matrix: StateChangeMatrix,
    /// Derived from `matrix`, targets at the next mention or next change.
    pub graph: DependencyGraph,
    pub score: f64,
    pub step_scores: Vec<StepScore>,
}

impl DecodeResult {
    /// Sum of the state-change term over all steps.
    pub fn total_f(&self) -> f64 {
        self.step_scores.iter().map(|s| s.f).sum()
    }
}

/// Precomputed per-step score tables for one process.
pub struct Decoder<'a> {
    process: &'a ProcessRecord,
    config: DecoderConfig,
    ablation: Ablation,
    targets: crate::depgraph::NextMentionTable,
    tables: Vec<StepTable>,
}

impl<'a> Decoder<'a> {
    pub fn new(
        process: &'a ProcessRecord,
        scorers: Scorers<'_>,
        config: DecoderConfig,
        ablation: Ablation,
    ) -> Result<Self, DecodeError> {
        config.validate()?;
        let targets = incremental_targets(process);
        let tables = (1..=process.num_steps())
            .map(|t| {
                StepTable::build(
                    process,
                    t,
                    &targets,
                    scorers.provider,
                    scorers.priors,
                    scorers.edges,
                    &config,
                )
            })
            .collect();
        Ok(Decoder {
            process,
            config,
            ablation,
            targets,
            tables,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    /// Scores of one step's assignment (`step` is 1-based).
    pub fn step_score(&self, step: usize, row: &[ChangeKind]) -> StepScore {
        self.tables[step - 1].score_row(row, &self.config, self.ablation)
    }

    /// Up to `candidate_cap` assignments for `step` that every entity's
    /// existence state allows, best state-change score first.
    pub fn step_candidates(&self, step: usize, existence: &[ExistenceState]) -> Vec<Vec<ChangeKind>> {
        let table = &self.tables[step - 1];
        let options: Vec<Vec<(ChangeKind, f64)>> = existence
            .iter()
            .zip(&table.cells)
            .map(|(&state, cell)| {
                ChangeKind::ALL
                    .into_iter()
                    .filter(|&k| apply_change(state, k).is_ok())
                    .map(|k| (k, cell.f[k.index()]))
                    .collect()
            })
            .collect();
        candidates::k_best(&options, self.config.candidate_cap)
    }

    /// Sum of per-step `phi` for a full kind matrix, accumulated in step
    /// order exactly as the beam does.
    pub fn path_score(&self, rows: &[Vec<ChangeKind>]) -> f64 {
        let mut score = 0.0;
        for (t, row) in rows.iter().enumerate() {
            score += self.step_score(t + 1, row).phi;
        }
        score
    }

    pub fn decode(&self) -> DecodeResult {
        let n = self.process.num_entities();
        let mut beam = vec![BeamEntry::initial(n)];
        for t in 1..=self.process.num_steps() {
            let mut cache: HashMap<&[ExistenceState], Vec<(Vec<ChangeKind>, f64)>> = HashMap::new();
            let mut next = Vec::new();
            for entry in &beam {
                let cands = cache.entry(entry.existence()).or_insert_with(|| {
                    self.step_candidates(t, entry.existence())
                        .into_iter()
                        .map(|row| {
                            let p = self.step_score(t, &row).phi;
                            (row, p)
                        })
                        .collect()
                });
                for (row, p) in cands.iter() {
                    next.push(entry.extend(row, *p));
                }
            }
            next.sort_by(|a, b| rank(a.score, &a.kinds, b.score, &b.kinds));
            next.truncate(self.config.beam_width);
            beam = next;
        }
        let best = beam.swap_remove(0);
        self.finish(&best.kinds, best.score)
    }

    /// Scores every consistent matrix and returns the best under the same
    /// ranking as [`Decoder::decode`].
    pub fn exhaustive(&self) -> Result<DecodeResult, DecodeError> {
        let (t_max, n) = (self.process.num_steps(), self.process.num_entities());
        let cells = t_max * n;
        if cells > EXHAUSTIVE_MAX_CELLS {
            return Err(DecodeError::TooLarge { cells });
        }
        let mut best: Option<(Vec<ChangeKind>, f64)> = None;
        let mut kinds = vec![ChangeKind::Create; cells];
        for code in 0..4usize.pow(cells as u32) {
            let mut c = code;
            for slot in kinds.iter_mut().rev() {
                *slot = ChangeKind::from_index(c % 4).expect("digit below 4");
                c /= 4;
            }
            let rows: Vec<Vec<ChangeKind>> = kinds.chunks(n).map(<[_]>::to_vec).collect();
            let matrix = StateChangeMatrix::from_kinds(&rows).expect("rectangular");
            let consistent = validate_matrix(self.process, &matrix)
                .expect("dimensions match")
                .is_empty();
            if !consistent {
                continue;
            }
            let score = self.path_score(&rows);
            let better = match &best {
                None => true,
                Some((bk, bs)) => rank(score, &kinds, *bs, bk) == Ordering::Less,
            };
            if better {
                best = Some((kinds.clone(), score));
            }
        }
        let (kinds, score) = best.expect("the all-None matrix is always consistent");
        Ok(self.finish(&kinds, score))
    }

    fn finish(&self, kinds: &[ChangeKind], score: f64) -> DecodeResult {
        let n = self.process.num_entities();
        let rows = kinds
            .chunks(n)
            .zip(&self.tables)
            .map(|(row, table)| {
                row.iter()
                    .zip(&table.cells)
                    .map(|(&k, cell)| cell.change(k))
                    .collect()
            })
            .collect();
        let matrix = StateChangeMatrix::from_rows(rows).expect("rectangular");
        let graph =
            derive_with_targets(self.process, &matrix, DeriveMode::MentionOrChange, &self.targets);
        let step_scores = kinds
            .chunks(n)
            .enumerate()
            .map(|(t, row)| self.step_score(t + 1, row))
            .collect();
        DecodeResult {
            matrix,
            graph,
            score,
            step_scores,
        }
    }
}

/// Beam-search decode of one process.
pub fn decode(
    process: &ProcessRecord,
    scorers: Scorers<'_>,
    config: DecoderConfig,
    ablation: Ablation,
) -> Result<DecodeResult, DecodeError> {
    Ok(Decoder::new(process, scorers, config, ablation)?.decode())
}

/// Brute-force decode of a small process (`steps × entities ≤ 9`).
pub fn exhaustive_decode(
    process: &ProcessRecord,
    scorers: Scorers<'_>,
    config: DecoderConfig,
    ablation: Ablation,
) -> Result<DecodeResult, DecodeError> {
    Decoder::new(process, scorers, config, ablation)?.exhaustive()
}
