//! Precision, recall and F1 for both prediction tasks.
//!
//! Dependency graphs are compared element-wise: each edge `(t, u, entity,
//! kind)` contributes a target element `(t, u)`, an entity element
//! `(t, u, entity)` and a change element `(t, u, kind)`, matched as multisets.
//!
//! State-change matrices are compared through four derived question sets:
//! inputs, outputs, conversions and movements. Movement locations recorded
//! as unknown match any location.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::depgraph::{derive_graph, DeriveError, DeriveMode};
use crate::io::CorpusFile;
use crate::mention::normalize;
use crate::model::{
    validate_matrix, ChangeKind, DependencyGraph, ModelError, ProcessRecord, StateChangeMatrix,
    Violation,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction and gold process sets differ (missing from predictions: {missing_in_pred:?}; missing from gold: {missing_in_gold:?})")]
    ProcessMismatch {
        missing_in_pred: Vec<String>,
        missing_in_gold: Vec<String>,
    },
    #[error("process `{process}`: matrix violates the existence automaton ({} cells)", violations.len())]
    InvalidMatrix {
        process: String,
        violations: Vec<Violation>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Harmonic mean of `p` and `r`; 0 when both are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    pub fn new(matched: usize, predicted: usize, gold: usize) -> Self {
        Counts {
            matched,
            predicted,
            gold,
        }
    }

    /// `matched / predicted`; 1 when nothing was predicted or expected, 0 when
    /// nothing was predicted but something was expected.
    pub fn precision(&self) -> f64 {
        match (self.predicted, self.gold) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (p, _) => self.matched as f64 / p as f64,
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            1.0
        } else {
            self.matched as f64 / self.gold as f64
        }
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }

    fn add(&mut self, other: Counts) {
        self.matched += other.matched;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Pool counts over all processes.
    #[default]
    Micro,
    /// Average per-process precision and recall, then take F1.
    Macro,
}

impl FromStr for Averaging {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "micro" => Ok(Averaging::Micro),
            "macro" => Ok(Averaging::Macro),
            other => Err(format!("unknown averaging `{other}` (expected micro or macro)")),
        }
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Averaging::Micro => "micro",
            Averaging::Macro => "macro",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Counts,
}

impl From<Counts> for Scores {
    fn from(c: Counts) -> Self {
        Scores {
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
            counts: c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessScores {
    pub process_id: String,
    #[serde(flatten)]
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub task: String,
    pub averaging: Averaging,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Counts,
    /// Micro scores per element type or question category.
    pub categories: BTreeMap<String, Scores>,
    pub per_process: Vec<ProcessScores>,
}

impl EvalReport {
    fn build(
        task: &str,
        averaging: Averaging,
        per_process: Vec<(String, Counts)>,
        categories: BTreeMap<String, Counts>,
    ) -> EvalReport {
        let mut counts = Counts::default();
        for (_, c) in &per_process {
            counts.add(*c);
        }
        let (precision, recall) = match averaging {
            Averaging::Micro => (counts.precision(), counts.recall()),
            Averaging::Macro if per_process.is_empty() => (1.0, 1.0),
            Averaging::Macro => {
                let k = per_process.len() as f64;
                let p = per_process.iter().map(|(_, c)| c.precision()).sum::<f64>() / k;
                let r = per_process.iter().map(|(_, c)| c.recall()).sum::<f64>() / k;
                (p, r)
            }
        };
        EvalReport {
            task: task.to_string(),
            averaging,
            precision,
            recall,
            f1: f1(precision, recall),
            counts,
            categories: categories.into_iter().map(|(k, c)| (k, c.into())).collect(),
            per_process: per_process
                .into_iter()
                .map(|(process_id, c)| ProcessScores {
                    process_id,
                    scores: c.into(),
                })
                .collect(),
        }
    }

    /// Overall row followed by one row per category.
    pub fn summary_rows(&self) -> Vec<(String, Scores)> {
        let mut rows = vec![(
            self.task.clone(),
            Scores {
                precision: self.precision,
                recall: self.recall,
                f1: self.f1,
                counts: self.counts,
            },
        )];
        for (k, s) in &self.categories {
            rows.push((format!("{}.{}", self.task, k), s.clone()));
        }
        rows
    }
}

/// Tab-separated summary of several reports.
pub fn summary_tsv(reports: &[&EvalReport]) -> String {
    let mut out = String::from("category\tprecision\trecall\tf1\tmatched\tpredicted\tgold\n");
    for r in reports {
        for (name, s) in r.summary_rows() {
            out.push_str(&format!(
                "{name}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{}\n",
                s.precision, s.recall, s.f1, s.counts.matched, s.counts.predicted, s.counts.gold
            ));
        }
    }
    out
}

fn check_keys<A, B>(pred: &BTreeMap<String, A>, gold: &BTreeMap<String, B>) -> Result<(), EvalError> {
    let missing_in_pred: Vec<String> = gold.keys().filter(|k| !pred.contains_key(*k)).cloned().collect();
    let missing_in_gold: Vec<String> = pred.keys().filter(|k| !gold.contains_key(*k)).cloned().collect();
    if missing_in_pred.is_empty() && missing_in_gold.is_empty() {
        Ok(())
    } else {
        Err(EvalError::ProcessMismatch {
            missing_in_pred,
            missing_in_gold,
        })
    }
}

fn multiset_overlap<T: Ord + Clone>(a: &[T], b: &[T]) -> usize {
    let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
    for x in b {
        *counts.entry(x).or_default() += 1;
    }
    let mut matched = 0;
    for x in a {
        if let Some(n) = counts.get_mut(x) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }
    matched
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DependencyElement {
    Target { src: usize, dst: usize },
    Entity { src: usize, dst: usize, entity: String },
    Change { src: usize, dst: usize, kind: ChangeKind },
}

impl DependencyElement {
    pub fn category(&self) -> &'static str {
        match self {
            DependencyElement::Target { .. } => "target",
            DependencyElement::Entity { .. } => "entity",
            DependencyElement::Change { .. } => "change",
        }
    }
}

/// Three elements per edge, in edge order.
pub fn dependency_elements(graph: &DependencyGraph) -> Vec<DependencyElement> {
    let mut out = Vec::with_capacity(3 * graph.len());
    for e in graph.edges() {
        let (src, dst) = (e.src(), e.dst());
        out.push(DependencyElement::Target { src, dst });
        out.push(DependencyElement::Entity {
            src,
            dst,
            entity: normalize(e.entity()),
        });
        out.push(DependencyElement::Change {
            src,
            dst,
            kind: e.change().kind(),
        });
    }
    out
}

pub fn dependency_metrics(
    pred: &BTreeMap<String, DependencyGraph>,
    gold: &BTreeMap<String, DependencyGraph>,
    averaging: Averaging,
) -> Result<EvalReport, EvalError> {
    check_keys(pred, gold)?;
    let mut per_process = Vec::new();
    let mut categories: BTreeMap<String, Counts> = BTreeMap::new();
    for (id, g) in gold {
        let pe = dependency_elements(&pred[id]);
        let ge = dependency_elements(g);
        per_process.push((id.clone(), Counts::new(multiset_overlap(&pe, &ge), pe.len(), ge.len())));
        for cat in ["target", "entity", "change"] {
            let p: Vec<_> = pe.iter().filter(|e| e.category() == cat).cloned().collect();
            let g: Vec<_> = ge.iter().filter(|e| e.category() == cat).cloned().collect();
            categories
                .entry(cat.to_string())
                .or_default()
                .add(Counts::new(multiset_overlap(&p, &g), p.len(), g.len()));
        }
    }
    Ok(EvalReport::build("dependency", averaging, per_process, categories))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Conversion {
    pub destroyed: BTreeSet<String>,
    pub created: BTreeSet<String>,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Movement {
    pub entity: String,
    pub from_loc: Option<String>,
    pub to_loc: Option<String>,
    pub step: usize,
}

fn loc_matches(a: &Option<String>, b: &Option<String>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => normalize(x) == normalize(y),
        _ => true,
    }
}

impl Movement {
    /// Same entity and step; locations agree or one side is unknown.
    pub fn matches(&self, other: &Movement) -> bool {
        self.entity == other.entity
            && self.step == other.step
            && loc_matches(&self.from_loc, &other.from_loc)
            && loc_matches(&self.to_loc, &other.to_loc)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct QuestionSet {
    pub inputs: BTreeSet<String>,
    pub outputs: BTreeSet<String>,
    pub conversions: Vec<Conversion>,
    pub movements: Vec<Movement>,
}

impl QuestionSet {
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
            && self.outputs.is_empty()
            && self.conversions.is_empty()
            && self.movements.is_empty()
    }
}

/// Derives the four question sets from a consistent matrix. Entities are
/// identified by their normalized name.
pub fn statechange_questions(
    process: &ProcessRecord,
    matrix: &StateChangeMatrix,
) -> Result<QuestionSet, EvalError> {
    let violations = validate_matrix(process, matrix)?;
    if !violations.is_empty() {
        return Err(EvalError::InvalidMatrix {
            process: process.id().to_string(),
            violations,
        });
    }
    let mut q = QuestionSet::default();
    let t_max = matrix.steps();
    for (j, entity) in process.entities().iter().enumerate() {
        let key = entity.key();
        let kinds: Vec<ChangeKind> = matrix.column_kinds(j).collect();
        let is_input = kinds.iter().enumerate().any(|(d, &k)| {
            k == ChangeKind::Destroy && !kinds[..d].contains(&ChangeKind::Create)
        });
        let is_output = kinds.iter().enumerate().any(|(c, &k)| {
            k == ChangeKind::Create && !kinds[c + 1..].contains(&ChangeKind::Destroy)
        });
        if is_input {
            q.inputs.insert(key.clone());
        }
        if is_output {
            q.outputs.insert(key.clone());
        }
        for t in 1..=t_max {
            let cell = matrix.cell(t, j);
            if cell.kind() == ChangeKind::Move {
                q.movements.push(Movement {
                    entity: key.clone(),
                    from_loc: cell.from_loc().map(str::to_string),
                    to_loc: cell.to_loc().map(str::to_string),
                    step: t,
                });
            }
        }
    }
    for t in 1..=t_max {
        let with = |kind| -> BTreeSet<String> {
            process
                .entities()
                .iter()
                .enumerate()
                .filter(|(j, _)| matrix.cell(t, *j).kind() == kind)
                .map(|(_, e)| e.key())
                .collect()
        };
        let (destroyed, created) = (with(ChangeKind::Destroy), with(ChangeKind::Create));
        if !destroyed.is_empty() && !created.is_empty() {
            q.conversions.push(Conversion {
                destroyed,
                created,
                step: t,
            });
        }
    }
    q.movements.sort();
    Ok(q)
}

/// Size of a maximum matching between `pred` and `gold` under `matches`.
fn max_matching<T>(pred: &[T], gold: &[T], matches: impl Fn(&T, &T) -> bool) -> usize {
    let adj: Vec<Vec<usize>> = pred
        .iter()
        .map(|p| (0..gold.len()).filter(|&g| matches(p, &gold[g])).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; gold.len()];

    fn augment(p: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &g in &adj[p] {
            if seen[g] {
                continue;
            }
            seen[g] = true;
            if owner[g].is_none() || augment(owner[g].unwrap(), adj, seen, owner) {
                owner[g] = Some(p);
                return true;
            }
        }
        false
    }

    let mut size = 0;
    for p in 0..pred.len() {
        let mut seen = vec![false; gold.len()];
        if augment(p, &adj, &mut seen, &mut owner) {
            size += 1;
        }
    }
    size
}

/// Per-category counts for one process.
pub fn question_counts(pred: &QuestionSet, gold: &QuestionSet) -> BTreeMap<&'static str, Counts> {
    let set = |p: &BTreeSet<String>, g: &BTreeSet<String>| {
        Counts::new(p.intersection(g).count(), p.len(), g.len())
    };
    BTreeMap::from([
        ("inputs", set(&pred.inputs, &gold.inputs)),
        ("outputs", set(&pred.outputs, &gold.outputs)),
        (
            "conversions",
            Counts::new(
                multiset_overlap(&pred.conversions, &gold.conversions),
                pred.conversions.len(),
                gold.conversions.len(),
            ),
        ),
        (
            "movements",
            Counts::new(
                max_matching(&pred.movements, &gold.movements, Movement::matches),
                pred.movements.len(),
                gold.movements.len(),
            ),
        ),
    ])
}

pub fn statechange_metrics(
    pred: &BTreeMap<String, QuestionSet>,
    gold: &BTreeMap<String, QuestionSet>,
    averaging: Averaging,
) -> Result<EvalReport, EvalError> {
    check_keys(pred, gold)?;
    let mut per_process = Vec::new();
    let mut categories: BTreeMap<String, Counts> = BTreeMap::new();
    for (id, g) in gold {
        let mut total = Counts::default();
        for (cat, c) in question_counts(&pred[id], g) {
            total.add(c);
            categories.entry(cat.to_string()).or_default().add(c);
        }
        per_process.push((id.clone(), total));
    }
    Ok(EvalReport::build("statechange", averaging, per_process, categories))
}

/// A process's annotated matrix (all `None` when absent) and graph (derived
/// from the matrix, targeting the next mention or change, when absent).
pub fn annotations(p: &ProcessRecord) -> Result<(StateChangeMatrix, DependencyGraph), EvalError> {
    let matrix = p
        .gold_matrix()
        .cloned()
        .unwrap_or_else(|| StateChangeMatrix::all_none(p.num_steps(), p.num_entities()));
    let graph = match p.gold_graph() {
        Some(g) => g.clone(),
        None => derive_graph(p, &matrix, DeriveMode::MentionOrChange).map_err(|e| match e {
            DeriveError::InvalidMatrix(violations) => EvalError::InvalidMatrix {
                process: p.id().to_string(),
                violations,
            },
            DeriveError::Model(m) => EvalError::Model(m),
        })?,
    };
    Ok((matrix, graph))
}

/// Reports for whichever tasks are requested, comparing two corpora by
/// process id.
type Side<'a> = BTreeMap<String, (&'a ProcessRecord, StateChangeMatrix, DependencyGraph)>;

pub fn evaluate_corpora(
    pred: &CorpusFile,
    gold: &CorpusFile,
    averaging: Averaging,
    dependency: bool,
    statechange: bool,
) -> Result<(Option<EvalReport>, Option<EvalReport>), EvalError> {
    fn side(c: &CorpusFile) -> Result<Side<'_>, EvalError> {
        let mut out = BTreeMap::new();
        for p in &c.processes {
            let (m, g) = annotations(p)?;
            out.insert(p.id().to_string(), (p, m, g));
        }
        Ok(out)
    }
    let (pred, gold) = (side(pred)?, side(gold)?);
    check_keys(&pred, &gold)?;
    let dep = if dependency {
        let graphs = |m: &Side<'_>| m.iter().map(|(k, v)| (k.clone(), v.2.clone())).collect();
        Some(dependency_metrics(&graphs(&pred), &graphs(&gold), averaging)?)
    } else {
        None
    };
    let sc = if statechange {
        let questions = |m: &Side<'_>| {
            m.iter()
                .map(|(k, (p, mat, _))| Ok((k.clone(), statechange_questions(p, mat)?)))
                .collect::<Result<BTreeMap<_, _>, EvalError>>()
        };
        Some(statechange_metrics(&questions(&pred)?, &questions(&gold)?, averaging)?)
    } else {
        None
    };
    Ok((dep, sc))
}
