//! Canonical corpus format: UTF-8 JSON Lines, one process object per line.
//!
//! ```text
//! {"id":"p1","topic":"photosynthesis","steps":["Roots absorb water from soil.", ...],
//!  "entities":["water","CO2;carbon dioxide", ...],
//!  "gold_matrix":[["M soil→root","-", ...], ...],
//!  "gold_graph":[{"src":1,"dst":2,"entity":"water","change":"M soil→root"}, ...]}
//! ```
//!
//! `gold_matrix` rows are steps and columns follow `entities`; cells use the
//! grid cell grammar. Prediction files use the same layout plus an optional
//! `score`.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cell::{format_cell, parse_cell};
use super::{parse_err, read_text, IoError, ProcessIssues};
use crate::model::{
    validate_matrix, DependencyEdge, DependencyGraph, Entity, ModelError, ProcessRecord,
    StateChangeMatrix,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    src: usize,
    dst: usize,
    entity: String,
    change: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProcess {
    id: String,
    #[serde(default)]
    topic: String,
    steps: Vec<String>,
    entities: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_matrix: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_graph: Option<Vec<RawEdge>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

/// An ordered list of processes with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusFile {
    pub processes: Vec<ProcessRecord>,
}

impl CorpusFile {
    pub fn get(&self, id: &str) -> Option<&ProcessRecord> {
        self.processes.iter().find(|p| p.id() == id)
    }

    pub fn len(&self) -> usize {
        self.processes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.processes.is_empty()
    }
}

/// A process plus the decoder score that produced it, for prediction files.
pub struct CorpusRecordOut<'a> {
    pub process: &'a ProcessRecord,
    pub score: Option<f64>,
}

pub fn load_corpus(path: &Path) -> Result<CorpusFile, IoError> {
    parse_corpus(&read_text(path)?)
}

/// Dispatches on extension: `.tsv` is read as a grid file, anything else as
/// the canonical format.
pub fn load_corpus_any(path: &Path) -> Result<CorpusFile, IoError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv")) {
        super::load_grid_tsv(path)
    } else {
        load_corpus(path)
    }
}

pub fn parse_corpus(text: &str) -> Result<CorpusFile, IoError> {
    let (processes, issues) = parse_corpus_lenient(text)?;
    if !issues.is_empty() {
        return Err(IoError::Validation(issues));
    }
    Ok(CorpusFile { processes })
}

/// Parses every line, collecting per-process validation problems instead of
/// stopping at the first. Processes with problems are left out of the
/// returned list; malformed JSON or cells still fail immediately.
pub fn parse_corpus_lenient(
    text: &str,
) -> Result<(Vec<ProcessRecord>, Vec<ProcessIssues>), IoError> {
    let mut raws = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawProcess =
            serde_json::from_str(line).map_err(|e| parse_err(i + 1, e.to_string()))?;
        raws.push((i + 1, raw));
    }
    let mut seen = HashSet::new();
    let mut processes = Vec::new();
    let mut issues = Vec::new();
    for (line, raw) in raws {
        let id = raw.id.clone();
        let mut dup = None;
        if !seen.insert(id.clone()) {
            dup = Some(format!("duplicate process id `{id}`"));
        }
        match build_process(line, raw)? {
            Ok(p) if dup.is_none() => processes.push(p),
            Ok(_) => issues.push(ProcessIssues {
                process: id,
                violations: vec![],
                errors: dup.into_iter().collect(),
            }),
            Err(mut iss) => {
                iss.errors.extend(dup);
                issues.push(iss);
            }
        }
    }
    Ok((processes, issues))
}

type Built = Result<ProcessRecord, ProcessIssues>;

fn build_process(line: usize, raw: RawProcess) -> Result<Built, IoError> {
    let issue = |errors: Vec<String>| ProcessIssues {
        process: raw.id.clone(),
        violations: vec![],
        errors,
    };
    let entities: Result<Vec<Entity>, ModelError> =
        raw.entities.iter().map(|e| Entity::parse(e)).collect();
    let entities = match entities {
        Ok(e) => e,
        Err(e) => return Ok(Err(issue(vec![e.to_string()]))),
    };
    let mut process = match ProcessRecord::new(&raw.id, &raw.topic, raw.steps.clone(), entities) {
        Ok(p) => p,
        Err(e) => return Ok(Err(issue(vec![e.to_string()]))),
    };
    if let Some(rows) = &raw.gold_matrix {
        let mut parsed = Vec::with_capacity(rows.len());
        for (t, row) in rows.iter().enumerate() {
            let mut cells = Vec::with_capacity(row.len());
            for (j, c) in row.iter().enumerate() {
                let cell = parse_cell(c).map_err(|m| {
                    parse_err(line, format!("gold_matrix[{}][{}]: {m}", t + 1, j + 1))
                })?;
                cells.push(cell);
            }
            parsed.push(cells);
        }
        let matrix = match StateChangeMatrix::from_rows(parsed) {
            Ok(m) => m,
            Err(e) => return Ok(Err(issue(vec![e.to_string()]))),
        };
        match validate_matrix(&process, &matrix) {
            Ok(v) if v.is_empty() => {}
            Ok(v) => {
                return Ok(Err(ProcessIssues {
                    process: raw.id.clone(),
                    violations: v,
                    errors: vec![],
                }))
            }
            Err(e) => return Ok(Err(issue(vec![e.to_string()]))),
        }
        process = process
            .with_gold_matrix(matrix)
            .expect("matrix validated above");
    }
    if let Some(edges) = &raw.gold_graph {
        let mut graph = DependencyGraph::new();
        let mut errors = Vec::new();
        for e in edges {
            let change = parse_cell(&e.change)
                .map_err(|m| parse_err(line, format!("gold_graph edge change: {m}")))?;
            let name = match process.entity_index(&e.entity) {
                Some(k) => process.entities()[k].name().to_string(),
                None => {
                    errors.push(ModelError::UnknownEntity(e.entity.clone()).to_string());
                    continue;
                }
            };
            match DependencyEdge::new(e.src, e.dst, name, change)
                .and_then(|edge| graph.insert(edge))
            {
                Ok(()) => {}
                Err(err) => errors.push(err.to_string()),
            }
        }
        if let Err(err) = process.check_graph(&graph) {
            errors.push(err.to_string());
        }
        if !errors.is_empty() {
            return Ok(Err(issue(errors)));
        }
        process = process.with_gold_graph(graph).expect("graph checked above");
    }
    Ok(Ok(process))
}

fn raw_edges(g: &DependencyGraph) -> Vec<RawEdge> {
    g.edges()
        .iter()
        .map(|e| RawEdge {
            src: e.src(),
            dst: e.dst(),
            entity: e.entity().to_string(),
            change: format_cell(e.change()),
        })
        .collect()
}

fn to_raw(p: &ProcessRecord, score: Option<f64>) -> RawProcess {
    RawProcess {
        id: p.id().to_string(),
        topic: p.topic().to_string(),
        steps: p.steps().to_vec(),
        entities: p.entities().iter().map(Entity::to_spec).collect(),
        gold_matrix: p.gold_matrix().map(|m| {
            m.rows()
                .iter()
                .map(|r| r.iter().map(format_cell).collect())
                .collect()
        }),
        gold_graph: p.gold_graph().map(raw_edges),
        score,
    }
}

/// One canonical line (no trailing newline).
pub fn process_to_json(p: &ProcessRecord, score: Option<f64>) -> String {
    serde_json::to_string(&to_raw(p, score)).expect("plain data serializes")
}

/// The graph as a JSON array of edges in the same shape as `gold_graph`,
/// one edge per line.
pub fn graph_to_json(graph: &DependencyGraph) -> String {
    let edges = raw_edges(graph);
    if edges.is_empty() {
        return "[]\n".to_string();
    }
    let lines: Vec<String> = edges
        .iter()
        .map(|e| format!("  {}", serde_json::to_string(e).expect("plain data serializes")))
        .collect();
    format!("[\n{}\n]\n", lines.join(",\n"))
}

pub fn write_corpus<'a, I>(records: I) -> String
where
    I: IntoIterator<Item = CorpusRecordOut<'a>>,
{
    let mut out = String::new();
    for r in records {
        out.push_str(&process_to_json(r.process, r.score));
        out.push('\n');
    }
    out
}
