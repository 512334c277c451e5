//! Grid TSV: one block per process, blocks separated by blank lines.
//!
//! ```text
//! # photosynthesis<TAB>photosynthesis
//! sentence<TAB>water<TAB>light<TAB>CO2;carbon dioxide
//! Roots absorb water from soil.<TAB>M soil→root<TAB>-<TAB>-
//! ...
//! ```
//!
//! The first line carries `# <id>` and the topic, the header names the
//! entity columns, and each following row is one step: its sentence, then one
//! cell per entity.

use std::path::Path;

use super::cell::{format_cell, parse_cell};
use super::{parse_err, read_text, CorpusFile, IoError, ProcessIssues};
use crate::model::{validate_matrix, Entity, ProcessRecord, StateChangeMatrix};

pub fn load_grid_tsv(path: &Path) -> Result<CorpusFile, IoError> {
    parse_grid_tsv(&read_text(path)?)
}

pub fn parse_grid_tsv(text: &str) -> Result<CorpusFile, IoError> {
    let mut blocks: Vec<Vec<(usize, &str)>> = Vec::new();
    let mut cur = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                blocks.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push((i + 1, line));
        }
    }
    if !cur.is_empty() {
        blocks.push(cur);
    }

    let mut processes: Vec<ProcessRecord> = Vec::new();
    let mut issues = Vec::new();
    for block in blocks {
        let (id_line, first) = block[0];
        let head = first
            .strip_prefix('#')
            .ok_or_else(|| parse_err(id_line, "block must start with `# <id><TAB><topic>`"))?;
        let mut head = head.splitn(2, '\t');
        let id = head.next().unwrap_or("").trim().to_string();
        let topic = head.next().unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(parse_err(id_line, "missing process id"));
        }
        let (hdr_line, hdr) = *block
            .get(1)
            .ok_or_else(|| parse_err(id_line, "missing header row"))?;
        let cols: Vec<&str> = hdr.split('\t').collect();
        if cols[0].trim() != "sentence" {
            return Err(parse_err(hdr_line, "header must start with `sentence`"));
        }
        let entity_specs = &cols[1..];

        let mut steps = Vec::new();
        let mut rows = Vec::new();
        for &(ln, row) in &block[2..] {
            let fields: Vec<&str> = row.split('\t').collect();
            if fields.len() != cols.len() {
                return Err(parse_err(
                    ln,
                    format!("row has {} fields, header has {}", fields.len(), cols.len()),
                ));
            }
            steps.push(fields[0].trim().to_string());
            let cells = fields[1..]
                .iter()
                .map(|c| parse_cell(c).map_err(|m| parse_err(ln, m)))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(cells);
        }

        let issue = |e: String| ProcessIssues {
            process: id.clone(),
            violations: vec![],
            errors: vec![e],
        };
        let entities = match entity_specs
            .iter()
            .map(|s| Entity::parse(s))
            .collect::<Result<Vec<_>, _>>()
        {
            Ok(e) => e,
            Err(e) => {
                issues.push(issue(e.to_string()));
                continue;
            }
        };
        let process = match ProcessRecord::new(&id, &topic, steps, entities) {
            Ok(p) => p,
            Err(e) => {
                issues.push(issue(e.to_string()));
                continue;
            }
        };
        if processes.iter().any(|p| p.id() == id) {
            issues.push(issue(format!("duplicate process id `{id}`")));
            continue;
        }
        let matrix = StateChangeMatrix::from_rows(rows).expect("rows checked rectangular");
        let violations = validate_matrix(&process, &matrix).expect("dimensions match");
        if !violations.is_empty() {
            issues.push(ProcessIssues {
                process: id.clone(),
                violations,
                errors: vec![],
            });
            continue;
        }
        processes.push(process.with_gold_matrix(matrix).expect("validated"));
    }
    if !issues.is_empty() {
        return Err(IoError::Validation(issues));
    }
    Ok(CorpusFile { processes })
}

/// Writes processes that carry a gold matrix; graphs are not representable.
pub fn write_grid_tsv(corpus: &CorpusFile) -> String {
    let mut out = String::new();
    for (i, p) in corpus.processes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("# {}\t{}\n", p.id(), p.topic()));
        out.push_str("sentence");
        for e in p.entities() {
            out.push('\t');
            out.push_str(&e.to_spec());
        }
        out.push('\n');
        let none = StateChangeMatrix::all_none(p.num_steps(), p.num_entities());
        let m = p.gold_matrix().unwrap_or(&none);
        for (t, row) in m.rows().iter().enumerate() {
            out.push_str(p.step(t + 1));
            for c in row {
                out.push('\t');
                out.push_str(&format_cell(c));
            }
            out.push('\n');
        }
    }
    out
}
