use std::fmt::Write;

use crate::mention::normalize;
use crate::model::{DependencyGraph, ProcessRecord};

const LABEL_CHARS: usize = 40;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' | '\r' => out.push(' '),
            _ => out.push(c),
        }
    }
    out
}

/// Renders `graph` over the steps of `process` in Graphviz DOT.
///
/// Nodes come in step order; edges are ordered by source, target, then
/// entity name (case-insensitive), so equal inputs give identical bytes.
pub fn export_dot(graph: &DependencyGraph, process: &ProcessRecord) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(process.id())).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=box];").unwrap();
    for (i, sentence) in process.steps().iter().enumerate() {
        let prefix: String = sentence.chars().take(LABEL_CHARS).collect();
        writeln!(
            out,
            "  s{} [label=\"s_{}: {}\"];",
            i + 1,
            i + 1,
            escape(&prefix)
        )
        .unwrap();
    }
    let mut edges: Vec<_> = graph.edges().iter().collect();
    edges.sort_by(|a, b| {
        (a.src(), a.dst(), normalize(a.entity()), a.entity())
            .cmp(&(b.src(), b.dst(), normalize(b.entity()), b.entity()))
    });
    for e in edges {
        writeln!(
            out,
            "  s{} -> s{} [label=\"{}({})\"];",
            e.src(),
            e.dst(),
            e.change().kind().label(),
            escape(e.entity())
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
