use std::path::Path;

use rayon::prelude::*;

use crate::decoder::{DecodeResult, Decoder, Scorers};
use crate::depgraph::{derive_graph, DeriveMode};
use crate::eval::{annotations, evaluate_corpora, summary_tsv, EvalReport};
use crate::io::{
    export_dot as dot_of, graph_to_json, load_corpus_any, load_logits, write_atomic, write_corpus,
    CorpusFile, CorpusRecordOut, IoError,
};
use crate::model::{DependencyGraph, ProcessRecord};
use crate::providers::{
    load_edge_scores, load_priors, ConstantEdgeScorer, EdgeScorer, FileLogitProvider,
    LexicalProvider, LogitProvider, TopicPriorTable, DEFAULT_EDGE_SCORE,
};

use super::{CliError, ProviderSpec, RunConfig, EXIT_INVALID, EXIT_OK};

fn corpus_path(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.corpus
        .as_deref()
        .ok_or_else(|| CliError::Usage("no corpus given (use --corpus or `corpus =` in --config)".into()))
}

fn load(cfg: &RunConfig) -> Result<CorpusFile, CliError> {
    Ok(load_corpus_any(corpus_path(cfg)?)?)
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.jobs {
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    Ok(write_atomic(path, contents)?)
}

pub fn validate(cfg: &RunConfig) -> Result<i32, CliError> {
    match load(cfg) {
        Ok(c) => {
            println!("ok: {} process(es), no violations", c.len());
            Ok(EXIT_OK)
        }
        Err(CliError::Io(IoError::Validation(issues))) => {
            for i in &issues {
                println!("{i}");
            }
            println!("{} process(es) with violations", issues.len());
            Ok(EXIT_INVALID)
        }
        Err(e) => Err(e),
    }
}

pub fn derive(cfg: &RunConfig, dot: bool) -> Result<i32, CliError> {
    let corpus = load(cfg)?;
    let pool = pool(cfg)?;
    let outputs: Vec<Option<(String, DependencyGraph)>> = pool.install(|| {
        corpus
            .processes
            .par_iter()
            .map(|p| {
                let m = p.gold_matrix()?;
                let g = derive_graph(p, m, DeriveMode::MentionOrChange)
                    .expect("gold matrices are validated on load");
                Some((p.id().to_string(), g))
            })
            .collect()
    });
    let mut written = 0;
    for (p, out) in corpus.processes.iter().zip(outputs) {
        let Some((id, graph)) = out else {
            eprintln!("warning: process `{}` has no gold matrix; skipped", p.id());
            continue;
        };
        write(&cfg.out.join(format!("{id}.graph.json")), &graph_to_json(&graph))?;
        if dot {
            write(&cfg.out.join(format!("{id}.dot")), &dot_of(&graph, p))?;
        }
        written += 1;
    }
    println!("derived {written} graph(s) into {}", cfg.out.display());
    Ok(EXIT_OK)
}

pub fn decode(cfg: &RunConfig) -> Result<i32, CliError> {
    let corpus = load(cfg)?;
    let priors = match &cfg.priors {
        Some(p) => load_priors(p)?,
        None => TopicPriorTable::new(),
    };
    let edges: Box<dyn EdgeScorer> = match &cfg.edge_scores {
        Some(p) => Box::new(load_edge_scores(p)?),
        None => Box::new(ConstantEdgeScorer(DEFAULT_EDGE_SCORE)),
    };
    let file_provider = match &cfg.provider {
        ProviderSpec::File(p) => Some(FileLogitProvider::new(load_logits(p)?)),
        ProviderSpec::Lexical => None,
    };
    let lexical = LexicalProvider::default();
    let provider: &dyn LogitProvider = match &file_provider {
        Some(f) => f,
        None => &lexical,
    };
    let scorers = Scorers {
        provider,
        priors: &priors,
        edges: edges.as_ref(),
    };
    let pool = pool(cfg)?;
    let results: Vec<DecodeResult> = pool.install(|| {
        corpus
            .processes
            .par_iter()
            .map(|p| Decoder::new(p, scorers, cfg.decoder, cfg.ablation).map(|d| d.decode()))
            .collect::<Result<_, _>>()
    })?;

    let predicted: Vec<ProcessRecord> = corpus
        .processes
        .iter()
        .zip(&results)
        .map(|(p, r)| {
            p.without_gold()
                .with_gold_matrix(r.matrix.clone())
                .and_then(|p| p.with_gold_graph(r.graph.clone()))
                .expect("decoded matrices are consistent")
        })
        .collect();
    let text = write_corpus(predicted.iter().zip(&results).map(|(p, r)| CorpusRecordOut {
        process: p,
        score: Some(r.score),
    }));
    write(&cfg.out.join("predictions.jsonl"), &text)?;

    let warnings = file_provider
        .as_ref()
        .map(FileLogitProvider::coverage_warnings)
        .unwrap_or_default();
    for w in &warnings {
        eprintln!(
            "warning: no logits for ({}, step {}, {}); used the lexical fallback",
            w.process_id, w.step, w.entity
        );
    }
    let mean = if results.is_empty() {
        0.0
    } else {
        results.iter().map(|r| r.score).sum::<f64>() / results.len() as f64
    };
    println!(
        "decoded {} process(es); mean score {mean:.6}; fallback cells {}",
        results.len(),
        warnings.len()
    );
    Ok(EXIT_OK)
}

pub fn eval(cfg: &RunConfig, pred: &Path, gold: Option<&Path>) -> Result<i32, CliError> {
    let gold_path = match gold {
        Some(g) => g,
        None => corpus_path(cfg)?,
    };
    let pred = load_corpus_any(pred)?;
    let gold = load_corpus_any(gold_path)?;
    let (dep, sc) = evaluate_corpora(
        &pred,
        &gold,
        cfg.averaging,
        cfg.task.dependency(),
        cfg.task.statechange(),
    )?;
    if let Some(r) = &dep {
        write(&cfg.out.join("dependency_report.json"), &report_json(r))?;
    }
    if let Some(r) = &sc {
        write(&cfg.out.join("statechange_report.json"), &report_json(r))?;
    }
    let reports: Vec<&EvalReport> = dep.iter().chain(sc.iter()).collect();
    let tsv = summary_tsv(&reports);
    write(&cfg.out.join("eval_summary.tsv"), &tsv)?;
    print!("{tsv}");
    Ok(EXIT_OK)
}

fn report_json(r: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn export_dot(cfg: &RunConfig, id: Option<&str>) -> Result<i32, CliError> {
    let corpus = load(cfg)?;
    let selected: Vec<&ProcessRecord> = match id {
        Some(id) => vec![corpus
            .get(id)
            .ok_or_else(|| CliError::Usage(format!("no process with id `{id}`")))?],
        None => corpus.processes.iter().collect(),
    };
    for p in selected {
        if p.gold_graph().is_none() && p.gold_matrix().is_none() {
            eprintln!("warning: process `{}` has no graph or matrix; skipped", p.id());
            continue;
        }
        let (_, graph) = annotations(p)?;
        write(&cfg.out.join(format!("{}.dot", p.id())), &dot_of(&graph, p))?;
    }
    Ok(EXIT_OK)
}
