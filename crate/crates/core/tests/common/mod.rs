//! Random instances and an independent brute-force reference decoder.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use procdep::decoder::{Ablation, DecoderConfig, Scorers};
use procdep::io::{LogitsRecord, LogitsTable};
use procdep::model::{ChangeKind, Entity, ProcessRecord};
use procdep::providers::{
    EdgeCandidate, EdgeScorer, FileLogitProvider, LexicalProvider, TopicPriorTable,
};
use rand::Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub const NAMES: [&str; 5] = ["ant", "bee", "cat", "dog", "elk"];
const FILLER: [&str; 4] = ["the", "moves", "into", "box"];
pub const TOPIC: &str = "random topic";

/// Scores keyed by `(source step, entity, kind)`.
pub struct GridEdgeScorer {
    pub scores: HashMap<(usize, String, ChangeKind), f64>,
}

impl EdgeScorer for GridEdgeScorer {
    fn score(&self, edge: &EdgeCandidate<'_>) -> f64 {
        self.scores[&(edge.src_step, edge.entity.name().to_string(), edge.change.kind())]
    }
}

pub struct Instance {
    pub process: ProcessRecord,
    /// `probs[t][j]`, normalized, ordered Create, Move, Destroy, None.
    pub probs: Vec<Vec<[f64; 4]>>,
    /// `prior[j][k]`.
    pub prior: Vec<[f64; 4]>,
    /// `edge[t][j][k]`.
    pub edge: Vec<Vec<[f64; 4]>>,
    /// `mentioned[t][j]`.
    pub mentioned: Vec<Vec<bool>>,
    pub provider: FileLogitProvider,
    pub priors: TopicPriorTable,
    pub scorer: GridEdgeScorer,
}

impl Instance {
    pub fn scorers(&self) -> Scorers<'_> {
        Scorers {
            provider: &self.provider,
            priors: &self.priors,
            edges: &self.scorer,
        }
    }
}

pub fn random_instance<R: Rng>(rng: &mut R, steps: usize, entities: usize) -> Instance {
    let names: Vec<&str> = NAMES[..entities].to_vec();
    let mut mentioned = Vec::new();
    let mut sentences = Vec::new();
    for _ in 0..steps {
        let mut words = vec![FILLER[rng.gen_range(0..FILLER.len())]];
        let mut row = Vec::new();
        for &n in &names {
            let m = rng.gen_bool(0.5);
            if m {
                words.push(n);
            }
            words.push(FILLER[rng.gen_range(0..FILLER.len())]);
            row.push(m);
        }
        mentioned.push(row);
        sentences.push(words.join(" "));
    }
    let process = ProcessRecord::new(
        "rand",
        TOPIC,
        sentences,
        names.iter().map(|n| Entity::new(*n).unwrap()).collect(),
    )
    .unwrap();

    let simplex = |rng: &mut R| {
        let raw: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.01..1.0));
        let s: f64 = raw.iter().sum();
        raw.map(|x| x / s)
    };
    let probs: Vec<Vec<[f64; 4]>> = (0..steps)
        .map(|_| (0..entities).map(|_| simplex(rng)).collect())
        .collect();
    let prior: Vec<[f64; 4]> = (0..entities)
        .map(|_| std::array::from_fn(|_| rng.gen_range(0.05..1.0)))
        .collect();
    let edge: Vec<Vec<[f64; 4]>> = (0..steps)
        .map(|_| {
            (0..entities)
                .map(|_| std::array::from_fn(|_| rng.gen_range(0.0..=1.0)))
                .collect()
        })
        .collect();

    let mut table = LogitsTable::new();
    let mut priors = TopicPriorTable::new();
    let mut scores = HashMap::new();
    for (j, name) in names.iter().enumerate() {
        for k in ChangeKind::ALL {
            priors.insert(TOPIC, name, k, prior[j][k.index()]).unwrap();
        }
        for t in 0..steps {
            table.insert(LogitsRecord::from_probs("rand", t + 1, *name, probs[t][j]));
            for k in ChangeKind::ALL {
                scores.insert((t + 1, name.to_string(), k), edge[t][j][k.index()]);
            }
        }
    }
    Instance {
        process,
        probs,
        prior,
        edge,
        mentioned,
        provider: FileLogitProvider::with_fallback(table, Box::new(LexicalProvider::default())),
        priors,
        scorer: GridEdgeScorer { scores },
    }
}

/// 0 = unknown, 1 = exists, 2 = destroyed; kinds 0..4 = C, M, D, None.
pub fn step_state(state: u8, kind: usize) -> Option<u8> {
    match (state, kind) {
        (_, 3) => Some(state),
        (0, 0) | (0, 1) | (1, 1) | (2, 0) => Some(1),
        (0, 2) | (1, 2) => Some(2),
        _ => None,
    }
}

pub fn consistent(rows: &[Vec<ChangeKind>]) -> bool {
    let n = rows.first().map_or(0, Vec::len);
    (0..n).all(|j| {
        let mut s = 0u8;
        rows.iter().all(|r| match step_state(s, r[j].index()) {
            Some(next) => {
                s = next;
                true
            }
            None => false,
        })
    })
}

fn next_mention(inst: &Instance, t: usize, j: usize) -> Option<usize> {
    (t + 1..inst.mentioned.len()).find(|&u| inst.mentioned[u][j])
}

/// Score of a full kind matrix written directly from the objective's
/// definition (0-based `t` here).
pub fn oracle_score(inst: &Instance, rows: &[Vec<ChangeKind>], cfg: &DecoderConfig, ab: Ablation) -> f64 {
    let mut total = 0.0;
    for (t, row) in rows.iter().enumerate() {
        let (mut f, mut ge, mut gk) = (0.0, 0.0, 0.0);
        for (j, kind) in row.iter().enumerate() {
            let k = kind.index();
            f += cfg.alpha * inst.probs[t][j][k].ln() + (1.0 - cfg.alpha) * inst.prior[j][k].ln();
            let next = next_mention(inst, t, j);
            let sp = match (next, *kind) {
                (None, _) => 0.0,
                (Some(_), ChangeKind::None) => -cfg.c,
                _ => cfg.c,
            };
            ge += (1.0 + sp).ln();
            if next.is_some() && *kind != ChangeKind::None {
                gk += (1.0 + inst.edge[t][j][k]).ln();
            }
        }
        let ge = if ab.use_g_edge { ge } else { 0.0 };
        let gk = if ab.use_g_kb { gk } else { 0.0 };
        total += cfg.lambda * f + (1.0 - cfg.lambda) * (cfg.beta * ge + (1.0 - cfg.beta) * gk);
    }
    total
}

/// Best consistent matrix by brute force; exact ties go to the smaller
/// row-major kind tuple.
pub fn oracle_decode(inst: &Instance, cfg: &DecoderConfig, ab: Ablation) -> (Vec<Vec<ChangeKind>>, f64) {
    let t_max = inst.probs.len();
    let n = inst.probs[0].len();
    let cells = t_max * n;
    let mut best: Option<(Vec<Vec<ChangeKind>>, f64)> = None;
    for code in 0..4usize.pow(cells as u32) {
        let mut digits = Vec::with_capacity(cells);
        let mut c = code;
        for _ in 0..cells {
            digits.push(ChangeKind::ALL[c % 4]);
            c /= 4;
        }
        digits.reverse();
        let rows: Vec<Vec<ChangeKind>> = digits.chunks(n).map(|r| r.to_vec()).collect();
        if !consistent(&rows) {
            continue;
        }
        let s = oracle_score(inst, &rows, cfg, ab);
        // Enumeration is in increasing tuple order, so only a strictly
        // better score replaces the incumbent.
        if best.as_ref().is_none_or(|(_, b)| s > *b + 1e-12) {
            best = Some((rows, s));
        }
    }
    best.unwrap()
}

pub fn kinds_of(m: &procdep::model::StateChangeMatrix) -> Vec<Vec<ChangeKind>> {
    m.rows().iter().map(|r| r.iter().map(|c| c.kind()).collect()).collect()
}
