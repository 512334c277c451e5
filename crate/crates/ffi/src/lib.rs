//! C interface to the `procdep` decoder.
//!
//! Every function returns a [`ProcdepStatus`]; on failure a description is
//! available from [`procdep_last_error_message`] on the same thread. Objects
//! are opaque handles released by their matching `_free` function, and
//! strings returned through out-parameters are released with
//! [`procdep_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use procdep::decoder::{Ablation, DecodeError, DecodeResult, Decoder, DecoderConfig, Scorers};
use procdep::depgraph::{derive_graph, DeriveMode};
use procdep::eval::{evaluate_corpora, Averaging, EvalError, EvalReport};
use procdep::io::{
    export_dot, graph_to_json, load_corpus_any, load_logits, process_to_json, CorpusFile, IoError,
};
use procdep::model::{apply_change, ChangeKind, ExistenceState, ProcessRecord};
use procdep::providers::{
    load_edge_scores, load_priors, ConstantEdgeScorer, EdgeScorer, FileLogitProvider,
    LexicalProvider, LogitProvider, TopicPriorTable, DEFAULT_EDGE_SCORE,
};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcdepStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    /// Annotations violate the existence automaton or reference unknown
    /// entities or steps.
    Validation = 5,
    /// Hyperparameters out of range.
    Config = 6,
    /// Prediction and gold corpora hold different process ids.
    Mismatch = 7,
    /// An index or enum value is out of range.
    OutOfRange = 8,
    /// Internal panic; the message holds the panic payload.
    Panic = 9,
}

/// Existence of an entity, as folded over a matrix column.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcdepExistence {
    Unknown = 0,
    Exists = 1,
    Destroyed = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcdepChangeKind {
    Create = 0,
    Move = 1,
    Destroy = 2,
    None = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcdepDecoderConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub beam_width: usize,
    pub candidate_cap: usize,
    pub use_g_edge: bool,
    pub use_g_kb: bool,
}

/// Overall scores of one evaluation task.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProcdepScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

/// A loaded corpus.
pub struct ProcdepCorpus {
    corpus: CorpusFile,
}

/// Logit provider, topic priors and edge scores used by the decoder.
pub struct ProcdepResources {
    provider: Box<dyn LogitProvider>,
    priors: TopicPriorTable,
    edges: Box<dyn EdgeScorer>,
}

/// One decoded process.
pub struct ProcdepResult {
    process: ProcessRecord,
    result: DecodeResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ProcdepStatus, String);

impl Failure {
    fn null(name: &str) -> Self {
        Failure(ProcdepStatus::NullArgument, format!("`{name}` is null"))
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let status = match &e {
            IoError::Io { .. } => ProcdepStatus::Io,
            IoError::Validation(_) => ProcdepStatus::Validation,
            _ => ProcdepStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

impl From<DecodeError> for Failure {
    fn from(e: DecodeError) -> Self {
        let status = match &e {
            DecodeError::Config(_) => ProcdepStatus::Config,
            DecodeError::TooLarge { .. } => ProcdepStatus::OutOfRange,
        };
        Failure(status, e.to_string())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let status = match &e {
            EvalError::ProcessMismatch { .. } => ProcdepStatus::Mismatch,
            _ => ProcdepStatus::Validation,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, records any failure or panic, and maps it to a status.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> ProcdepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ProcdepStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {message}"));
            ProcdepStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    let s = str_arg(p, name)?;
    Ok(PathBuf::from(s))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ProcdepStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn opt_path_arg(p: *const c_char, name: &str) -> Result<Option<PathBuf>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        path_arg(p, name).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(name))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| {
        Failure(
            ProcdepStatus::Parse,
            "output contains an interior NUL byte".into(),
        )
    })?;
    write_out(out, c.into_raw(), "out")
}

fn process(corpus: &ProcdepCorpus, index: usize) -> Result<&ProcessRecord, Failure> {
    corpus.corpus.processes.get(index).ok_or_else(|| {
        Failure(
            ProcdepStatus::OutOfRange,
            format!(
                "process index {index} out of range (corpus holds {})",
                corpus.corpus.len()
            ),
        )
    })
}

impl From<ProcdepDecoderConfig> for (DecoderConfig, Ablation) {
    fn from(c: ProcdepDecoderConfig) -> Self {
        (
            DecoderConfig {
                lambda: c.lambda,
                alpha: c.alpha,
                beta: c.beta,
                c: c.c,
                beam_width: c.beam_width,
                candidate_cap: c.candidate_cap,
            },
            Ablation {
                use_g_edge: c.use_g_edge,
                use_g_kb: c.use_g_kb,
            },
        )
    }
}

impl From<&EvalReport> for ProcdepScores {
    fn from(r: &EvalReport) -> Self {
        ProcdepScores {
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            matched: r.counts.matched,
            predicted: r.counts.predicted,
            gold: r.counts.gold,
        }
    }
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn procdep_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn procdep_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn procdep_decoder_config_default() -> ProcdepDecoderConfig {
    let d = DecoderConfig::default();
    ProcdepDecoderConfig {
        lambda: d.lambda,
        alpha: d.alpha,
        beta: d.beta,
        c: d.c,
        beam_width: d.beam_width,
        candidate_cap: d.candidate_cap,
        use_g_edge: true,
        use_g_kb: true,
    }
}

/// Loads a JSONL corpus (or a grid `.tsv`) and validates its annotations.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn procdep_corpus_load(
    path: *const c_char,
    out: *mut *mut ProcdepCorpus,
) -> ProcdepStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let corpus = load_corpus_any(&path)?;
        write_out(
            out,
            Box::into_raw(Box::new(ProcdepCorpus { corpus })),
            "out",
        )
    })
}

/// Number of processes, or 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn procdep_corpus_len(corpus: *const ProcdepCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.corpus.len())
}

/// Id of the process at `index`, as a string owned by the caller.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn procdep_corpus_process_id(
    corpus: *const ProcdepCorpus,
    index: usize,
    out: *mut *mut c_char,
) -> ProcdepStatus {
    guard(|| {
        let p = process(handle(corpus, "corpus")?, index)?;
        write_string(out, p.id().to_string())
    })
}

/// # Safety
/// `corpus` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn procdep_corpus_free(corpus: *mut ProcdepCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Builds decoding resources. Each path may be null: no `logits` selects
/// the lexical provider, no `priors` an empty table and no `edge_scores` a
/// constant score for every edge.
///
/// # Safety
/// Non-null paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn procdep_resources_new(
    logits: *const c_char,
    priors: *const c_char,
    edge_scores: *const c_char,
    out: *mut *mut ProcdepResources,
) -> ProcdepStatus {
    guard(|| {
        let provider: Box<dyn LogitProvider> = match opt_path_arg(logits, "logits")? {
            Some(p) => Box::new(FileLogitProvider::new(load_logits(&p)?)),
            None => Box::new(LexicalProvider::default()),
        };
        let priors = match opt_path_arg(priors, "priors")? {
            Some(p) => load_priors(&p)?,
            None => TopicPriorTable::new(),
        };
        let edges: Box<dyn EdgeScorer> = match opt_path_arg(edge_scores, "edge_scores")? {
            Some(p) => Box::new(load_edge_scores(&p)?),
            None => Box::new(ConstantEdgeScorer(DEFAULT_EDGE_SCORE)),
        };
        let r = ProcdepResources {
            provider,
            priors,
            edges,
        };
        write_out(out, Box::into_raw(Box::new(r)), "out")
    })
}

/// # Safety
/// `resources` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn procdep_resources_free(resources: *mut ProcdepResources) {
    if !resources.is_null() {
        drop(Box::from_raw(resources));
    }
}

/// Decodes the process at `index`. A null `config` uses the defaults.
///
/// # Safety
/// Handles must be live; `config` must be null or readable; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn procdep_decode(
    corpus: *const ProcdepCorpus,
    index: usize,
    resources: *const ProcdepResources,
    config: *const ProcdepDecoderConfig,
    out: *mut *mut ProcdepResult,
) -> ProcdepStatus {
    guard(|| {
        let p = process(handle(corpus, "corpus")?, index)?;
        let res = handle(resources, "resources")?;
        let cfg = config
            .as_ref()
            .copied()
            .unwrap_or_else(|| procdep_decoder_config_default());
        let (cfg, ablation) = cfg.into();
        let scorers = Scorers {
            provider: res.provider.as_ref(),
            priors: &res.priors,
            edges: res.edges.as_ref(),
        };
        let result = Decoder::new(p, scorers, cfg, ablation)?.decode();
        let r = ProcdepResult {
            process: p.without_gold(),
            result,
        };
        write_out(out, Box::into_raw(Box::new(r)), "out")
    })
}

/// Total score of the decoded path, or NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn procdep_result_score(result: *const ProcdepResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.result.score)
}

/// The decoded process as one canonical JSONL record, with the predicted
/// matrix and graph in the gold fields.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn procdep_result_to_json(
    result: *const ProcdepResult,
    out: *mut *mut c_char,
) -> ProcdepStatus {
    guard(|| {
        let r = handle(result, "result")?;
        let annotated = r
            .process
            .clone()
            .with_gold_matrix(r.result.matrix.clone())
            .and_then(|p| p.with_gold_graph(r.result.graph.clone()))
            .map_err(|e| Failure(ProcdepStatus::Validation, e.to_string()))?;
        write_string(out, process_to_json(&annotated, Some(r.result.score)))
    })
}

/// The decoded dependency graph in Graphviz format.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn procdep_result_dot(
    result: *const ProcdepResult,
    out: *mut *mut c_char,
) -> ProcdepStatus {
    guard(|| {
        let r = handle(result, "result")?;
        write_string(out, export_dot(&r.result.graph, &r.process))
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn procdep_result_free(result: *mut ProcdepResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Dependency graph derived from the gold matrix of the process at `index`,
/// as a JSON array of edges.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn procdep_derive_graph_json(
    corpus: *const ProcdepCorpus,
    index: usize,
    out: *mut *mut c_char,
) -> ProcdepStatus {
    guard(|| {
        let p = process(handle(corpus, "corpus")?, index)?;
        let m = p.gold_matrix().ok_or_else(|| {
            Failure(
                ProcdepStatus::Validation,
                format!("process `{}` has no gold matrix", p.id()),
            )
        })?;
        let g = derive_graph(p, m, DeriveMode::MentionOrChange)
            .map_err(|e| Failure(ProcdepStatus::Validation, e.to_string()))?;
        write_string(out, graph_to_json(&g))
    })
}

/// Scores predictions against gold annotations. Either output pointer may
/// be null to skip that task. `report_json`, when non-null, receives both
/// reports with per-category and per-process detail.
///
/// # Safety
/// Paths must be NUL-terminated strings; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn procdep_eval(
    pred: *const c_char,
    gold: *const c_char,
    macro_average: bool,
    dependency: *mut ProcdepScores,
    state_change: *mut ProcdepScores,
    report_json: *mut *mut c_char,
) -> ProcdepStatus {
    guard(|| {
        let pred = load_corpus_any(&path_arg(pred, "pred")?)?;
        let gold = load_corpus_any(&path_arg(gold, "gold")?)?;
        let averaging = if macro_average {
            Averaging::Macro
        } else {
            Averaging::Micro
        };
        let want_reports = !report_json.is_null();
        let (dep, sc) = evaluate_corpora(
            &pred,
            &gold,
            averaging,
            want_reports || !dependency.is_null(),
            want_reports || !state_change.is_null(),
        )?;
        if let (Some(r), false) = (&dep, dependency.is_null()) {
            dependency.write(r.into());
        }
        if let (Some(r), false) = (&sc, state_change.is_null()) {
            state_change.write(r.into());
        }
        if want_reports {
            let json = serde_json::json!({ "dependency": dep, "state_change": sc });
            write_string(report_json, json.to_string())?;
        }
        Ok(())
    })
}

/// Existence after applying `change` in `state`, both given as the integer
/// values of [`ProcdepExistence`] and [`ProcdepChangeKind`]. Inconsistent
/// transitions return `Validation`; unknown values return `OutOfRange`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn procdep_apply_change(
    state: u32,
    change: u32,
    out: *mut ProcdepExistence,
) -> ProcdepStatus {
    guard(|| {
        let bad = |what: &str, v: u32| {
            Failure(
                ProcdepStatus::OutOfRange,
                format!("invalid {what} value {v}"),
            )
        };
        let state = match state {
            0 => ExistenceState::Unknown,
            1 => ExistenceState::Exists,
            2 => ExistenceState::Destroyed,
            v => return Err(bad("existence", v)),
        };
        let change = match change {
            0 => ChangeKind::Create,
            1 => ChangeKind::Move,
            2 => ChangeKind::Destroy,
            3 => ChangeKind::None,
            v => return Err(bad("change kind", v)),
        };
        let next = apply_change(state, change)
            .map_err(|e| Failure(ProcdepStatus::Validation, e.to_string()))?;
        let next = match next {
            ExistenceState::Unknown => ProcdepExistence::Unknown,
            ExistenceState::Exists => ProcdepExistence::Exists,
            ExistenceState::Destroyed => ProcdepExistence::Destroyed,
        };
        write_out(out, next, "out")
    })
}
