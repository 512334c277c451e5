//! Command-line driver.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::decoder::DecodeError;
use crate::eval::EvalError;
use crate::io::IoError;

pub use config::{ConfigError, ProviderSpec, RunConfig, Task};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for validation failures and evaluation key mismatches.
pub const EXIT_INVALID: i32 = 1;
/// Exit status for I/O, parse and configuration failures.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(IoError::Validation(_)) => EXIT_INVALID,
            CliError::Eval(EvalError::ProcessMismatch { .. } | EvalError::InvalidMatrix { .. }) => {
                EXIT_INVALID
            }
            _ => EXIT_ERROR,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "procdep", version, about = "Decode, derive and evaluate state changes and step dependencies in procedural text")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// `key = value` configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Corpus in the canonical JSONL format, or a grid `.tsv` file.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// `lexical` or `file:<logits.tsv>`.
    #[arg(long, global = true)]
    pub provider: Option<String>,
    /// Shorthand for `--provider file:<path>`.
    #[arg(long, global = true)]
    pub logits: Option<PathBuf>,
    #[arg(long, global = true)]
    pub priors: Option<PathBuf>,
    #[arg(long = "edge-scores", global = true)]
    pub edge_scores: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub c: Option<f64>,
    #[arg(long, global = true)]
    pub beam: Option<usize>,
    #[arg(long, global = true)]
    pub cap: Option<usize>,
    /// Drop the purpose term.
    #[arg(long = "no-g-edge", global = true)]
    pub no_g_edge: bool,
    /// Drop the background-knowledge term.
    #[arg(long = "no-g-kb", global = true)]
    pub no_g_kb: bool,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `micro` or `macro`.
    #[arg(long, global = true)]
    pub average: Option<String>,
    /// `both`, `dependency` or `statechange`.
    #[arg(long, global = true)]
    pub task: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every gold matrix against the existence automaton.
    Validate,
    /// Derive dependency graphs from gold matrices.
    Derive {
        /// Also write a Graphviz file per process.
        #[arg(long)]
        dot: bool,
    },
    /// Decode matrices and graphs for every process.
    Decode,
    /// Score predictions against gold annotations.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        /// Defaults to the configured corpus.
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Write the gold graph of one process (or all) as Graphviz.
    ExportDot {
        #[arg(long)]
        id: Option<String>,
    },
}

impl CommonArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let here = std::path::Path::new("");
        let mut set = |k: &str, v: String| {
            cfg.set(k, &v, here).map_err(CliError::Usage)
        };
        if let Some(v) = &self.corpus {
            set("corpus", v.to_string_lossy().into_owned())?;
        }
        if let Some(v) = &self.provider {
            set("provider", v.clone())?;
        }
        if let Some(v) = &self.logits {
            set("logits", v.to_string_lossy().into_owned())?;
        }
        if let Some(v) = &self.priors {
            set("priors", v.to_string_lossy().into_owned())?;
        }
        if let Some(v) = &self.edge_scores {
            set("edge_scores", v.to_string_lossy().into_owned())?;
        }
        for (k, v) in [("lambda", self.lambda), ("alpha", self.alpha), ("beta", self.beta), ("c", self.c)] {
            if let Some(v) = v {
                set(k, v.to_string())?;
            }
        }
        for (k, v) in [("beam", self.beam), ("cap", self.cap), ("jobs", self.jobs)] {
            if let Some(v) = v {
                set(k, v.to_string())?;
            }
        }
        if self.no_g_edge {
            set("g_edge", "false".into())?;
        }
        if self.no_g_kb {
            set("g_kb", "false".into())?;
        }
        if let Some(v) = &self.out {
            set("out", v.to_string_lossy().into_owned())?;
        }
        if let Some(v) = &self.average {
            set("average", v.clone())?;
        }
        if let Some(v) = &self.task {
            set("task", v.clone())?;
        }
        cfg.check()?;
        Ok(cfg)
    }
}

pub fn run_cli(cli: &Cli) -> Result<i32, CliError> {
    let cfg = cli.common.resolve()?;
    match &cli.command {
        Command::Validate => commands::validate(&cfg),
        Command::Derive { dot } => commands::derive(&cfg, *dot),
        Command::Decode => commands::decode(&cfg),
        Command::Eval { pred, gold } => commands::eval(&cfg, pred, gold.as_deref()),
        Command::ExportDot { id } => commands::export_dot(&cfg, id.as_deref()),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
