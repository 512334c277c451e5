//! Run configuration: defaults, then a `key = value` file, then flags.
//!
//! Recognized keys: `corpus`, `provider` (`lexical` or `file:<path>`),
//! `logits`, `priors`, `edge_scores`, `lambda`, `alpha`, `beta`, `c`,
//! `beam`, `cap`, `g_edge`, `g_kb`, `jobs`, `out`, `average`
//! (`micro`/`macro`) and `task` (`both`/`dependency`/`statechange`).
//! Relative paths in a file are resolved against the file's directory.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::decoder::{Ablation, DecoderConfig};
use crate::eval::Averaging;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ProviderSpec {
    #[default]
    Lexical,
    File(PathBuf),
}

impl FromStr for ProviderSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("lexical") {
            Ok(ProviderSpec::Lexical)
        } else if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                Err("`file:` provider needs a path".into())
            } else {
                Ok(ProviderSpec::File(PathBuf::from(path)))
            }
        } else {
            Err(format!("unknown provider `{s}` (expected `lexical` or `file:<path>`)"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Task {
    #[default]
    Both,
    Dependency,
    StateChange,
}

impl Task {
    pub fn dependency(self) -> bool {
        matches!(self, Task::Both | Task::Dependency)
    }

    pub fn statechange(self) -> bool {
        matches!(self, Task::Both | Task::StateChange)
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "both" | "all" => Ok(Task::Both),
            "dependency" => Ok(Task::Dependency),
            "statechange" | "state-change" => Ok(Task::StateChange),
            other => Err(format!("unknown task `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub provider: ProviderSpec,
    pub priors: Option<PathBuf>,
    pub edge_scores: Option<PathBuf>,
    pub decoder: DecoderConfig,
    pub ablation: Ablation,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub averaging: Averaging,
    pub task: Task,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            provider: ProviderSpec::Lexical,
            priors: None,
            edge_scores: None,
            decoder: DecoderConfig::default(),
            ablation: Ablation::FULL,
            out: PathBuf::from("out"),
            jobs: None,
            averaging: Averaging::Micro,
            task: Task::Both,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}` expects a number, got `{value}`"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("`{key}` expects true or false, got `{value}`")),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, base)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str, base: &Path) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Line {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value.trim(), base)
                .map_err(|message| ConfigError::Line {
                    line: i + 1,
                    message,
                })?;
        }
        Ok(())
    }

    /// Sets one key; relative paths are joined onto `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), String> {
        let path = |v: &str| base.join(v);
        match key {
            "corpus" => self.corpus = Some(path(value)),
            "provider" => {
                self.provider = match value.parse()? {
                    ProviderSpec::File(p) => ProviderSpec::File(path(&p.to_string_lossy())),
                    other => other,
                }
            }
            "logits" => self.provider = ProviderSpec::File(path(value)),
            "priors" => self.priors = Some(path(value)),
            "edge_scores" => self.edge_scores = Some(path(value)),
            "lambda" => self.decoder.lambda = parse_num(key, value)?,
            "alpha" => self.decoder.alpha = parse_num(key, value)?,
            "beta" => self.decoder.beta = parse_num(key, value)?,
            "c" => self.decoder.c = parse_num(key, value)?,
            "beam" => self.decoder.beam_width = parse_num(key, value)?,
            "cap" => self.decoder.candidate_cap = parse_num(key, value)?,
            "g_edge" => self.ablation.use_g_edge = parse_bool(key, value)?,
            "g_kb" => self.ablation.use_g_kb = parse_bool(key, value)?,
            "jobs" => self.jobs = Some(parse_num(key, value)?),
            "out" => self.out = path(value),
            "average" => self.averaging = value.parse()?,
            "task" => self.task = value.parse()?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Hyperparameter bounds and existence of every referenced input file.
    pub fn check(&self) -> Result<(), ConfigError> {
        self.decoder
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.jobs == Some(0) {
            return Err(ConfigError::Invalid("jobs must be at least 1".into()));
        }
        let mut paths: Vec<&Path> = Vec::new();
        paths.extend(self.corpus.as_deref());
        paths.extend(self.priors.as_deref());
        paths.extend(self.edge_scores.as_deref());
        if let ProviderSpec::File(p) = &self.provider {
            paths.push(p);
        }
        for p in paths {
            if !p.exists() {
                return Err(ConfigError::Invalid(format!("{}: file not found", p.display())));
            }
        }
        Ok(())
    }
}
