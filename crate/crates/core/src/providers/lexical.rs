//! Rule-based stand-in for a trained encoder.
//!
//! A cell whose entity is not mentioned is almost surely `None`. When it is
//! mentioned, the first token of the sentence found in a verb lexicon decides
//! which change kind gets the bulk of the mass.

use crate::io::LogitsRecord;
use crate::mention::{mentions, tokenize};
use crate::model::{ChangeKind, ProcessRecord};

use super::LogitProvider;

const CREATE_VERBS: &[&str] = &[
    "create", "form", "produce", "make", "generate", "combine", "build", "develop",
];
const MOVE_VERBS: &[&str] = &[
    "move", "flow", "enter", "absorb", "travel", "carry", "go", "fall", "rise", "pass",
    "transport", "reach", "wash",
];
const DESTROY_VERBS: &[&str] = &[
    "destroy", "consume", "break", "burn", "eat", "die", "dissolve", "decompose",
];

const ARTICLES: &[&str] = &["the", "a", "an"];

#[derive(Debug, Clone, PartialEq)]
pub struct LexicalConfig {
    /// Mass on the kind whose lexicon fired.
    pub hit: f64,
    /// Mass on each other kind when a lexicon fired.
    pub hit_other: f64,
    /// `None` mass when the entity is not mentioned.
    pub unmentioned_none: f64,
    pub unmentioned_other: f64,
    /// `None` mass when the entity is mentioned but no lexicon fired.
    pub plain_none: f64,
    pub plain_other: f64,
    pub create_verbs: Vec<String>,
    pub move_verbs: Vec<String>,
    pub destroy_verbs: Vec<String>,
}

impl Default for LexicalConfig {
    fn default() -> Self {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        LexicalConfig {
            hit: 0.70,
            hit_other: 0.10,
            unmentioned_none: 0.94,
            unmentioned_other: 0.02,
            plain_none: 0.55,
            plain_other: 0.15,
            create_verbs: own(CREATE_VERBS),
            move_verbs: own(MOVE_VERBS),
            destroy_verbs: own(DESTROY_VERBS),
        }
    }
}

impl LexicalConfig {
    pub fn kind_of(&self, lemma: &str) -> Option<ChangeKind> {
        let has = |v: &[String]| v.iter().any(|w| w == lemma);
        if has(&self.create_verbs) {
            Some(ChangeKind::Create)
        } else if has(&self.move_verbs) {
            Some(ChangeKind::Move)
        } else if has(&self.destroy_verbs) {
            Some(ChangeKind::Destroy)
        } else {
            None
        }
    }

    fn in_lexicon(&self, w: &str) -> bool {
        self.kind_of(w).is_some()
    }
}

/// Naive suffix stripping (`-s`, `-es`, `-ed`, `-ing`), preferring a form
/// that appears in a lexicon; otherwise the token itself.
pub fn lemma(token: &str, config: &LexicalConfig) -> String {
    let t = token.to_lowercase();
    let mut candidates = vec![t.clone()];
    for suffix in ["s", "es", "ed", "d", "ing"] {
        if let Some(stem) = t.strip_suffix(suffix) {
            if !stem.is_empty() {
                candidates.push(stem.to_string());
            }
        }
    }
    if let Some(stem) = t.strip_suffix("ing") {
        candidates.push(format!("{stem}e"));
    }
    candidates
        .iter()
        .find(|c| config.in_lexicon(c))
        .cloned()
        .unwrap_or(t)
}

/// First token whose lemma is in a lexicon; otherwise the first token.
pub fn main_verb(sentence: &str, config: &LexicalConfig) -> Option<String> {
    let tokens = tokenize(sentence);
    tokens
        .iter()
        .map(|t| lemma(t, config))
        .find(|l| config.in_lexicon(l))
        .or_else(|| tokens.first().cloned())
}

fn token_after(tokens: &[String], markers: &[&str]) -> Option<String> {
    let i = tokens.iter().position(|t| markers.contains(&t.as_str()))?;
    tokens[i + 1..]
        .iter()
        .find(|t| !ARTICLES.contains(&t.as_str()))
        .cloned()
}

pub fn lexical_logits(
    process: &ProcessRecord,
    step: usize,
    entity: usize,
    config: &LexicalConfig,
) -> LogitsRecord {
    let sentence = process.step(step);
    let e = &process.entities()[entity];
    let mut probs;
    let mut from_loc = None;
    let mut to_loc = None;
    if !mentions(sentence, e) {
        probs = [config.unmentioned_other; 4];
        probs[ChangeKind::None.index()] = config.unmentioned_none;
    } else {
        let fired = main_verb(sentence, config).and_then(|v| config.kind_of(&v));
        match fired {
            Some(kind) => {
                probs = [config.hit_other; 4];
                probs[kind.index()] = config.hit;
            }
            None => {
                probs = [config.plain_other; 4];
                probs[ChangeKind::None.index()] = config.plain_none;
            }
        }
        let tokens = tokenize(sentence);
        from_loc = token_after(&tokens, &["from"]);
        to_loc = token_after(&tokens, &["to", "into", "in"]);
    }
    LogitsRecord::from_probs(process.id(), step, e.name(), probs).with_locations(from_loc, to_loc)
}

#[derive(Debug, Clone, Default)]
pub struct LexicalProvider {
    pub config: LexicalConfig,
}

impl LexicalProvider {
    pub fn new(config: LexicalConfig) -> Self {
        LexicalProvider { config }
    }
}

impl LogitProvider for LexicalProvider {
    fn logits(&self, process: &ProcessRecord, step: usize, entity: usize) -> LogitsRecord {
        lexical_logits(process, step, entity, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Entity;

    fn one(sentence: &str, entity: &str) -> LogitsRecord {
        let p = ProcessRecord::new(
            "p",
            "t",
            vec![sentence.to_string()],
            vec![Entity::parse(entity).unwrap()],
        )
        .unwrap();
        lexical_logits(&p, 1, 0, &LexicalConfig::default())
    }

    #[test]
    fn absorb_moves_water() {
        let r = one("Roots absorb water from soil", "water");
        assert_eq!(r.argmax(), ChangeKind::Move);
        assert_eq!(r.from_loc.as_deref(), Some("soil"));
        assert!((r.logp(ChangeKind::Move) - 0.7f64.ln()).abs() < 1e-12);
        assert!(r.is_normalized());
    }

    #[test]
    fn unmentioned_is_none() {
        let r = one("Mixture forms sugar", "water");
        assert_eq!(r.argmax(), ChangeKind::None);
        assert!((r.logp(ChangeKind::None) - 0.94f64.ln()).abs() < 1e-12);
        assert!((r.logp(ChangeKind::Create) - 0.02f64.ln()).abs() < 1e-12);
        assert_eq!(r.from_loc, None);
    }

    #[test]
    fn forms_creates_sugar() {
        assert_eq!(one("Mixture forms sugar", "sugar").argmax(), ChangeKind::Create);
    }

    #[test]
    fn mentioned_without_rule() {
        let r = one("The sugar is sweet", "sugar");
        assert_eq!(r.argmax(), ChangeKind::None);
        assert!((r.logp(ChangeKind::None) - 0.55f64.ln()).abs() < 1e-12);
        assert!((r.logp(ChangeKind::Move) - 0.15f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn to_location_skips_article() {
        let r = one("The water flows to the leaf", "water");
        assert_eq!(r.argmax(), ChangeKind::Move);
        assert_eq!(r.to_loc.as_deref(), Some("leaf"));
    }

    #[test]
    fn verb_extraction() {
        let c = LexicalConfig::default();
        assert_eq!(main_verb("The light, water, and CO2 combine into a mixture.", &c).as_deref(), Some("combine"));
        assert_eq!(main_verb("Water goes down", &c).as_deref(), Some("go"));
        assert_eq!(main_verb("The rock was breaking", &c).as_deref(), Some("break"));
        assert_eq!(main_verb("Nothing here", &c).as_deref(), Some("nothing"));
        assert_eq!(lemma("flowed", &c), "flow");
        assert_eq!(lemma("produces", &c), "produce");
    }
}
