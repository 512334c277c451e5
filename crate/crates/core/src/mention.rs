//! Lexical entity-mention matching.
//!
//! Matching is purely surface-level: tokens are split on non-alphanumeric
//! boundaries, lowercased, and compared after dropping one trailing `s`.
//! There is no coreference, ellipsis or bridging resolution.

use crate::model::{Entity, ProcessRecord};

pub fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

pub fn tokenize(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn strip_plural(token: &str) -> &str {
    match token.strip_suffix('s') {
        Some(stem) if !stem.is_empty() => stem,
        _ => token,
    }
}

fn tokens_match(a: &str, b: &str) -> bool {
    strip_plural(a) == strip_plural(b)
}

/// True iff some alias of `entity` occurs as a contiguous token run in
/// `sentence`.
pub fn mentions(sentence: &str, entity: &Entity) -> bool {
    let words = tokenize(sentence);
    entity.aliases().iter().any(|alias| {
        let needle = tokenize(alias);
        !needle.is_empty()
            && words.len() >= needle.len()
            && words
                .windows(needle.len())
                .any(|w| w.iter().zip(&needle).all(|(a, b)| tokens_match(a, b)))
    })
}

/// Smallest step `j > after_step` whose sentence mentions `entity`.
/// Steps are 1-based.
pub fn next_mention(process: &ProcessRecord, after_step: usize, entity: &Entity) -> Option<usize> {
    (after_step + 1..=process.num_steps()).find(|&j| mentions(process.step(j), entity))
}
