use std::collections::BTreeSet;
use std::sync::Mutex;

use crate::io::{LogitsRecord, LogitsTable};
use crate::model::ProcessRecord;

use super::{LexicalProvider, LogitProvider};

/// A cell the logits file did not cover.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MissingKey {
    pub process_id: String,
    pub step: usize,
    pub entity: String,
}

/// Serves records from a loaded logits file and delegates missing cells to a
/// fallback provider, remembering each miss.
pub struct FileLogitProvider {
    table: LogitsTable,
    fallback: Box<dyn LogitProvider>,
    missing: Mutex<BTreeSet<MissingKey>>,
}

impl FileLogitProvider {
    pub fn new(table: LogitsTable) -> Self {
        Self::with_fallback(table, Box::new(LexicalProvider::default()))
    }

    pub fn with_fallback(table: LogitsTable, fallback: Box<dyn LogitProvider>) -> Self {
        FileLogitProvider {
            table,
            fallback,
            missing: Mutex::new(BTreeSet::new()),
        }
    }

    pub fn table(&self) -> &LogitsTable {
        &self.table
    }

    /// Distinct cells served by the fallback so far, in sorted order.
    pub fn coverage_warnings(&self) -> Vec<MissingKey> {
        self.missing
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .cloned()
            .collect()
    }
}

impl LogitProvider for FileLogitProvider {
    fn logits(&self, process: &ProcessRecord, step: usize, entity: usize) -> LogitsRecord {
        let e = &process.entities()[entity];
        let hit = e
            .aliases()
            .iter()
            .find_map(|a| self.table.get(process.id(), step, a));
        if let Some(r) = hit {
            return r.clone();
        }
        self.missing
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(MissingKey {
                process_id: process.id().to_string(),
                step,
                entity: e.name().to_string(),
            });
        self.fallback.logits(process, step, entity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChangeKind, Entity};
    use crate::providers::{lexical_logits, LexicalConfig};

    fn process() -> ProcessRecord {
        ProcessRecord::new(
            "p1",
            "photosynthesis",
            vec!["Roots absorb water.".into(), "The water flows to the leaf.".into()],
            vec![Entity::new("water").unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn present_key_verbatim_missing_key_falls_back() {
        let stored = LogitsRecord::from_probs("p1", 2, "water", [0.9, 0.05, 0.03, 0.02])
            .with_locations(None, Some("leaf".into()));
        let stored = LogitsRecord {
            logp: [0.03f64.ln(), 0.9f64.ln(), 0.05f64.ln(), 0.02f64.ln()],
            ..stored
        };
        let provider = FileLogitProvider::new([stored.clone()].into_iter().collect());
        let p = process();

        let got = provider.logits(&p, 2, 0);
        assert_eq!(got, stored);
        assert_eq!(got.argmax(), ChangeKind::Move);
        assert!(provider.coverage_warnings().is_empty());

        let fb = provider.logits(&p, 1, 0);
        assert_eq!(fb, lexical_logits(&p, 1, 0, &LexicalConfig::default()));
        let w = provider.coverage_warnings();
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].process_id.as_str(), w[0].step), ("p1", 1));
    }
}
