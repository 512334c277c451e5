//! Best-first enumeration of one step's assignments by state-change score.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::model::ChangeKind;

use super::quantize;

struct Item {
    q: i64,
    kinds: Vec<ChangeKind>,
    idx: Vec<usize>,
}

impl Ord for Item {
    // Max-heap: higher score first, then the smaller kind tuple.
    fn cmp(&self, other: &Self) -> Ordering {
        self.q.cmp(&other.q).then_with(|| other.kinds.cmp(&self.kinds))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Item {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Item {}

/// The `cap` assignments with the highest total score, where `options[j]`
/// lists entity `j`'s allowed kinds with their per-cell scores.
///
/// Ranking uses the same quantized key as the beam, so assignments tied at
/// the cutoff are resolved by the kind tuple rather than by heap order.
pub(crate) fn k_best(options: &[Vec<(ChangeKind, f64)>], cap: usize) -> Vec<Vec<ChangeKind>> {
    if cap == 0 || options.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let sorted: Vec<Vec<(ChangeKind, f64)>> = options
        .iter()
        .map(|o| {
            let mut o = o.clone();
            o.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            o
        })
        .collect();
    let make = |idx: Vec<usize>| {
        let mut f = 0.0;
        let mut kinds = Vec::with_capacity(idx.len());
        for (j, &i) in idx.iter().enumerate() {
            f += sorted[j][i].1;
            kinds.push(sorted[j][i].0);
        }
        Item {
            q: quantize(f),
            kinds,
            idx,
        }
    };

    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    let start = vec![0; sorted.len()];
    seen.insert(start.clone());
    heap.push(make(start));

    let mut out: Vec<(i64, Vec<ChangeKind>)> = Vec::new();
    while let Some(item) = heap.pop() {
        // Pops arrive in non-increasing score order; keep going while the
        // score still ties the cap-th one.
        if out.len() >= cap && item.q < out[cap - 1].0 {
            break;
        }
        for j in 0..item.idx.len() {
            if item.idx[j] + 1 < sorted[j].len() {
                let mut next = item.idx.clone();
                next[j] += 1;
                if seen.insert(next.clone()) {
                    heap.push(make(next));
                }
            }
        }
        out.push((item.q, item.kinds));
    }
    out.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    out.truncate(cap);
    out.into_iter().map(|(_, k)| k).collect()
}
