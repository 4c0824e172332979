//! Busy Beaver values of the reference machine.

use serde::Serialize;

use crate::bits::BitString;
use crate::enumerator::EnumStore;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BbRow {
    pub n: usize,
    pub value: u64,
    pub champion: BitString,
    /// No program of length ≤ n is undecided; otherwise `value` is a
    /// lower bound.
    pub exact: bool,
}

/// One row per program length present in the store, in increasing `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BbTable {
    pub rows: Vec<BbRow>,
}

impl BbTable {
    pub fn build(store: &EnumStore) -> Self {
        let mut rows: Vec<BbRow> = Vec::new();
        let mut best: Option<(u64, &BitString)> = None;
        let mut current_len = None;
        let flush = |rows: &mut Vec<BbRow>, n: usize, best: Option<(u64, &BitString)>| {
            if let Some((value, champion)) = best {
                rows.push(BbRow {
                    n,
                    value,
                    champion: champion.clone(),
                    exact: store.decided_below(n + 1),
                });
            }
        };
        // Standard order: lengths ascend and the first maximum seen is the
        // canonical champion.
        for (p, _, steps) in store.halted() {
            if current_len.is_some_and(|n| n != p.len()) {
                flush(&mut rows, current_len.unwrap(), best);
            }
            current_len = Some(p.len());
            if best.is_none_or(|(v, _)| steps > v) {
                best = Some((steps, p));
            }
        }
        if let Some(n) = current_len {
            flush(&mut rows, n, best);
        }
        Self { rows }
    }

    /// `BB(n)`: the row for the largest program length ≤ n.
    pub fn bb(&self, n: usize) -> Option<&BbRow> {
        self.rows.iter().take_while(|r| r.n <= n).last()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimeBoundViolation {
    pub program: BitString,
    pub steps: u64,
    pub bound: Option<u64>,
}

/// Halted records running longer than `BB(|p|)`. Always empty for a table
/// built from the same store.
pub fn time_bound_check(store: &EnumStore, table: &BbTable) -> Vec<TimeBoundViolation> {
    store
        .halted()
        .filter_map(|(p, _, steps)| {
            let bound = table.bb(p.len()).map(|r| r.value);
            (bound.is_none_or(|b| steps > b)).then(|| TimeBoundViolation {
                program: p.clone(),
                steps,
                bound,
            })
        })
        .collect()
}
