//! Complexity and probability quantities read off an [`EnumStore`].
//!
//! Everything here is relative to the reference machine and truncated to
//! programs of at most `L` bits. Time-bounded values (`K^d`, `Q^d` with
//! `d` at most the fuel horizon) are always exact under that truncation,
//! since every program halting within `d` steps has been observed.
//! Horizon values (`K`, `Q`) carry an `exact` flag: they are exact once
//! no program that could still improve them is undecided.

use std::collections::HashMap;

use serde::Serialize;

use crate::bits::BitString;
use crate::dyadic::DyadicMass;
use crate::enumerator::EnumStore;
use crate::error::{Error, Result};

/// A halting program for some output.
#[derive(Debug, Clone, Copy)]
pub struct Hit<'s> {
    pub steps: u64,
    pub program: &'s BitString,
}

/// `K(x)` at the store horizon together with the canonical witness `x*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KHorizon {
    pub k: Option<usize>,
    pub witness: Option<BitString>,
    pub exact: bool,
}

/// Breakpoints of `d ↦ K^d(x)`: `K^d(x) = k` from `d` up to the next entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KRow {
    pub x: BitString,
    pub kd: Vec<(u64, usize)>,
    pub witness: Option<BitString>,
    pub exact: bool,
}

/// Breakpoints of `d ↦ Q^d(x)` and the horizon value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QRow {
    pub x: BitString,
    pub qd: Vec<(u64, DyadicMass)>,
    pub q_horizon: DyadicMass,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Census {
    pub k: usize,
    pub count: u64,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CompDepth {
    pub value: usize,
    pub exact: bool,
}

/// Index from outputs to the programs producing them.
///
/// Hits for each output are sorted by `(steps, program)` with programs in
/// standard order, so scans meet faster programs first and ties resolve to
/// the canonical witness.
#[derive(Debug)]
pub struct KTable<'s> {
    store: &'s EnumStore,
    by_output: HashMap<&'s BitString, Vec<Hit<'s>>>,
    /// `K(x)` at horizon for each output, cached.
    k: HashMap<&'s BitString, (usize, &'s BitString)>,
}

impl<'s> KTable<'s> {
    pub fn build(store: &'s EnumStore) -> Self {
        let mut by_output: HashMap<&BitString, Vec<Hit>> = HashMap::new();
        let mut k: HashMap<&BitString, (usize, &BitString)> = HashMap::new();
        // Records arrive in standard order, so the first hit per output is x*.
        for (program, output, steps) in store.halted() {
            by_output
                .entry(output)
                .or_default()
                .push(Hit { steps, program });
            k.entry(output).or_insert((program.len(), program));
        }
        for hits in by_output.values_mut() {
            hits.sort_by(|a, b| a.steps.cmp(&b.steps).then_with(|| a.program.cmp(b.program)));
        }
        Self {
            store,
            by_output,
            k,
        }
    }

    pub fn store(&self) -> &'s EnumStore {
        self.store
    }

    /// Distinct outputs in standard order.
    pub fn outputs(&self) -> Vec<&'s BitString> {
        let mut v: Vec<&BitString> = self.by_output.keys().copied().collect();
        v.sort();
        v
    }

    pub fn hits(&self, x: &BitString) -> &[Hit<'s>] {
        self.by_output.get(x).map_or(&[], Vec::as_slice)
    }

    fn check_fuel(&self, d: u64) -> Result<()> {
        if d > self.store.fuel_horizon() {
            return Err(Error::BeyondHorizon {
                requested: d,
                horizon: self.store.fuel_horizon(),
            });
        }
        Ok(())
    }

    /// `K^d(x)`: shortest program halting with output `x` within `d` steps.
    pub fn k_bounded(&self, x: &BitString, d: u64) -> Result<Option<usize>> {
        self.check_fuel(d)?;
        Ok(self
            .hits(x)
            .iter()
            .take_while(|h| h.steps <= d)
            .map(|h| h.program.len())
            .min())
    }

    /// `K(x)` at horizon; `None` when no stored program outputs `x`.
    pub fn k(&self, x: &BitString) -> Option<usize> {
        self.k.get(x).map(|&(k, _)| k)
    }

    /// Whether the horizon value of `K(x)` is final: either a witness of
    /// length `k` exists and every shorter program is decided, or nothing
    /// outputs `x` and the whole store is decided.
    pub fn k_exact(&self, x: &BitString) -> bool {
        match self.k(x) {
            Some(k) => self.store.decided_below(k),
            None => self.store.is_complete(),
        }
    }

    pub fn k_horizon(&self, x: &BitString) -> KHorizon {
        let entry = self.k.get(x);
        KHorizon {
            k: entry.map(|&(k, _)| k),
            witness: entry.map(|&(_, w)| w.clone()),
            exact: self.k_exact(x),
        }
    }

    /// `x*`, the first shortest program for `x` in standard order.
    pub fn witness(&self, x: &BitString) -> Option<&'s BitString> {
        self.k.get(x).map(|&(_, w)| w)
    }

    /// Fewest steps among the shortest programs for `x`.
    pub fn shortest_program_time(&self, x: &BitString) -> Option<u64> {
        let k = self.k(x)?;
        self.hits(x)
            .iter()
            .find(|h| h.program.len() == k)
            .map(|h| h.steps)
    }

    /// `Q^d(x)`: Σ 2^{-|p|} over programs halting with output `x` within `d`.
    pub fn q_bounded(&self, x: &BitString, d: u64) -> Result<DyadicMass> {
        self.check_fuel(d)?;
        Ok(mass_of(self.hits(x).iter().take_while(|h| h.steps <= d)))
    }

    /// `Q^D(x)` at the horizon, a lower bound for the length-capped `Q(x)`.
    pub fn q_horizon(&self, x: &BitString) -> DyadicMass {
        mass_of(self.hits(x).iter())
    }

    pub fn k_row(&self, x: &BitString) -> KRow {
        let mut kd = Vec::new();
        let mut best = usize::MAX;
        for h in self.hits(x) {
            if h.program.len() < best {
                best = h.program.len();
                match kd.last_mut() {
                    Some((d, k)) if *d == h.steps => *k = best,
                    _ => kd.push((h.steps, best)),
                }
            }
        }
        let kh = self.k_horizon(x);
        KRow {
            x: x.clone(),
            kd,
            witness: kh.witness,
            exact: kh.exact,
        }
    }

    pub fn q_row(&self, x: &BitString) -> QRow {
        let mut qd: Vec<(u64, DyadicMass)> = Vec::new();
        let mut running = DyadicMass::zero();
        for h in self.hits(x) {
            running += &DyadicMass::pow2_neg(h.program.len() as u32);
            match qd.last_mut() {
                Some((d, q)) if *d == h.steps => *q = running.clone(),
                _ => qd.push((h.steps, running.clone())),
            }
        }
        QRow {
            x: x.clone(),
            qd,
            q_horizon: running,
            exact: self.store.is_complete(),
        }
    }

    /// `#{x : K(x) ≤ k}`. Exact on complete stores; a lower bound otherwise.
    pub fn census(&self, k: usize) -> Census {
        Census {
            k,
            count: self.k.values().filter(|&&(len, _)| len <= k).count() as u64,
            exact: self.store.is_complete(),
        }
    }

    /// `K^d(x) − K(x)`; `None` when `K^d(x)` is undefined.
    pub fn computational_depth(&self, x: &BitString, d: u64) -> Result<Option<CompDepth>> {
        let Some(kd) = self.k_bounded(x, d)? else {
            return Ok(None);
        };
        let k = self.k(x).expect("K^d defined implies K defined");
        Ok(Some(CompDepth {
            value: kd - k,
            exact: self.k_exact(x),
        }))
    }
}

fn mass_of<'a, 's: 'a>(hits: impl Iterator<Item = &'a Hit<'s>>) -> DyadicMass {
    // Accumulate counts per length, then one exact sum.
    let mut per_len: Vec<u64> = Vec::new();
    for h in hits {
        let len = h.program.len();
        if per_len.len() <= len {
            per_len.resize(len + 1, 0);
        }
        per_len[len] += 1;
    }
    per_len
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(len, &c)| DyadicMass::from_parts(c, len as u32))
        .sum()
}

/// `K^d(x | y)` from a store enumerated with auxiliary input `y`.
pub fn k_conditional(
    x: &BitString,
    y: &BitString,
    d: u64,
    store_y: &EnumStore,
) -> Result<Option<usize>> {
    if store_y.aux() != y {
        return Err(Error::AuxMismatch {
            store: store_y.aux().clone(),
            query: y.clone(),
        });
    }
    KTable::build(store_y).k_bounded(x, d)
}
