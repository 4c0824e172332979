use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::bits::BitString;
use crate::dyadic::DyadicMass;
use crate::error::{Error, Result};

/// Per-program verdict at the store's fuel horizon.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Halted { output: BitString, steps: u64 },
    NonHaltingCertified,
    Undecided,
}

impl Verdict {
    pub fn is_decided(&self) -> bool {
        !matches!(self, Verdict::Undecided)
    }

    pub fn status_char(&self) -> char {
        match self {
            Verdict::Halted { .. } => 'H',
            Verdict::NonHaltingCertified => 'C',
            Verdict::Undecided => 'U',
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Halted { output, steps } => write!(f, "H({output:?}, {steps})"),
            Verdict::NonHaltingCertified => f.write_str("C"),
            Verdict::Undecided => f.write_str("U"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub halted: u64,
    pub certified: u64,
    pub undecided: u64,
}

impl Tally {
    pub fn total(&self) -> u64 {
        self.halted + self.certified + self.undecided
    }

    fn bump(&mut self, v: &Verdict, delta: i64) {
        let slot = match v {
            Verdict::Halted { .. } => &mut self.halted,
            Verdict::NonHaltingCertified => &mut self.certified,
            Verdict::Undecided => &mut self.undecided,
        };
        *slot = slot.checked_add_signed(delta).expect("tally underflow");
    }
}

/// Verdicts for every well-formed program up to `max_len` bits, all run
/// to the same fuel horizon against the same auxiliary input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumStore {
    max_len: usize,
    fuel_horizon: u64,
    aux: BitString,
    records: BTreeMap<BitString, Verdict>,
    /// Tallies indexed by program length.
    by_len: Vec<Tally>,
}

impl EnumStore {
    pub fn new(max_len: usize, aux: BitString) -> Self {
        Self {
            max_len,
            fuel_horizon: 0,
            aux,
            records: BTreeMap::new(),
            by_len: vec![Tally::default(); max_len + 1],
        }
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn fuel_horizon(&self) -> u64 {
        self.fuel_horizon
    }

    /// The conditional input `y` every program was run against.
    pub fn aux(&self) -> &BitString {
        &self.aux
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, program: &BitString) -> Option<&Verdict> {
        self.records.get(program)
    }

    /// Records in standard enumeration order.
    pub fn records(&self) -> impl Iterator<Item = (&BitString, &Verdict)> {
        self.records.iter()
    }

    /// Halted records as `(program, output, steps)`.
    pub fn halted(&self) -> impl Iterator<Item = (&BitString, &BitString, u64)> {
        self.records.iter().filter_map(|(p, v)| match v {
            Verdict::Halted { output, steps } => Some((p, output, *steps)),
            _ => None,
        })
    }

    pub fn undecided(&self) -> impl Iterator<Item = &BitString> {
        self.records
            .iter()
            .filter(|(_, v)| matches!(v, Verdict::Undecided))
            .map(|(p, _)| p)
    }

    pub fn decided_fraction(&self) -> Tally {
        self.by_len.iter().fold(Tally::default(), |acc, t| Tally {
            halted: acc.halted + t.halted,
            certified: acc.certified + t.certified,
            undecided: acc.undecided + t.undecided,
        })
    }

    /// Tally restricted to programs of exactly `len` bits.
    pub fn tally_at(&self, len: usize) -> Tally {
        self.by_len.get(len).copied().unwrap_or_default()
    }

    /// True iff no program of length `< len` is undecided.
    pub fn decided_below(&self, len: usize) -> bool {
        self.by_len.iter().take(len).all(|t| t.undecided == 0)
    }

    pub fn is_complete(&self) -> bool {
        self.decided_below(self.max_len + 1)
    }

    /// Exact Σ 2^{-|p|} over halted programs.
    pub fn kraft_mass(&self) -> DyadicMass {
        self.by_len
            .iter()
            .enumerate()
            .filter(|(_, t)| t.halted > 0)
            .map(|(len, t)| DyadicMass::from_parts(t.halted, len as u32))
            .sum()
    }

    pub(crate) fn set_fuel_horizon(&mut self, fuel: u64) {
        self.fuel_horizon = self.fuel_horizon.max(fuel);
    }

    pub(crate) fn set_max_len(&mut self, max_len: usize) {
        if max_len > self.max_len {
            self.max_len = max_len;
            self.by_len.resize(max_len + 1, Tally::default());
        }
    }

    /// Inserts or updates a record under the verdict transition rules:
    /// decided verdicts are final, `Undecided` may become anything.
    pub fn record(&mut self, program: BitString, verdict: Verdict) -> Result<()> {
        let len = program.len();
        if len > self.max_len {
            return Err(Error::Config(format!(
                "program {program} is longer than the store cap {}",
                self.max_len
            )));
        }
        match self.records.get_mut(&program) {
            Some(existing) if existing == &verdict => Ok(()),
            Some(existing) if existing.is_decided() => {
                if verdict == Verdict::Undecided {
                    // A stale or partial view never downgrades a decision.
                    return Ok(());
                }
                Err(Error::VerdictConflict {
                    program,
                    existing: existing.to_string(),
                    incoming: verdict.to_string(),
                })
            }
            Some(existing) => {
                self.by_len[len].bump(existing, -1);
                self.by_len[len].bump(&verdict, 1);
                *existing = verdict;
                Ok(())
            }
            None => {
                self.by_len[len].bump(&verdict, 1);
                self.records.insert(program, verdict);
                Ok(())
            }
        }
    }

    /// Set-union of two views of the same enumeration (e.g. two shards).
    pub fn merge(&mut self, other: &EnumStore) -> Result<()> {
        if self.aux != other.aux {
            return Err(Error::AuxMismatch {
                store: self.aux.clone(),
                query: other.aux.clone(),
            });
        }
        if self.fuel_horizon != other.fuel_horizon || self.max_len != other.max_len {
            return Err(Error::Config(format!(
                "cannot merge store (L={}, D={}) with (L={}, D={})",
                self.max_len, self.fuel_horizon, other.max_len, other.fuel_horizon
            )));
        }
        for (p, v) in other.records() {
            self.record(p.clone(), v.clone())?;
        }
        Ok(())
    }

    /// First pair `(a, b)` of halted programs with `a` a proper prefix of
    /// `b`, if any. Checks neighbours in dictionary order, which suffices.
    pub fn prefix_violation(&self) -> Option<(BitString, BitString)> {
        let mut halted: Vec<&BitString> = self.halted().map(|(p, _, _)| p).collect();
        halted.sort_by(|a, b| a.dictionary_cmp(b));
        halted
            .windows(2)
            .find(|w| w[0].is_prefix_of(w[1]))
            .map(|w| (w[0].clone(), w[1].clone()))
    }
}
