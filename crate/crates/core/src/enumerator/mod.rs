//! Dovetailed enumeration of every program up to a length cap.
//!
//! Each round runs every still-undecided program from scratch with the
//! round's fuel, so after the last round the store holds exactly the
//! verdicts a single run at the final fuel would give. Runs inside a round
//! are independent and go through a rayon pool; their results are folded
//! into the store in program order by the calling thread.

mod persist;
mod store;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::machine::{self, AuxStream, Program, RunOutcome};

pub use persist::{
    load, log_path, parse_snapshot, save, snapshot_string, write_snapshot, FORMAT_VERSION,
};
pub use store::{EnumStore, Tally, Verdict};

/// Longest program length the enumerator accepts. Programs are generated
/// from a packed `u64`; anything near this is far out of reach anyway.
pub const MAX_SUPPORTED_LEN: usize = 61;

/// A nonempty, strictly increasing list of fuel values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuelSchedule(Vec<u64>);

impl FuelSchedule {
    pub fn new(fuels: Vec<u64>) -> Result<Self> {
        if fuels.is_empty() {
            return Err(Error::Config("fuel schedule is empty".into()));
        }
        if fuels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "fuel schedule {fuels:?} is not strictly increasing"
            )));
        }
        Ok(Self(fuels))
    }

    /// 1, 2, 4, … up to `max`, with `max` itself appended when it is not a
    /// power of two. `max = 0` gives the single round `[0]`.
    pub fn powers_of_two(max: u64) -> Self {
        let mut v: Vec<u64> = std::iter::successors(Some(1u64), |f| f.checked_mul(2))
            .take_while(|&f| f <= max)
            .collect();
        if v.last() != Some(&max) {
            v.push(max);
        }
        Self(v)
    }

    pub fn fuels(&self) -> &[u64] {
        &self.0
    }

    pub fn max_fuel(&self) -> u64 {
        *self.0.last().unwrap()
    }
}

impl Default for FuelSchedule {
    /// 2^r for r = 0..=20.
    fn default() -> Self {
        Self::powers_of_two(1 << 20)
    }
}

/// Packs `1^m 0 body` into a bit-string, `body` holding `m` opcodes.
fn program_bits(m: usize, body: u64) -> BitString {
    let header = ((1u64 << m) - 1) << 1;
    BitString::from_uint((header << (3 * m)) | body, 4 * m + 1)
}

/// Every well-formed program with at most `max_len` bits, in standard order.
pub fn valid_programs(max_len: usize) -> impl Iterator<Item = BitString> {
    assert!(max_len <= MAX_SUPPORTED_LEN);
    let max_m = if max_len == 0 {
        None
    } else {
        Some((max_len - 1) / 4)
    };
    max_m.into_iter().flat_map(|top| 0..=top).flat_map(|m| {
        (0..1u64 << (3 * m))
            .filter(move |&body| machine::brackets_balanced(body, m))
            .map(move |body| program_bits(m, body))
    })
}

/// Number of well-formed programs with exactly `m` instructions, counted
/// by dynamic programming over bracket depth.
pub fn count_valid_programs(m: usize) -> u128 {
    // ways[d] = sequences so far with d open brackets.
    let mut ways = vec![0u128; m + 2];
    ways[0] = 1;
    for _ in 0..m {
        let mut next = vec![0u128; m + 2];
        for d in 0..=m {
            if ways[d] == 0 {
                continue;
            }
            next[d] += 6 * ways[d];
            next[d + 1] += ways[d];
            if d > 0 {
                next[d - 1] += ways[d];
            }
        }
        ways = next;
    }
    ways[0]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnumStats {
    /// Rounds that ran at least one program.
    pub rounds: usize,
    /// Total program executions.
    pub runs: u64,
    /// Programs that became decided during this call.
    pub newly_decided: u64,
}

/// Configuration for one enumeration call.
#[derive(Debug, Clone)]
pub struct Enumerator {
    max_len: usize,
    schedule: FuelSchedule,
    aux: BitString,
    detect_cycles: bool,
    workers: usize,
    shard: Option<(usize, usize)>,
    snapshot_every: usize,
}

impl Enumerator {
    pub fn new(max_len: usize, schedule: FuelSchedule) -> Self {
        Self {
            max_len,
            schedule,
            aux: BitString::new(),
            detect_cycles: true,
            workers: 0,
            shard: None,
            snapshot_every: 1,
        }
    }

    /// Conditional input `y`; programs read `1^{|y|} 0 y 0 0 …`.
    pub fn aux(mut self, y: BitString) -> Self {
        self.aux = y;
        self
    }

    pub fn detect_cycles(mut self, on: bool) -> Self {
        self.detect_cycles = on;
        self
    }

    /// Worker threads; 0 lets rayon decide.
    pub fn workers(mut self, n: usize) -> Self {
        self.workers = n;
        self
    }

    /// Only run programs whose standard-order rank is `index` mod `count`;
    /// the others stay undecided. Merging all shards gives the full store.
    pub fn shard(mut self, index: usize, count: usize) -> Self {
        self.shard = Some((index, count));
        self
    }

    /// With persistence, write a full snapshot every `n` rounds and only
    /// append to the log in between. The final round always snapshots.
    pub fn snapshot_every(mut self, n: usize) -> Self {
        self.snapshot_every = n.max(1);
        self
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn schedule(&self) -> &FuelSchedule {
        &self.schedule
    }

    fn validate(&self) -> Result<()> {
        if self.max_len < 1 {
            return Err(Error::Config("length cap must be at least 1".into()));
        }
        if self.max_len > MAX_SUPPORTED_LEN {
            return Err(Error::Config(format!(
                "length cap {} exceeds the supported maximum {MAX_SUPPORTED_LEN}",
                self.max_len
            )));
        }
        if let Some((i, n)) = self.shard {
            if n == 0 || i >= n {
                return Err(Error::Config(format!("bad shard {i} of {n}")));
            }
        }
        Ok(())
    }

    /// Starts from an empty store.
    pub fn enumerate(&self) -> Result<(EnumStore, EnumStats)> {
        self.resume(EnumStore::new(self.max_len, self.aux.clone()))
    }

    /// Continues from an existing store. Decided records are never re-run.
    pub fn resume(&self, store: EnumStore) -> Result<(EnumStore, EnumStats)> {
        self.drive(store, None, &mut |_| {})
    }

    /// Like [`Enumerator::resume`], calling `observe` after every round.
    pub fn resume_observed(
        &self,
        store: EnumStore,
        observe: &mut dyn FnMut(&EnumStore),
    ) -> Result<(EnumStore, EnumStats)> {
        self.drive(store, None, observe)
    }

    /// Enumerates into the snapshot at `path`, resuming from it (and its
    /// log) when present.
    pub fn enumerate_persistent(
        &self,
        path: &Path,
        observe: &mut dyn FnMut(&EnumStore),
    ) -> Result<(EnumStore, EnumStats)> {
        let store = match persist::load(path) {
            Ok(s) => s,
            Err(Error::StoreNotFound(_)) => EnumStore::new(self.max_len, self.aux.clone()),
            Err(e) => return Err(e),
        };
        self.drive(store, Some(path), observe)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }

    fn drive(
        &self,
        mut store: EnumStore,
        persist_to: Option<&Path>,
        observe: &mut dyn FnMut(&EnumStore),
    ) -> Result<(EnumStore, EnumStats)> {
        self.validate()?;
        if store.aux() != &self.aux {
            return Err(Error::AuxMismatch {
                store: store.aux().clone(),
                query: self.aux.clone(),
            });
        }
        let old_horizon = store.fuel_horizon();
        let old_len = store.max_len();

        // Fuel each undecided program has already been run with.
        let mut tried: HashMap<BitString, u64> = store
            .undecided()
            .map(|p| (p.clone(), old_horizon))
            .collect();
        let cap = self.max_len.max(old_len);
        store.set_max_len(cap);
        let expected: u128 = (0..=(cap - 1) / 4).map(count_valid_programs).sum();
        if (store.len() as u128) < expected {
            for p in valid_programs(cap) {
                if store.get(&p).is_none() {
                    tried.insert(p.clone(), 0);
                    store.record(p, Verdict::Undecided)?;
                }
            }
        }

        let mut levels: Vec<u64> = self.schedule.fuels().to_vec();
        if tried.values().any(|&f| f < old_horizon) {
            levels.push(old_horizon);
        }
        levels.sort_unstable();
        levels.dedup();

        let owned: Option<HashSet<BitString>> = self.shard.map(|(i, n)| {
            valid_programs(store.max_len())
                .enumerate()
                .filter(|(rank, _)| rank % n == i)
                .map(|(_, p)| p)
                .collect()
        });
        let mine = |p: &BitString| owned.as_ref().is_none_or(|o| o.contains(p));

        let pool = self.pool()?;
        let aux = AuxStream::new(&self.aux);
        let log = persist_to.map(persist::log_path);
        // The log only carries decisions, so the snapshot must already list
        // every program (including newly added undecided ones).
        if let (Some(path), Some(log)) = (persist_to, log.as_deref()) {
            persist::save(&store, path)?;
            persist::clear_log(log)?;
        }
        let mut stats = EnumStats::default();
        let mut rounds_since_snapshot = 0usize;

        for (idx, &fuel) in levels.iter().enumerate() {
            let mut todo: Vec<BitString> = tried
                .iter()
                .filter(|(p, &f)| f < fuel && mine(p))
                .map(|(p, _)| p.clone())
                .collect();
            todo.sort_unstable();

            let detect = self.detect_cycles;
            let outcomes: Vec<RunOutcome> = pool.install(|| {
                todo.par_iter()
                    .map(|p| {
                        let program =
                            Program::decode(p).expect("store holds only well-formed programs");
                        machine::run_with(&program, &aux, fuel, detect)
                    })
                    .collect()
            });

            if !todo.is_empty() {
                stats.rounds += 1;
                stats.runs += todo.len() as u64;
            }
            let mut decided = Vec::new();
            for (p, outcome) in todo.into_iter().zip(outcomes) {
                let verdict = match outcome {
                    RunOutcome::Halted { output, steps } => Verdict::Halted { output, steps },
                    RunOutcome::NonHaltingCertified { .. } => Verdict::NonHaltingCertified,
                    RunOutcome::FuelExhausted { .. } => {
                        tried.insert(p, fuel);
                        continue;
                    }
                    RunOutcome::Invalid => unreachable!("decoded programs are valid"),
                };
                tried.remove(&p);
                store.record(p.clone(), verdict.clone())?;
                decided.push((p, verdict));
            }
            stats.newly_decided += decided.len() as u64;
            store.set_fuel_horizon(fuel);

            if let (Some(path), Some(log)) = (persist_to, log.as_deref()) {
                persist::append_round(
                    log,
                    decided.iter().map(|(p, v)| (p, v)),
                    store.max_len(),
                    fuel,
                )?;
                rounds_since_snapshot += 1;
                if idx + 1 == levels.len() || rounds_since_snapshot >= self.snapshot_every {
                    persist::save(&store, path)?;
                    persist::clear_log(log)?;
                    rounds_since_snapshot = 0;
                }
            }
            observe(&store);
        }
        Ok((store, stats))
    }
}
