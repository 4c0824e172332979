//! Test-only reference implementations.
#![allow(dead_code)]

use std::collections::BTreeMap;

use depthlab::enumerator::{EnumStore, Enumerator, FuelSchedule, Verdict};
use depthlab::machine::{run_bits, AuxStream, RunOutcome};
use depthlab::BitString;

/// Every bit-string of length `0..=max_len`, in (length, lex) order.
pub fn all_strings(max_len: usize) -> impl Iterator<Item = BitString> {
    (0..=max_len).flat_map(|n| (0..1u64 << n).map(move |v| BitString::from_uint(v, n)))
}

/// Single pass: try every bit-string as a program, run it once at `fuel`.
pub fn naive_records(max_len: usize, fuel: u64, aux: &BitString) -> BTreeMap<BitString, Verdict> {
    let aux = AuxStream::new(aux);
    let mut out = BTreeMap::new();
    for s in all_strings(max_len) {
        let verdict = match run_bits(&s, &aux, fuel, true) {
            RunOutcome::Invalid => continue,
            RunOutcome::Halted { output, steps } => Verdict::Halted { output, steps },
            RunOutcome::NonHaltingCertified { .. } => Verdict::NonHaltingCertified,
            RunOutcome::FuelExhausted { .. } => Verdict::Undecided,
        };
        out.insert(s, verdict);
    }
    out
}

pub fn records_of(store: &EnumStore) -> BTreeMap<BitString, Verdict> {
    store
        .records()
        .map(|(p, v)| (p.clone(), v.clone()))
        .collect()
}

/// Shortest halting length per output, straight from the records.
pub fn naive_k(store: &EnumStore, d: u64) -> BTreeMap<BitString, usize> {
    let mut k = BTreeMap::new();
    for (p, output, steps) in store.halted() {
        if steps <= d {
            let e = k.entry(output.clone()).or_insert(p.len());
            *e = (*e).min(p.len());
        }
    }
    k
}

pub fn store_l13() -> EnumStore {
    Enumerator::new(13, FuelSchedule::powers_of_two(64))
        .enumerate()
        .expect("L=13 enumeration")
        .0
}
