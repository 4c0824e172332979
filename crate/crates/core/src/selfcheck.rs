//! Invariant suite over a store. Every check lists its violations; an
//! empty list everywhere means the store and all derived tables agree with
//! the machine-independent laws they must obey.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ait::KTable;
use crate::bits::BitString;
use crate::busybeaver::{time_bound_check, BbTable};
use crate::depth::{depth_curve, gap_report, is_incompressible, ld1, theorem1_report};
use crate::dyadic::DyadicMass;
use crate::enumerator::{count_valid_programs, EnumStore, Verdict};
use crate::machine::{self, AuxStream, Program, RunOutcome};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub checked: u64,
    pub violations: Vec<String>,
    /// Informational observations that are not violations.
    pub notes: Vec<String>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn expect(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations.push(msg());
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheckReport {
    pub checks: Vec<Check>,
}

impl SelfCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SelfCheckOptions {
    /// Re-execute every halted record and re-run every certified one with
    /// ten times the horizon and no cycle detector.
    pub rerun: bool,
}

impl Default for SelfCheckOptions {
    fn default() -> Self {
        Self { rerun: true }
    }
}

/// The significance thresholds the `ld¹` monotonicity check sweeps.
pub const EPSILONS: [&str; 4] = ["1/8", "1/4", "1/2", "1"];

pub fn selfcheck(store: &EnumStore, opts: SelfCheckOptions) -> SelfCheckReport {
    let table = KTable::build(store);
    let bb = BbTable::build(store);
    let outputs = table.outputs();
    let mut checks = vec![
        coverage(store),
        prefix_free(store),
        kraft(store),
        mass_accounting(store, &table, &outputs),
        k_monotone(&table, &outputs),
        q_monotone(&table, &outputs),
        census(store, &table),
        ld2_checks(&table, &outputs),
        ld1_monotone(&table, &outputs),
        depth_chain(&table, &bb, &outputs),
        time_bound(store, &bb),
        theorem1_integrity(&table, &outputs),
    ];
    if opts.rerun {
        checks.push(rerun_halted(store));
        checks.push(certification_soundness(store));
    }
    SelfCheckReport { checks }
}

fn coverage(store: &EnumStore) -> Check {
    let mut c = Check::new("coverage");
    for m in 0..=(store.max_len().saturating_sub(1) / 4) {
        let len = 4 * m + 1;
        if len > store.max_len() {
            break;
        }
        let have = store.tally_at(len).total() as u128;
        let want = count_valid_programs(m);
        c.expect(have == want, || {
            format!("length {len}: {have} records, {want} programs")
        });
    }
    let stray = store.records().filter(|(p, _)| p.len() % 4 != 1).count();
    c.expect(stray == 0, || {
        format!("{stray} records with impossible lengths")
    });
    c
}

fn prefix_free(store: &EnumStore) -> Check {
    let mut c = Check::new("prefix_free");
    let v = store.prefix_violation();
    c.expect(v.is_none(), || {
        let (a, b) = v.clone().unwrap();
        format!("{a} is a proper prefix of {b}")
    });
    c
}

fn kraft(store: &EnumStore) -> Check {
    let mut c = Check::new("kraft");
    let mass = store.kraft_mass();
    c.expect(mass <= DyadicMass::one(), || {
        format!("Kraft mass {mass} exceeds 1")
    });
    c
}

fn mass_accounting(store: &EnumStore, table: &KTable<'_>, outputs: &[&BitString]) -> Check {
    let mut c = Check::new("mass_accounting");
    let total: DyadicMass = outputs.iter().map(|x| table.q_horizon(x)).sum();
    let kraft = store.kraft_mass();
    c.expect(total == kraft, || {
        format!("Σ_x Q(x) = {total} but Kraft mass is {kraft}")
    });
    for x in outputs {
        let k = table.k(x).unwrap();
        let q = table.q_horizon(x);
        c.expect(DyadicMass::pow2_neg(k as u32) <= q, || {
            format!("{x:?}: 2^-K = 2^-{k} > Q = {q}")
        });
    }
    c
}

/// Fuel values at which some quantity can change, plus the horizon.
fn probe_points(table: &KTable<'_>, x: &BitString) -> Vec<u64> {
    let mut ds: Vec<u64> = table.hits(x).iter().map(|h| h.steps).collect();
    ds.push(table.store().fuel_horizon());
    ds.dedup();
    ds
}

fn k_monotone(table: &KTable<'_>, outputs: &[&BitString]) -> Check {
    let mut c = Check::new("k_monotone");
    for x in outputs {
        let mut prev: Option<usize> = None;
        for d in probe_points(table, x) {
            let k = table.k_bounded(x, d).ok().flatten();
            if let (Some(p), Some(k)) = (prev, k) {
                c.expect(k <= p, || format!("{x:?}: K^{d} = {k} > earlier {p}"));
            }
            c.expect(prev.is_none() || k.is_some(), || {
                format!("{x:?}: K^{d} became undefined")
            });
            prev = k.or(prev);
        }
        let kh = table.k_horizon(x);
        c.expect(kh.k == prev, || {
            format!("{x:?}: K at horizon {:?} != K^D {prev:?}", kh.k)
        });
        if let Some(w) = &kh.witness {
            c.expect(Some(w.len()) == kh.k, || {
                format!("{x:?}: witness {w} has wrong length")
            });
        }
    }
    c
}

fn q_monotone(table: &KTable<'_>, outputs: &[&BitString]) -> Check {
    let mut c = Check::new("q_monotone");
    for x in outputs {
        let mut prev = DyadicMass::zero();
        for d in probe_points(table, x) {
            let q = table.q_bounded(x, d).unwrap_or_default();
            c.expect(q >= prev, || format!("{x:?}: Q^{d} = {q} < earlier {prev}"));
            prev = q;
        }
        let qh = table.q_horizon(x);
        c.expect(prev == qh, || {
            format!("{x:?}: Q^D = {prev} but horizon Q = {qh}")
        });
    }
    c
}

fn census(store: &EnumStore, table: &KTable<'_>) -> Check {
    let mut c = Check::new("census");
    // Independent recount straight from the records.
    let mut shortest: BTreeMap<&BitString, usize> = BTreeMap::new();
    for (p, out, _) in store.halted() {
        let e = shortest.entry(out).or_insert(usize::MAX);
        *e = (*e).min(p.len());
    }
    for k in 0..=store.max_len() {
        let got = table.census(k).count;
        let recount = shortest.values().filter(|&&l| l <= k).count() as u64;
        c.expect(got == recount, || {
            format!("census({k}) = {got}, recount {recount}")
        });
        c.expect(k >= 64 || got <= 1u64 << k, || {
            format!("census({k}) = {got} > 2^{k}")
        });
    }
    c
}

fn ld2_checks(table: &KTable<'_>, outputs: &[&BitString]) -> Check {
    let mut c = Check::new("ld2");
    let aux = AuxStream::new(table.store().aux());
    for x in outputs {
        let curve = depth_curve(x, table);
        let mut prev: Option<u64> = None;
        for pt in &curve.points {
            if let Some(p) = prev {
                c.expect(pt.ld2.is_some_and(|v| v <= p), || {
                    format!("{x:?}: ld2 at b={} is {:?}, above {p} at b-1", pt.b, pt.ld2)
                });
            }
            prev = pt.ld2.or(prev);
            if let (Some(steps), Some(w)) = (pt.ld2, &pt.witness) {
                let ok = Program::decode(w)
                    .map(|p| {
                        machine::run(&p, &aux, steps)
                            == RunOutcome::Halted {
                                output: (*x).clone(),
                                steps,
                            }
                    })
                    .unwrap_or(false);
                c.expect(ok, || {
                    format!("{x:?}: witness {w} does not produce x in {steps} steps")
                });
                let (pass, _) = is_incompressible(table, w, pt.b);
                c.expect(pass, || {
                    format!(
                        "{x:?}: witness {w} fails the significance test at b={}",
                        pt.b
                    )
                });
            }
        }
        // ld2(x, 0) ≤ time(x*) when x* is itself incompressible.
        if let (Some(w), Some(t)) = (table.witness(x), table.shortest_program_time(x)) {
            let l0 = curve.at(0);
            if is_incompressible(table, w, 0).0 {
                c.expect(l0.is_some_and(|l| l <= t), || {
                    format!("{x:?}: ld2(x,0) = {l0:?} > time(x*) = {t}")
                });
            } else {
                c.notes
                    .push(format!("{x:?}: x* = {w} is compressible on this machine"));
            }
        }
        // The literal transcription bounds the curve's last point.
        let t = machine::transcription(x);
        if t.bits().len() <= table.store().max_len()
            && 2 * x.len() as u64 <= table.store().fuel_horizon()
        {
            if is_incompressible(table, t.bits(), curve.b_max).0 {
                let last = curve.points.last().and_then(|p| p.ld2);
                c.expect(last.is_some_and(|v| v <= 2 * x.len() as u64), || {
                    format!("{x:?}: ld2 at b_max = {last:?} exceeds 2|x|")
                });
            } else {
                c.notes
                    .push(format!("{x:?}: transcription not admitted at b_max"));
            }
        }
    }
    c
}

fn ld1_monotone(table: &KTable<'_>, outputs: &[&BitString]) -> Check {
    let mut c = Check::new("ld1_monotone");
    let eps: Vec<DyadicMass> = EPSILONS.iter().map(|e| e.parse().unwrap()).collect();
    for x in outputs {
        let values: Vec<Option<u64>> = eps
            .iter()
            .map(|e| ld1(x, e, table).unwrap().steps)
            .collect();
        for (i, w) in values.windows(2).enumerate() {
            c.expect(w[0].is_some() && w[1].is_some() && w[0] <= w[1], || {
                format!(
                    "{x:?}: ld1 at ε={} is {:?}, at ε={} is {:?}",
                    EPSILONS[i],
                    w[0],
                    EPSILONS[i + 1],
                    w[1]
                )
            });
        }
    }
    c
}

fn depth_chain(table: &KTable<'_>, bb: &BbTable, outputs: &[&BitString]) -> Check {
    let mut c = Check::new("depth_chain");
    let top = bb.bb(table.store().max_len()).map(|r| r.value);
    for x in outputs {
        let curve = depth_curve(x, table);
        let gaps = gap_report(&curve);
        let Some(l0) = curve.at(0) else {
            c.notes.push(format!("{x:?}: ld2(x,0) undefined"));
            continue;
        };
        c.expect(gaps.gaps.iter().all(|&(_, g)| g >= 0), || {
            format!("{x:?}: negative gap {:?}", gaps.gaps)
        });
        c.expect(gaps.h >= 0 && gaps.h as u64 <= l0, || {
            format!("{x:?}: h = {} > ld2(x,0) = {l0}", gaps.h)
        });
        c.expect(top.is_some_and(|t| l0 <= t), || {
            format!("{x:?}: ld2(x,0) = {l0} > BB(L) = {top:?}")
        });
    }
    c
}

fn time_bound(store: &EnumStore, bb: &BbTable) -> Check {
    let mut c = Check::new("time_bound");
    let v = time_bound_check(store, bb);
    c.checked = store.decided_fraction().halted;
    c.violations = v
        .iter()
        .map(|v| {
            format!(
                "{} ran {} steps, BB bound {:?}",
                v.program, v.steps, v.bound
            )
        })
        .collect();
    let mut prev = 0;
    for row in &bb.rows {
        c.expect(row.value >= prev, || {
            format!("BB({}) = {} decreased", row.n, row.value)
        });
        prev = row.value;
    }
    c
}

fn theorem1_integrity(table: &KTable<'_>, outputs: &[&BitString]) -> Check {
    let mut c = Check::new("theorem1_integrity");
    let zero = DyadicMass::zero();
    for x in outputs {
        let curve = depth_curve(x, table);
        for pt in curve.points.iter().filter(|p| p.ld2.is_some()) {
            match theorem1_report(x, pt.b, 0, table) {
                Ok(r) => {
                    let one = num_rational::Ratio::from_integer(num_bigint::BigUint::from(1u32));
                    c.expect(
                        r.ratio > num_rational::Ratio::from_integer(0u32.into()) && r.ratio <= one,
                        || format!("{x:?} b={}: ratio {} outside (0,1]", pt.b, r.ratio),
                    );
                    c.expect(r.left_threshold > zero && r.right_threshold > zero, || {
                        format!("{x:?} b={}: non-positive threshold", pt.b)
                    });
                }
                Err(e) => c.expect(false, || format!("{x:?} b={}: {e}", pt.b)),
            }
        }
    }
    c
}

fn rerun_halted(store: &EnumStore) -> Check {
    let mut c = Check::new("rerun_halted");
    let aux = AuxStream::new(store.aux());
    for (p, v) in store.records() {
        let Verdict::Halted { output, steps } = v else {
            continue;
        };
        let got = machine::run_bits(p, &aux, *steps, false);
        let want = RunOutcome::Halted {
            output: output.clone(),
            steps: *steps,
        };
        c.expect(got == want, || {
            format!("{p}: stored {v}, re-run gives {got:?}")
        });
        c.expect(*steps <= store.fuel_horizon(), || {
            format!("{p}: {steps} steps beyond the horizon")
        });
    }
    c
}

fn certification_soundness(store: &EnumStore) -> Check {
    let mut c = Check::new("certification_soundness");
    let aux = AuxStream::new(store.aux());
    let fuel = store.fuel_horizon().saturating_mul(10).max(10);
    for (p, v) in store.records() {
        if *v != Verdict::NonHaltingCertified {
            continue;
        }
        let got = machine::run_bits(p, &aux, fuel, false);
        c.expect(!got.is_halted(), || {
            format!("{p}: certified non-halting but {got:?}")
        });
    }
    c
}
