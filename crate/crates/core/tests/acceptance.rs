//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! nonzero if any failed.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use depthlab::ait::KTable;
use depthlab::bits::bits;
use depthlab::busybeaver::BbTable;
use depthlab::depth::{self, depth_curve, gap_report, theorem1_report};
use depthlab::enumerator::{self, EnumStore, Enumerator, FuelSchedule, Verdict};
use depthlab::machine::{run_with, AuxStream, Program, RunOutcome};
use depthlab::selfcheck::{selfcheck, SelfCheckOptions, EPSILONS};
use depthlab::{BitString, DyadicMass};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn exactness_goldens() -> Outcome {
    let start = Instant::now();
    let store = common::store_l13();
    let table = KTable::build(&store);
    let bb = BbTable::build(&store);
    let elapsed = start.elapsed();

    ensure!(store.is_complete(), "store not complete");
    for (x, k, time) in [("", 1, 0), ("0", 5, 1), ("1", 9, 2)] {
        let x = bits(x);
        let kh = table.k_horizon(&x);
        ensure!(
            kh.k == Some(k) && kh.exact,
            "K({x:?}) = {:?} exact={}",
            kh.k,
            kh.exact
        );
        let t = table.shortest_program_time(&x);
        ensure!(t == Some(time), "time({x:?}) = {t:?}, want {time}");
    }
    let rows: Vec<(usize, u64, bool)> = bb.rows.iter().map(|r| (r.n, r.value, r.exact)).collect();
    ensure!(
        rows == [(1, 0, true), (5, 1, true), (9, 2, true), (13, 3, true)],
        "BB rows {rows:?}"
    );
    let t = store.decided_fraction();
    ensure!(
        (t.halted, t.certified, t.undecided) == (277, 1, 0),
        "decided fraction {t:?}"
    );
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "K = 1, 5, 9; times 0, 1, 2; BB to n=13; {elapsed:.2?}"
    ))
}

fn kraft_and_prefix_freeness() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("store.tsv");
    let mut problems = Vec::new();
    let mut snapshots = 0;
    let check = |s: &EnumStore, tag: &str, problems: &mut Vec<String>| {
        if s.kraft_mass() > DyadicMass::one() {
            problems.push(format!("{tag}: kraft {}", s.kraft_mass()));
        }
        if let Some((a, b)) = s.prefix_violation() {
            problems.push(format!("{tag}: {a} is a prefix of {b}"));
        }
    };

    let start = Instant::now();
    let e = Enumerator::new(29, FuelSchedule::powers_of_two(1024)).snapshot_every(3);
    let (store, _) = e
        .enumerate_persistent(&path, &mut |s| {
            snapshots += 1;
            check(s, "memory", &mut problems);
            // What a crash right now would leave behind.
            match enumerator::load(&path) {
                Ok(disk) => check(&disk, "disk", &mut problems),
                Err(err) => problems.push(format!("reload: {err}")),
            }
        })
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(&store, "final", &mut problems);

    ensure!(problems.is_empty(), "{}", problems.join("; "));
    ensure!(
        store.max_len() == 29 && snapshots > 0,
        "no snapshots observed"
    );
    let total = store.len();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "L=29, {total} programs, {snapshots} snapshots, kraft {}, {elapsed:.2?}",
        store.kraft_mass()
    ))
}

fn oracle_equivalence() -> Outcome {
    let schedules = [
        FuelSchedule::powers_of_two(64),
        FuelSchedule::new(vec![3, 10, 37, 64]).unwrap(),
        FuelSchedule::new(vec![64]).unwrap(),
    ];
    let mut compared = 0;
    for l in [1, 5, 9, 13] {
        let naive = common::naive_records(l, 64, &BitString::new());
        for s in &schedules {
            let (store, _) = Enumerator::new(l, s.clone())
                .enumerate()
                .map_err(|e| e.to_string())?;
            ensure!(
                common::records_of(&store) == naive,
                "L={l} schedule {:?} differs from the single pass",
                s.fuels()
            );
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} (L, schedule) pairs identical to the single-pass oracle"
    ))
}

fn monotonicity() -> Outcome {
    let store = common::store_l13();
    let table = KTable::build(&store);
    let horizon = store.fuel_horizon();
    let eps: Vec<DyadicMass> = EPSILONS.iter().map(|e| e.parse().unwrap()).collect();
    let mut checks = 0u64;
    for x in table.outputs() {
        let mut last_k = usize::MAX;
        let mut last_q = DyadicMass::zero();
        for d in 0..=horizon {
            let k = table.k_bounded(x, d).unwrap().unwrap_or(usize::MAX);
            let q = table.q_bounded(x, d).unwrap();
            ensure!(k <= last_k, "K^d({x:?}) increases at d={d}");
            ensure!(q >= last_q, "Q^d({x:?}) decreases at d={d}");
            last_k = k;
            last_q = q;
            checks += 2;
        }
        let curve = depth_curve(x, &table);
        let defined: Vec<u64> = curve.points.iter().filter_map(|p| p.ld2).collect();
        ensure!(
            defined.windows(2).all(|w| w[0] >= w[1]),
            "ld2({x:?}, b) increases in b: {defined:?}"
        );
        checks += defined.len() as u64;
        let ld1: Vec<Option<u64>> = eps
            .iter()
            .map(|e| depth::ld1(x, e, &table).unwrap().steps)
            .collect();
        ensure!(
            ld1.windows(2).all(|w| w[0] <= w[1]),
            "ld1({x:?}, eps) decreases in eps: {ld1:?}"
        );
        checks += ld1.len() as u64;
    }
    Ok(format!(
        "{} outputs, {checks} comparisons, zero violations",
        table.outputs().len()
    ))
}

fn census_bound() -> Outcome {
    let store = common::store_l13();
    let table = KTable::build(&store);
    let k_of = common::naive_k(&store, store.fuel_horizon());
    let mut counts = Vec::new();
    for k in 0..=13usize {
        let c = table.census(k);
        let recount = k_of.values().filter(|&&v| v <= k).count() as u64;
        ensure!(
            c.count == recount,
            "census({k}) = {} vs recount {recount}",
            c.count
        );
        ensure!(c.count <= 1 << k, "census({k}) = {} exceeds 2^{k}", c.count);
        counts.push(c.count);
    }
    Ok(format!("census(0..=13) = {counts:?}"))
}

fn cross_module_chain() -> Outcome {
    let store = common::store_l13();
    let table = KTable::build(&store);
    let bb13 = BbTable::build(&store)
        .bb(13)
        .map(|r| r.value)
        .ok_or("no BB(13)")?;
    for x in table.outputs() {
        let curve = depth_curve(x, &table);
        let h = gap_report(&curve).h;
        let ld0 = curve
            .at(0)
            .ok_or_else(|| format!("ld2({x:?}, 0) undefined"))?;
        ensure!(
            0 <= h && h as u64 <= ld0 && ld0 <= bb13,
            "chain broken at {x:?}: h={h} ld2={ld0} bb={bb13}"
        );
    }
    Ok(format!(
        "{} outputs, BB(13) = {bb13}",
        table.outputs().len()
    ))
}

fn theorem1_integrity() -> Outcome {
    // Frozen after the first verified run; the toy machine is not optimal,
    // so the flags are informational.
    const REPORTS: usize = 39;
    const LEFT_HOLDS: usize = 39;
    const RIGHT_HOLDS: usize = 0;

    let store = common::store_l13();
    let table = KTable::build(&store);
    let (mut n, mut left, mut right) = (0, 0, 0);
    for x in table.outputs() {
        let curve = depth_curve(x, &table);
        for p in curve.points.iter().filter(|p| p.ld2.is_some()) {
            let r = theorem1_report(x, p.b, 0, &table).map_err(|e| e.to_string())?;
            let zero = DyadicMass::zero();
            ensure!(
                r.ratio > zero.to_ratio() && r.ratio <= DyadicMass::one().to_ratio(),
                "ratio {} out of (0,1] at ({x:?}, {})",
                r.ratio,
                p.b
            );
            ensure!(
                r.left_threshold > zero && r.right_threshold > zero,
                "non-positive threshold at ({x:?}, {})",
                p.b
            );
            n += 1;
            left += r.left_holds as usize;
            right += r.right_holds as usize;
        }
    }
    ensure!(
        (n, left, right) == (REPORTS, LEFT_HOLDS, RIGHT_HOLDS),
        "counts (reports, left, right) = ({n}, {left}, {right})"
    );
    Ok(format!(
        "{n} reports, left bound met {left}, right bound met {right}"
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut snapshots = Vec::new();
    for workers in [1, 4] {
        let path = dir.path().join(format!("w{workers}.tsv"));
        Enumerator::new(13, FuelSchedule::powers_of_two(64))
            .workers(workers)
            .enumerate_persistent(&path, &mut |_| {})
            .map_err(|e| e.to_string())?;
        snapshots.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure!(
        snapshots[0] == snapshots[1],
        "snapshots differ between 1 and 4 workers"
    );
    let store = enumerator::parse_snapshot(
        std::str::from_utf8(&snapshots[0]).unwrap(),
        std::path::Path::new("w1.tsv"),
    )
    .map_err(|e| e.to_string())?;
    let report = selfcheck(&store, SelfCheckOptions::default());
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.name)
        .collect();
    ensure!(failed.is_empty(), "selfcheck failed: {failed:?}");
    Ok(format!(
        "{} identical bytes; selfcheck {} checks clean",
        snapshots[0].len(),
        report.checks.len()
    ))
}

fn non_halting_soundness() -> Outcome {
    let aux = AuxStream::empty();
    let mut checked = 0;
    for fuel in [64u64, 1024] {
        let (store, _) = Enumerator::new(13, FuelSchedule::powers_of_two(fuel))
            .enumerate()
            .map_err(|e| e.to_string())?;
        for (p, v) in store.records() {
            if *v != Verdict::NonHaltingCertified {
                continue;
            }
            let program = Program::decode(p).unwrap();
            let rerun = run_with(&program, &aux, 10 * fuel, false);
            ensure!(
                matches!(rerun, RunOutcome::FuelExhausted { .. }),
                "certified {p} gave {rerun:?} at fuel {}",
                10 * fuel
            );
            checked += 1;
        }
    }
    ensure!(checked > 0, "no certified programs to check");
    Ok(format!(
        "{checked} certified runs re-checked at 10x fuel without the detector"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("exactness goldens", exactness_goldens),
        ("kraft and prefix-freeness", kraft_and_prefix_freeness),
        ("oracle equivalence", oracle_equivalence),
        ("monotonicity", monotonicity),
        ("census bound", census_bound),
        ("cross-module chain", cross_module_chain),
        ("two-sided bound report integrity", theorem1_integrity),
        ("determinism", determinism),
        ("non-halting soundness", non_halting_soundness),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
