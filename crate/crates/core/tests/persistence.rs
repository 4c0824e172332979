mod common;

use std::fs::OpenOptions;
use std::io::Write;

use depthlab::enumerator::{self, Enumerator, FuelSchedule};

#[test]
fn disk_state_tracks_memory_every_round() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tsv");
    let mut rounds = 0;
    Enumerator::new(13, FuelSchedule::powers_of_two(64))
        .snapshot_every(100)
        .enumerate_persistent(&path, &mut |mem| {
            rounds += 1;
            let disk = enumerator::load(&path).unwrap();
            assert_eq!(
                enumerator::snapshot_string(&disk),
                enumerator::snapshot_string(mem)
            );
        })
        .unwrap();
    assert_eq!(rounds, 7);
    assert!(!enumerator::log_path(&path).exists());
}

#[test]
fn interrupted_run_resumes_to_the_same_store() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tsv");
    // First session stops at fuel 8, as if killed there.
    Enumerator::new(13, FuelSchedule::powers_of_two(8))
        .snapshot_every(2)
        .enumerate_persistent(&path, &mut |_| {})
        .unwrap();
    let (resumed, stats) = Enumerator::new(13, FuelSchedule::powers_of_two(64))
        .enumerate_persistent(&path, &mut |_| {})
        .unwrap();
    let fresh = common::store_l13();
    assert_eq!(
        enumerator::snapshot_string(&resumed),
        enumerator::snapshot_string(&fresh)
    );
    assert!(
        stats.runs < 650,
        "decided programs were re-run: {}",
        stats.runs
    );
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        enumerator::snapshot_string(&fresh)
    );
}

#[test]
fn cap_extension_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tsv");
    let sched = FuelSchedule::powers_of_two(64);
    Enumerator::new(9, sched.clone())
        .enumerate_persistent(&path, &mut |_| {})
        .unwrap();
    let mut first_round = None;
    Enumerator::new(13, sched)
        .snapshot_every(100)
        .enumerate_persistent(&path, &mut |_| {
            if first_round.is_none() {
                first_round = Some(enumerator::load(&path).unwrap());
            }
        })
        .unwrap();
    // Mid-extension the disk state must not claim the new length is decided.
    let mid = first_round.unwrap();
    assert_eq!(mid.max_len(), 13);
    assert!(!mid.is_complete());
    assert_eq!(mid.len(), common::store_l13().len());
    assert_eq!(
        enumerator::snapshot_string(&enumerator::load(&path).unwrap()),
        enumerator::snapshot_string(&common::store_l13())
    );
}

#[test]
fn torn_log_tail_is_ignored() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tsv");
    let mut expected = None;
    Enumerator::new(9, FuelSchedule::powers_of_two(4))
        .snapshot_every(100)
        .enumerate_persistent(&path, &mut |s| {
            expected = Some(enumerator::snapshot_string(s))
        })
        .unwrap();
    // The last round forces a snapshot, so rebuild a log by hand.
    let store = enumerator::load(&path).unwrap();
    let log = enumerator::log_path(&path);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log)
        .unwrap();
    write!(f, "110010011\tH\t1").unwrap();
    drop(f);
    let reloaded = enumerator::load(&path).unwrap();
    assert_eq!(
        enumerator::snapshot_string(&reloaded),
        enumerator::snapshot_string(&store)
    );
    assert_eq!(Some(enumerator::snapshot_string(&store)), expected);
}

#[test]
fn corrupt_snapshot_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tsv");
    Enumerator::new(5, FuelSchedule::powers_of_two(4))
        .enumerate_persistent(&path, &mut |_| {})
        .unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("10011\tH\t0\t1", "10011\tH\t0\tx")).unwrap();
    let err = enumerator::load(&path).unwrap_err();
    assert!(matches!(err, depthlab::Error::Format { .. }), "{err}");
}
