//! On-disk store format.
//!
//! A snapshot is a text file: one header line (fields separated by tabs)
//!
//! ```text
//! #depthlab-store version=1 max_len=13 fuel_horizon=64 aux=
//! ```
//!
//! followed by one tab-separated record per program in standard order:
//! program bits, status (`H`/`C`/`U`), output bits (empty for ε, `-` when
//! not halted) and steps (`-` when not halted).
//!
//! Next to it lives an append-only log (`<snapshot>.log`) holding the
//! decisions of rounds that have not been folded into a snapshot yet. Each
//! round is a block of records closed by
//! `#round max_len=L fuel_horizon=D` (tab-separated); a trailing unclosed block is
//! ignored on load.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::bits::BitString;
use crate::enumerator::store::{EnumStore, Verdict};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "#depthlab-store";
const ROUND: &str = "#round";

pub fn log_path(snapshot: &Path) -> PathBuf {
    let mut s = snapshot.as_os_str().to_owned();
    s.push(".log");
    PathBuf::from(s)
}

fn tmp_path(snapshot: &Path) -> PathBuf {
    let mut s = snapshot.as_os_str().to_owned();
    s.push(".tmp");
    PathBuf::from(s)
}

pub fn header_line(store: &EnumStore) -> String {
    format!(
        "{MAGIC}\tversion={FORMAT_VERSION}\tmax_len={}\tfuel_horizon={}\taux={}",
        store.max_len(),
        store.fuel_horizon(),
        store.aux()
    )
}

pub fn record_line(program: &BitString, verdict: &Verdict) -> String {
    match verdict {
        Verdict::Halted { output, steps } => format!("{program}\tH\t{output}\t{steps}"),
        v => format!("{program}\t{}\t-\t-", v.status_char()),
    }
}

/// Canonical serialization. Byte-identical for equal stores.
pub fn write_snapshot<W: Write>(store: &EnumStore, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", header_line(store))?;
    for (p, v) in store.records() {
        writeln!(w, "{}", record_line(p, v))?;
    }
    w.flush()
}

pub fn snapshot_string(store: &EnumStore) -> String {
    let mut buf = Vec::new();
    write_snapshot(store, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("snapshot is ASCII")
}

/// Writes `<path>.tmp`, syncs it and renames it over `path`, so a failure
/// leaves the previous snapshot untouched.
pub fn save(store: &EnumStore, path: &Path) -> Result<()> {
    let tmp = tmp_path(path);
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    write_snapshot(store, &mut w).map_err(|e| Error::io(&tmp, e))?;
    let file = w
        .into_inner()
        .map_err(|e| Error::io(&tmp, e.into_error()))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

struct LineParser<'a> {
    path: &'a Path,
    line: usize,
}

impl LineParser<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    fn bits(&self, s: &str) -> Result<BitString> {
        s.parse().map_err(|e| self.err(format!("{e}")))
    }

    fn fields<'s>(&self, line: &'s str, prefix: &str) -> Result<Vec<(&'s str, &'s str)>> {
        let mut parts = line.split('\t');
        if parts.next() != Some(prefix) {
            return Err(self.err(format!("expected {prefix} line")));
        }
        parts
            .map(|kv| {
                kv.split_once('=')
                    .ok_or_else(|| self.err(format!("malformed field {kv:?}")))
            })
            .collect()
    }

    fn field<'s>(&self, fields: &[(&str, &'s str)], key: &str) -> Result<&'s str> {
        fields
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| self.err(format!("missing {key}")))
    }

    fn number<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("bad {what} {s:?}")))
    }

    fn record(&self, line: &str) -> Result<(BitString, Verdict)> {
        let cols: Vec<&str> = line.split('\t').collect();
        let [program, status, output, steps] = cols[..] else {
            return Err(self.err(format!("expected 4 fields, found {}", cols.len())));
        };
        let program = self.bits(program)?;
        let verdict = match (status, output, steps) {
            ("H", out, steps) => Verdict::Halted {
                output: self.bits(out)?,
                steps: self.number(steps, "step count")?,
            },
            ("C", "-", "-") => Verdict::NonHaltingCertified,
            ("U", "-", "-") => Verdict::Undecided,
            _ => return Err(self.err(format!("bad status fields {status:?} {output:?} {steps:?}"))),
        };
        if crate::machine::Program::decode(&program).is_err() {
            return Err(self.err(format!("{program} is not a well-formed program")));
        }
        Ok((program, verdict))
    }
}

/// Parses a snapshot from text.
pub fn parse_snapshot(text: &str, path: &Path) -> Result<EnumStore> {
    let mut lines = text.lines();
    let mut parser = LineParser { path, line: 1 };
    let header = lines.next().ok_or_else(|| parser.err("empty store file"))?;
    let fields = parser.fields(header, MAGIC)?;
    let version: u32 = parser.number(parser.field(&fields, "version")?, "version")?;
    if version != FORMAT_VERSION {
        return Err(parser.err(format!("unsupported format version {version}")));
    }
    let max_len: usize = parser.number(parser.field(&fields, "max_len")?, "max_len")?;
    let horizon: u64 = parser.number(parser.field(&fields, "fuel_horizon")?, "fuel_horizon")?;
    let aux = parser.bits(parser.field(&fields, "aux")?)?;
    let mut store = EnumStore::new(max_len, aux);
    store.set_fuel_horizon(horizon);
    for line in lines {
        parser.line += 1;
        if line.is_empty() {
            continue;
        }
        let (p, v) = parser.record(line)?;
        if store.get(&p).is_some() {
            return Err(parser.err(format!("duplicate record for {p}")));
        }
        store.record(p, v).map_err(|e| parser.err(e.to_string()))?;
    }
    Ok(store)
}

/// Loads the snapshot at `path` and replays any closed rounds from its log.
pub fn load(path: &Path) -> Result<EnumStore> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::StoreNotFound(path.into()))
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut store = parse_snapshot(&text, path)?;
    replay_log(&mut store, &log_path(path))?;
    Ok(store)
}

fn replay_log(store: &mut EnumStore, log: &Path) -> Result<()> {
    let file = match File::open(log) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(Error::io(log, e)),
    };
    let mut parser = LineParser { path: log, line: 0 };
    let mut pending = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(log, e))?;
        parser.line += 1;
        if line.starts_with(ROUND) {
            let fields = parser.fields(&line, ROUND)?;
            let max_len: usize = parser.number(parser.field(&fields, "max_len")?, "max_len")?;
            let horizon: u64 =
                parser.number(parser.field(&fields, "fuel_horizon")?, "fuel_horizon")?;
            store.set_max_len(max_len);
            for (p, v) in pending.drain(..) {
                store.record(p, v).map_err(|e| parser.err(e.to_string()))?;
            }
            store.set_fuel_horizon(horizon);
        } else if !line.is_empty() {
            // A torn final line belongs to an unclosed round; drop it.
            match parser.record(&line) {
                Ok(r) => pending.push(r),
                Err(_) => pending.clear(),
            }
        }
    }
    Ok(())
}

/// Appends one round's decisions to the log and syncs it.
pub fn append_round<'a>(
    log: &Path,
    decided: impl IntoIterator<Item = (&'a BitString, &'a Verdict)>,
    max_len: usize,
    fuel_horizon: u64,
) -> Result<()> {
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(log)
        .map_err(|e| Error::io(log, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(log, e);
    for (p, v) in decided {
        writeln!(w, "{}", record_line(p, v)).map_err(io)?;
    }
    writeln!(w, "{ROUND}\tmax_len={max_len}\tfuel_horizon={fuel_horizon}").map_err(io)?;
    let file = w.into_inner().map_err(|e| Error::io(log, e.into_error()))?;
    file.sync_data().map_err(io)
}

pub fn clear_log(log: &Path) -> Result<()> {
    match fs::remove_file(log) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(Error::io(log, e)),
    }
}
