use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use depthlab::ait::KTable;
use depthlab::busybeaver::BbTable;
use depthlab::codes;
use depthlab::depth::{self, Significance};
use depthlab::enumerator::{self, EnumStore, Enumerator, FuelSchedule};
use depthlab::selfcheck::{selfcheck, SelfCheckOptions};
use depthlab::{BitString, DyadicMass, Error};
use serde_json::{Map, Value};

const EXIT_VIOLATION: u8 = 1;
const EXIT_NO_STORE: u8 = 3;
const EXIT_BAD_ARGUMENT: u8 = 4;
const EXIT_BEYOND_HORIZON: u8 = 5;
const EXIT_BAD_STORE: u8 = 6;
const EXIT_DOMAIN: u8 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Bar,
    Prime,
    Nat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestKind {
    /// |p| <= K(p) + b
    Program,
    /// |p| <= K(x) + b
    Output,
}

#[derive(Parser, Debug)]
#[command(
    name = "depthlab",
    version,
    about = "Exact Kolmogorov complexity, logical depth and Busy Beaver tables for a toy prefix-free machine"
)]
struct Cli {
    /// Store snapshot path.
    #[arg(
        long,
        global = true,
        env = "DEPTHLAB_STORE",
        default_value = "store.tsv"
    )]
    store: PathBuf,

    /// Output format for records.
    #[arg(long, global = true, value_enum, default_value = "tsv")]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every program up to --max-len bits and persist the verdicts.
    Enumerate {
        #[arg(long)]
        max_len: usize,
        /// Largest fuel; rounds use powers of two up to it.
        #[arg(long, default_value_t = 1 << 20)]
        fuel_max: u64,
        /// Explicit comma-separated fuel schedule (overrides --fuel-max).
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<u64>>,
        /// Conditional input y.
        #[arg(long, default_value = "")]
        aux: String,
        /// Disable configuration-repeat detection.
        #[arg(long)]
        no_detector: bool,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Rounds between full snapshots; the log covers the rest.
        #[arg(long, default_value_t = 1)]
        snapshot_every: usize,
    },
    /// K(x) at horizon, or K^d(x) with --d. Without --x, every output's K^d breakpoints.
    K {
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        d: Option<u64>,
    },
    /// Q^d(x) with --d, otherwise the breakpoints of d -> Q^d(x).
    Q {
        #[arg(long)]
        x: String,
        #[arg(long)]
        d: Option<u64>,
    },
    /// Logical depth ld2_b(x).
    Depth {
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 0)]
        b: u64,
        #[arg(long, value_enum, default_value = "program")]
        test: TestKind,
    },
    /// Logical depth ld1_eps(x); eps is a dyadic like 1/2 or 3/2^3.
    Depth1 {
        #[arg(long)]
        x: String,
        #[arg(long)]
        eps: String,
    },
    /// ld2_b(x) for b = 0 ..= b_max.
    Curve {
        #[arg(long)]
        x: String,
    },
    /// Consecutive-significance gaps. Without --x, a summary row per output.
    Gaps {
        #[arg(long)]
        x: Option<String>,
    },
    /// Busy Beaver table.
    Bb,
    /// Two-sided Q^d/Q bound report at d = ld2_b(x). Without --x, every defined (x, b).
    Theorem1 {
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        b: Option<u64>,
        /// Slack constant in the left exponent.
        #[arg(long, default_value_t = 0)]
        c: u64,
    },
    /// Exact Kraft mass of the halting programs.
    Kraft,
    /// Number of strings with K(x) <= k.
    Census {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Self-delimiting codes and the integer/string bijection.
    Encode {
        #[arg(long, value_enum)]
        scheme: Scheme,
        /// Decode instead of encode.
        #[arg(long)]
        decode: bool,
        value: String,
    },
    /// Run the invariant suite; exits 1 on any violation.
    Selfcheck {
        /// Skip re-executing halted and certified records.
        #[arg(long)]
        skip_rerun: bool,
    },
}

#[derive(Debug)]
enum Failure {
    BadArgument(String),
    Core(Error),
    Violations(String),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Violations(_) => EXIT_VIOLATION,
            Failure::BadArgument(_) => EXIT_BAD_ARGUMENT,
            Failure::Io(_) => EXIT_BAD_STORE,
            Failure::Core(e) => match e {
                Error::StoreNotFound(_) => EXIT_NO_STORE,
                Error::BeyondHorizon { .. } => EXIT_BEYOND_HORIZON,
                Error::Format { .. } | Error::Io { .. } | Error::VerdictConflict { .. } => {
                    EXIT_BAD_STORE
                }
                _ => EXIT_DOMAIN,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::BadArgument(m) | Failure::Violations(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
            Failure::Io(e) => e.to_string(),
        }
    }
}

fn parse_bits(flag: &str, s: &str) -> Result<BitString, Failure> {
    s.parse()
        .map_err(|e| Failure::BadArgument(format!("--{flag}: {e}")))
}

/// Record writer. TSV rows are either plain tables or a bare value followed
/// by `key=value` fields; JSON lines always carry the field names.
struct Out<W: Write> {
    w: W,
    format: Format,
}

impl<W: Write> Out<W> {
    fn table(&mut self, fields: &[(&str, String)]) -> io::Result<()> {
        match self.format {
            Format::Tsv => {
                let line: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
                writeln!(self.w, "{}", line.join("\t"))
            }
            Format::Jsonl => self.json(fields),
        }
    }

    fn summary(&mut self, fields: &[(&str, String)]) -> io::Result<()> {
        match self.format {
            Format::Tsv => {
                let mut parts = vec![fields[0].1.clone()];
                parts.extend(fields[1..].iter().map(|(k, v)| format!("{k}={v}")));
                writeln!(self.w, "{}", parts.join("\t"))
            }
            Format::Jsonl => self.json(fields),
        }
    }

    fn json(&mut self, fields: &[(&str, String)]) -> io::Result<()> {
        let obj: Map<String, Value> = fields
            .iter()
            .map(|(k, v)| (k.to_string(), Value::String(v.clone())))
            .collect();
        writeln!(self.w, "{}", Value::Object(obj))
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout().lock();
    let mut out = Out {
        w: BufWriter::new(stdout),
        format: cli.format,
    };
    let result = run(&cli, &mut out);
    let flushed = out.w.flush();
    match result.and(flushed.map_err(Failure::from)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("depthlab: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn load(cli: &Cli) -> Result<EnumStore, Failure> {
    Ok(enumerator::load(&cli.store)?)
}

fn run<W: Write>(cli: &Cli, out: &mut Out<W>) -> Result<(), Failure> {
    match &cli.command {
        Command::Enumerate {
            max_len,
            fuel_max,
            schedule,
            aux,
            no_detector,
            workers,
            snapshot_every,
        } => {
            let schedule = match schedule {
                Some(v) => FuelSchedule::new(v.clone())?,
                None => FuelSchedule::powers_of_two(*fuel_max),
            };
            let aux = parse_bits("aux", aux)?;
            let e = Enumerator::new(*max_len, schedule)
                .aux(aux)
                .detect_cycles(!no_detector)
                .workers(*workers)
                .snapshot_every(*snapshot_every);
            let (store, stats) = e.enumerate_persistent(&cli.store, &mut |_| {})?;
            let t = store.decided_fraction();
            out.summary(&[
                ("store", cli.store.display().to_string()),
                ("max_len", store.max_len().to_string()),
                ("fuel_horizon", store.fuel_horizon().to_string()),
                ("halted", t.halted.to_string()),
                ("certified", t.certified.to_string()),
                ("undecided", t.undecided.to_string()),
                ("complete", store.is_complete().to_string()),
                ("runs", stats.runs.to_string()),
            ])?;
        }
        Command::K { x, d } => {
            let store = load(cli)?;
            let table = KTable::build(&store);
            match (x, d) {
                (Some(x), None) => {
                    let x = parse_bits("x", x)?;
                    let kh = table.k_horizon(&x);
                    out.summary(&[
                        ("k", opt(kh.k)),
                        ("witness", opt(kh.witness)),
                        ("exact", kh.exact.to_string()),
                    ])?;
                }
                (Some(x), Some(d)) => {
                    let x = parse_bits("x", x)?;
                    let k = table.k_bounded(&x, *d)?;
                    out.table(&[
                        ("x", x.to_string()),
                        ("d", d.to_string()),
                        ("k", opt(k)),
                        ("exact", "true".into()),
                    ])?;
                }
                (None, d) => {
                    if let Some(d) = d {
                        return Err(Failure::BadArgument(format!("--d {d} needs --x")));
                    }
                    for x in table.outputs() {
                        let row = table.k_row(x);
                        for (d, k) in &row.kd {
                            out.table(&[
                                ("x", x.to_string()),
                                ("d", d.to_string()),
                                ("k", k.to_string()),
                                ("exact", "true".into()),
                            ])?;
                        }
                    }
                }
            }
        }
        Command::Q { x, d } => {
            let x = parse_bits("x", x)?;
            let store = load(cli)?;
            let table = KTable::build(&store);
            match d {
                Some(d) => {
                    let q = table.q_bounded(&x, *d)?;
                    out.table(&[
                        ("x", x.to_string()),
                        ("d", d.to_string()),
                        ("q", q.to_string()),
                        ("exact", "true".into()),
                    ])?;
                }
                None => {
                    let row = table.q_row(&x);
                    for (d, q) in &row.qd {
                        out.table(&[
                            ("x", x.to_string()),
                            ("d", d.to_string()),
                            ("q", q.to_string()),
                            ("exact", "true".into()),
                        ])?;
                    }
                    // Descriptive only: -log2 Q next to K.
                    let neg_log = if row.q_horizon.is_zero() {
                        "-".to_string()
                    } else {
                        format!("{:.6}", -row.q_horizon.to_f64_lossy().log2())
                    };
                    out.summary(&[
                        ("q_horizon", row.q_horizon.to_string()),
                        ("neg_log2_q", neg_log),
                        ("k", opt(table.k(&x))),
                        ("exact", row.exact.to_string()),
                    ])?;
                }
            }
        }
        Command::Depth { x, b, test } => {
            let x = parse_bits("x", x)?;
            let store = load(cli)?;
            let table = KTable::build(&store);
            let sig = match test {
                TestKind::Program => Significance::ProgramComplexity,
                TestKind::Output => Significance::OutputComplexity,
            };
            let d = depth::ld2_with(&x, *b, &table, sig);
            out.summary(&[
                ("ld2", opt(d.steps)),
                ("witness", opt(d.witness)),
                ("exact", d.exact.to_string()),
            ])?;
        }
        Command::Depth1 { x, eps } => {
            let x = parse_bits("x", x)?;
            let eps: DyadicMass = eps
                .parse()
                .map_err(|e| Failure::BadArgument(format!("--eps: {e}")))?;
            let store = load(cli)?;
            let table = KTable::build(&store);
            let r = depth::ld1(&x, &eps, &table)?;
            out.summary(&[("ld1", opt(r.steps)), ("exact", r.exact.to_string())])?;
        }
        Command::Curve { x } => {
            let x = parse_bits("x", x)?;
            let store = load(cli)?;
            let table = KTable::build(&store);
            let curve = depth::depth_curve(&x, &table);
            for p in &curve.points {
                out.table(&[
                    ("x", x.to_string()),
                    ("b", p.b.to_string()),
                    ("ld2", opt(p.ld2)),
                    ("witness", opt(p.witness.as_ref())),
                    ("ld2_output_test", opt(p.ld2_output_test)),
                    ("exact", curve.exact.to_string()),
                ])?;
            }
        }
        Command::Gaps { x } => {
            let store = load(cli)?;
            let table = KTable::build(&store);
            match x {
                Some(x) => {
                    let x = parse_bits("x", x)?;
                    let report = depth::gap_report(&depth::depth_curve(&x, &table));
                    for (b, g) in &report.gaps {
                        out.table(&[
                            ("x", x.to_string()),
                            ("b", b.to_string()),
                            ("gap", g.to_string()),
                        ])?;
                    }
                    out.summary(&[
                        ("h", report.h.to_string()),
                        ("i_max", report.i_max.to_string()),
                        ("exact", report.exact.to_string()),
                    ])?;
                }
                None => {
                    for x in table.outputs() {
                        let curve = depth::depth_curve(x, &table);
                        let report = depth::gap_report(&curve);
                        out.table(&[
                            ("x", x.to_string()),
                            ("ld2_0", opt(curve.at(0))),
                            ("h", report.h.to_string()),
                            ("i_max", report.i_max.to_string()),
                            ("b_max", curve.b_max.to_string()),
                            ("exact", report.exact.to_string()),
                        ])?;
                    }
                }
            }
        }
        Command::Bb => {
            let store = load(cli)?;
            let table = BbTable::build(&store);
            for r in &table.rows {
                out.table(&[
                    ("n", r.n.to_string()),
                    ("value", r.value.to_string()),
                    ("champion", r.champion.to_string()),
                    ("exact", r.exact.to_string()),
                ])?;
            }
        }
        Command::Theorem1 { x, b, c } => {
            let store = load(cli)?;
            let table = KTable::build(&store);
            let targets: Vec<(BitString, u64)> = match (x, b) {
                (Some(x), Some(b)) => vec![(parse_bits("x", x)?, *b)],
                (Some(x), None) => {
                    let x = parse_bits("x", x)?;
                    let curve = depth::depth_curve(&x, &table);
                    curve
                        .points
                        .iter()
                        .filter(|p| p.ld2.is_some())
                        .map(|p| (x.clone(), p.b))
                        .collect()
                }
                (None, _) => table
                    .outputs()
                    .into_iter()
                    .flat_map(|x| {
                        let curve = depth::depth_curve(x, &table);
                        curve
                            .points
                            .into_iter()
                            .filter(|p| p.ld2.is_some())
                            .map(move |p| (x.clone(), p.b))
                    })
                    .filter(|(_, bb)| b.is_none_or(|b| b == *bb))
                    .collect(),
            };
            for (x, b) in targets {
                let r = depth::theorem1_report(&x, b, *c, &table)?;
                out.table(&[
                    ("x", r.x.to_string()),
                    ("b", r.b.to_string()),
                    ("d", r.d.to_string()),
                    ("ratio", r.ratio.to_string()),
                    ("left_threshold", r.left_threshold.to_string()),
                    ("right_threshold", r.right_threshold.to_string()),
                    ("left_holds", r.left_holds.to_string()),
                    ("right_holds", r.right_holds.to_string()),
                    ("exact", r.exact.to_string()),
                ])?;
            }
        }
        Command::Kraft => {
            let store = load(cli)?;
            let mass = store.kraft_mass();
            out.summary(&[
                ("kraft", mass.to_string()),
                ("le_one", (mass <= DyadicMass::one()).to_string()),
                ("complete", store.is_complete().to_string()),
            ])?;
        }
        Command::Census { k } => {
            let store = load(cli)?;
            let table = KTable::build(&store);
            let ks: Vec<usize> = match k {
                Some(k) => vec![*k],
                None => (0..=store.max_len()).collect(),
            };
            for k in ks {
                let c = table.census(k);
                let bound = if k < 64 {
                    (1u64 << k).to_string()
                } else {
                    format!("2^{k}")
                };
                out.table(&[
                    ("k", k.to_string()),
                    ("count", c.count.to_string()),
                    ("bound", bound),
                    ("exact", c.exact.to_string()),
                ])?;
            }
        }
        Command::Encode {
            scheme,
            decode,
            value,
        } => {
            let result = match (scheme, decode) {
                (Scheme::Nat, false) => {
                    let n: u64 = value.parse().map_err(|_| {
                        Failure::BadArgument(format!("not a natural number: {value:?}"))
                    })?;
                    codes::nat_to_string(n).to_string()
                }
                (Scheme::Nat, true) => {
                    let s = parse_bits("value", value)?;
                    codes::string_to_nat(&s)
                        .ok_or_else(|| {
                            Failure::BadArgument("string too long for a 64-bit integer".into())
                        })?
                        .to_string()
                }
                (Scheme::Bar, false) => codes::bar_encode(&parse_bits("value", value)?).to_string(),
                (Scheme::Prime, false) => {
                    codes::prime_encode(&parse_bits("value", value)?).to_string()
                }
                (Scheme::Bar, true) => codes::bar_decode(&parse_bits("value", value)?)
                    .map_err(|e| Failure::BadArgument(e.to_string()))?
                    .to_string(),
                (Scheme::Prime, true) => codes::prime_decode(&parse_bits("value", value)?)
                    .map_err(|e| Failure::BadArgument(e.to_string()))?
                    .to_string(),
            };
            out.table(&[("value", result)])?;
        }
        Command::Selfcheck { skip_rerun } => {
            let store = load(cli)?;
            let report = selfcheck(&store, SelfCheckOptions { rerun: !skip_rerun });
            for c in &report.checks {
                out.table(&[
                    ("check", c.name.to_string()),
                    (
                        "status",
                        if c.passed() { "pass" } else { "FAIL" }.to_string(),
                    ),
                    ("checked", c.checked.to_string()),
                    ("violations", c.violations.len().to_string()),
                    ("notes", c.notes.len().to_string()),
                ])?;
                for v in c.violations.iter().take(5) {
                    eprintln!("  {}: {v}", c.name);
                }
            }
            if !report.passed() {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed())
                    .map(|c| c.name)
                    .collect();
                return Err(Failure::Violations(format!(
                    "invariant violations in: {}",
                    failed.join(", ")
                )));
            }
        }
    }
    Ok(())
}
