mod fragment;
mod output;

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use tmatrix::activeset::build_active_set;
use tmatrix::elements::DEFAULT_COLUMN_CEILING;
use tmatrix::method1::run_method1;
use tmatrix::primes::MAX_SIEVE_LIMIT;
use tmatrix::sequences::nu;
use tmatrix::verifier::{self, bench_scaling, Checks, OutcomeReport, RangeSummary};
use tmatrix::{PrimeOracle, TMatrix};

use crate::fragment::Span;
use crate::output::{OutputRecord, Sink};

/// Covers `(m+1)²` for every `m ≤ 10⁴`.
const DEFAULT_PI_LIMIT: u64 = 110_000_000;

/// Values of `m` evaluated between two flushes of `verify` output.
const VERIFY_CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "tmatrix", version, about = "Defining elements of the 6h±1 matrix and primes between squares")]
struct Cli {
    /// Output format; `json` writes one record per line.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Append output to FILE instead of writing to stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Worker threads for `verify` (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Largest value covered by the prime-counting sieve.
    #[arg(long, global = true, default_value_t = DEFAULT_PI_LIMIT)]
    pi_limit: u64,

    /// Most columns a single row scan may visit.
    #[arg(long, global = true, default_value_t = DEFAULT_COLUMN_CEILING)]
    column_ceiling: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Upper defining element D(m⁴) and the prime it yields.
    D4 {
        m: u64,
        /// Also report the row indices k₁ and j.
        #[arg(long)]
        rows: bool,
    },
    /// Active set, critical element and all primes in (m², (m+1)²).
    ActiveSet { m: u64 },
    /// Classify every m in [LO, HI].
    Verify {
        lo: u64,
        hi: u64,
        /// Skip values of m already recorded in the --out file.
        #[arg(long)]
        resume: bool,
        /// Also cross-check against the global operators and the sieve's prime list.
        #[arg(long)]
        deep: bool,
    },
    /// Render a block of the matrix.
    Fragment {
        /// Row index or inclusive range, e.g. `9` or `1..2`.
        #[arg(long)]
        rows: Span,
        /// Column index or inclusive range.
        #[arg(long)]
        cols: Span,
        /// Mark the active set (H) and critical element (C) of this m.
        #[arg(long, value_name = "M")]
        annotate: Option<u64>,
    },
    /// Count of 6h±1 naturals up to X; a fractional part is dropped.
    Nu { x: String },
    /// Time the four-step method at each m and fit a growth exponent.
    Bench { points: Vec<u64> },
}

#[derive(Debug)]
pub enum CliError {
    Lib(tmatrix::Error),
    Io(io::Error),
    Usage(String),
    /// Records were written, but some m has no prime in (m², (m+1)²).
    Counterexample(Vec<u64>),
}

impl From<tmatrix::Error> for CliError {
    fn from(e: tmatrix::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use tmatrix::Error as E;
        match self {
            CliError::Lib(E::Domain(_) | E::NotInRow { .. }) | CliError::Usage(_) => 2,
            CliError::Lib(E::Range { .. } | E::Resource(_)) | CliError::Io(_) => 3,
            CliError::Lib(_) | CliError::Counterexample(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Usage(s) => write!(f, "{s}"),
            CliError::Counterexample(ms) => {
                write!(f, "no prime in (m², (m+1)²) for m = {ms:?}")
            }
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tmatrix: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Matrix context whose sieve covers `need` when that fits under the
/// configured limit; otherwise primality falls back to Miller-Rabin.
fn context(cli: &Cli, need: Option<u128>) -> Result<TMatrix> {
    if cli.pi_limit > MAX_SIEVE_LIMIT {
        return Err(tmatrix::Error::Range {
            what: format!("--pi-limit {}", cli.pi_limit),
            limit: MAX_SIEVE_LIMIT.to_string(),
        }
        .into());
    }
    let tm = match need {
        Some(n) if n <= cli.pi_limit as u128 => TMatrix::new(Arc::new(PrimeOracle::new(n as u64)?)),
        _ => TMatrix::without_oracle(),
    };
    Ok(tm.with_column_ceiling(cli.column_ceiling))
}

fn square_after(m: u64, by: u64) -> u128 {
    let v = m as u128 + by as u128;
    v * v
}

fn open_sink(cli: &Cli) -> Result<Sink> {
    match &cli.out {
        Some(path) => Sink::append(path, cli.format),
        None => Ok(Sink::stdout(cli.format)),
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::D4 { m, rows } => {
            let tm = context(&cli, Some(square_after(*m, 2)))?;
            let r = run_method1(&tm, *m, *rows)?;
            open_sink(&cli)?.method1(&r)
        }
        Command::ActiveSet { m } => {
            let tm = context(&cli, Some(square_after(*m, 2)))?;
            let hs = build_active_set(&tm, *m)?;
            open_sink(&cli)?.active_set(&hs)
        }
        Command::Verify { lo, hi, resume, deep } => verify(&cli, *lo, *hi, *resume, *deep),
        Command::Fragment { rows, cols, annotate } => {
            fragment::check_size(rows, cols)?;
            let widest = tmatrix::wheel(cols.hi) + 1;
            let need = annotate.map_or(widest, |m| widest.max(square_after(m, 2)));
            let tm = context(&cli, Some(need))?;
            let grid = fragment::build(&tm, rows, cols, *annotate)?;
            open_sink(&cli)?.fragment(&grid)
        }
        Command::Nu { x } => {
            let v = parse_decimal(x)?;
            open_sink(&cli)?.nu(x, nu(v))
        }
        Command::Bench { points } => {
            let tm = context(&cli, None)?;
            let report = bench_scaling(&tm, points)?;
            open_sink(&cli)?.bench(&report)
        }
    }
}

/// Integer part of a non-negative decimal literal, without going through floats.
fn parse_decimal(s: &str) -> Result<u128> {
    let bad = || CliError::Usage(format!("expected a non-negative decimal number, got {s:?}"));
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if (int.is_empty() && frac.is_empty()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    if int.is_empty() {
        return Ok(0);
    }
    if !int.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    int.parse().map_err(|_| {
        CliError::Lib(tmatrix::Error::Range {
            what: format!("x = {s}"),
            limit: u128::MAX.to_string(),
        })
    })
}

/// Reports already present in a previous run's JSONL output, keyed by m.
fn load_previous(path: &Path, lo: u64, hi: u64) -> Result<BTreeMap<u64, OutcomeReport>> {
    let mut done = BTreeMap::new();
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(e.into()),
    };
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // An interrupted run may leave a partial last line.
        let Ok(rec) = serde_json::from_str::<OutputRecord<serde_json::Value>>(&line) else {
            eprintln!("tmatrix: skipping unreadable line {} of {}", i + 1, path.display());
            continue;
        };
        if rec.command != "verify" {
            continue;
        }
        if let Some(m) = rec.m.filter(|m| (lo..=hi).contains(m)) {
            done.insert(m, serde_json::from_value(rec.payload)?);
        }
    }
    Ok(done)
}

/// Makes sure appended records start on a fresh line.
fn terminate_last_line(path: &Path) -> Result<()> {
    let Ok(mut f) = OpenOptions::new().read(true).append(true).open(path) else {
        return Ok(());
    };
    let len = f.metadata()?.len();
    if len > 0 {
        f.seek(SeekFrom::Start(len - 1))?;
        let mut last = [0u8];
        f.read_exact(&mut last)?;
        if last[0] != b'\n' {
            f.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn verify(cli: &Cli, lo: u64, hi: u64, resume: bool, deep: bool) -> Result<()> {
    if lo < 3 || lo > hi {
        return Err(CliError::Usage(format!("verify needs 3 ≤ LO ≤ HI, got {lo} {hi}")));
    }
    let need = square_after(hi, 1);
    if need > cli.pi_limit as u128 {
        return Err(tmatrix::Error::Range {
            what: format!("(HI+1)² = {need}"),
            limit: format!("--pi-limit {}", cli.pi_limit),
        }
        .into());
    }
    let mut previous = BTreeMap::new();
    if resume {
        let Some(path) = &cli.out else {
            return Err(CliError::Usage("--resume needs --out FILE".into()));
        };
        if cli.format != Format::Json {
            return Err(CliError::Usage("--resume needs --format json".into()));
        }
        previous = load_previous(path, lo, hi)?;
        terminate_last_line(path)?;
    }

    let tm = context(cli, Some(square_after(hi, 2).min(cli.pi_limit as u128).max(need)))?;
    verifier::check_range(&tm, lo, hi)?;
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = verifier::build_pool(jobs)?;
    let checks = Checks { deep };

    let mut sink = open_sink(cli)?;
    let todo: Vec<u64> = (lo..=hi).filter(|m| !previous.contains_key(m)).collect();
    let mut timing = Vec::new();
    let mut fresh = Vec::with_capacity(todo.len());
    for chunk in todo.chunks(VERIFY_CHUNK) {
        let started = Instant::now();
        let reports = verifier::evaluate_many(&tm, chunk, checks, &pool)?;
        timing.push((chunk[0], started.elapsed()));
        for r in &reports {
            sink.outcome(r)?;
        }
        sink.flush()?;
        fresh.extend(reports);
    }

    let mut summary = RangeSummary::new(lo, hi);
    let mut all: Vec<&OutcomeReport> = previous.values().chain(fresh.iter()).collect();
    all.sort_by_key(|r| r.m);
    for r in &all {
        summary.record(r);
    }
    summary.timing = timing;
    sink.summary(&summary)?;
    sink.flush()?;
    if cli.format == Format::Text {
        eprintln!(
            "evaluated {} values of m in {:.3} s ({} resumed)",
            fresh.len(),
            summary.total_time().as_secs_f64(),
            previous.len()
        );
    }
    if !summary.legendre_counterexamples.is_empty() {
        return Err(CliError::Counterexample(summary.legendre_counterexamples));
    }
    Ok(())
}
