use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fpl_core::analytic::{
    arc_grid, asymptotic_ratio, minor_arc_scan, minor_arc_tau, sawtooth_bound, sawtooth_error, scan_s,
};
use fpl_core::counting::{
    moment4_count, rep_count, rep_spectrum, robert_sargos_count, scaling_fit, CountMethod, CountOptions,
};
use fpl_core::exponent::{
    eval_word, max_c_type_i, parse_word, search_max_c, ExponentPair, TypeIConstraint, MAX_SEARCH_LEN,
};
use fpl_core::floorpow::PrecisionPolicy;
use fpl_core::table::{build_table, limit_for_target, FloorPowerTable, WeightMode};
use fpl_core::{Error, Rational};

mod verify;

#[derive(Parser)]
#[command(name = "fpl", version, about = "Exact counts and exponential sums for sums of floor prime powers")]
struct Cli {
    #[command(flatten)]
    cfg: RunConfig,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
pub struct RunConfig {
    /// Exponent c, as a decimal (1.5) or a fraction (3/2)
    #[arg(long = "c", global = true)]
    c: Option<String>,
    /// Prime bound P
    #[arg(long = "P", global = true, conflicts_with = "n")]
    p: Option<u64>,
    /// Target N
    #[arg(long = "N", id = "n", global = true)]
    n: Option<u64>,
    /// Number of summands
    #[arg(long = "s", global = true)]
    s: Option<usize>,
    #[arg(long, global = true, default_value_t = 0.01)]
    epsilon: f64,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Memory cap in bytes for convolutions and pair enumerations
    #[arg(long = "mem-cap", global = true, default_value_t = 8_000_000_000)]
    mem_cap: u64,
    /// Write results here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for randomized suites
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a process word, or search for the best one
    Exppair(ExppairArgs),
    /// Build a table of [p^c]
    Table(TableArgs),
    /// Count representations of N (or of every N in a range)
    Count(CountArgs),
    /// Counts for every N up to the target
    Spectrum(WeightArgs),
    /// Fourth-moment equal-sum counts over dyadic ranges
    Moment4(Moment4Args),
    /// Near-equal sums of two c-th powers
    RobertSargos(RobertSargosArgs),
    /// |S(alpha)| over the minor arcs
    Scan(ScanArgs),
    /// Ratio of the weighted count to the main term
    Asymptotic(AsymptoticArgs),
    /// Error of the truncated sawtooth expansion against its bound
    Sawtooth(SawtoothArgs),
    /// Run an acceptance suite
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ExppairArgs {
    /// Word in A and B, applied right to left to (0,1), e.g. "A^3BABABABABABAB"
    #[arg(long)]
    word: Option<String>,
    /// Search all words up to --max-len for the largest admissible c
    #[arg(long, conflicts_with = "word")]
    search: bool,
    #[arg(long = "max-len", default_value_t = 16)]
    max_len: usize,
    #[arg(long)]
    h0: Option<String>,
    #[arg(long)]
    m0: Option<String>,
    #[arg(long)]
    theta: Option<String>,
}

#[derive(Args)]
struct WeightArgs {
    #[arg(long, default_value = "log-prime")]
    weights: WeightMode,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    weights: WeightArgs,
    /// Write the binary table format to --output
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct CountArgs {
    #[command(flatten)]
    weights: WeightArgs,
    /// Last N of a range starting at --N
    #[arg(long)]
    to: Option<u64>,
    #[arg(long, default_value = "dense")]
    method: CountMethod,
}

#[derive(Args)]
struct Moment4Args {
    /// Dyadic range sizes X
    #[arg(long = "X", value_delimiter = ',', required = true)]
    x: Vec<u64>,
    /// Also report the log-prime weighted moment over primes
    #[arg(long)]
    primes: bool,
}

#[derive(Args)]
struct RobertSargosArgs {
    /// Range sizes Y
    #[arg(long = "Y", value_delimiter = ',', required = true)]
    y: Vec<u64>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 100_000)]
    grid: usize,
}

#[derive(Args)]
struct AsymptoticArgs {
    /// Explicit list of N (otherwise --steps evenly spaced points up to --N)
    #[arg(long, value_delimiter = ',')]
    points: Vec<u64>,
    #[arg(long, default_value_t = 10)]
    steps: u64,
}

#[derive(Args)]
struct SawtoothArgs {
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long = "H", value_delimiter = ',', default_values_t = [10u64, 100, 1000])]
    h: Vec<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    suite: verify::Suite,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Check(String),
    Resource(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::MemoryCap { .. } => Failure::Resource(e.to_string()),
            Error::Parse { .. }
            | Error::InvalidArgument(_)
            | Error::InvalidSummands(_)
            | Error::TableDoesNotCover { .. }
            | Error::DegeneratePair => Failure::Usage(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure::Other(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Failure {
        Failure::Other(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Failure {
        Failure::Other(e.to_string())
    }
}

pub type Outcome<T = ()> = std::result::Result<T, Failure>;

impl RunConfig {
    pub fn c_exact(&self) -> Outcome<Rational> {
        let text = self.c.as_deref().ok_or_else(|| Failure::Usage("--c is required".into()))?;
        let c: Rational = text.parse()?;
        if c <= 1 {
            return Err(Failure::Usage(format!("--c must exceed 1, got {text}")));
        }
        Ok(c)
    }

    pub fn c(&self) -> Outcome<f64> {
        Ok(self.c_exact()?.to_f64())
    }

    pub fn c_or(&self, default: &str) -> Outcome<f64> {
        if self.c.is_some() {
            self.c()
        } else {
            Ok(default.parse::<Rational>()?.to_f64())
        }
    }

    pub fn s(&self) -> Outcome<usize> {
        self.s.ok_or_else(|| Failure::Usage("--s is required".into()))
    }

    pub fn policy(&self) -> Outcome<PrecisionPolicy> {
        Ok(PrecisionPolicy::from_env()?)
    }

    pub fn count_options(&self) -> Outcome<CountOptions> {
        Ok(CountOptions {
            memory_cap: self.mem_cap,
            policy: self.policy()?,
        })
    }

    pub fn target(&self) -> Outcome<u64> {
        self.n.ok_or_else(|| Failure::Usage("--N is required".into()))
    }

    /// The prime bound: `--P`, or the least bound covering `--N`.
    pub fn prime_bound(&self, c: f64) -> Outcome<u64> {
        match (self.p, self.n) {
            (Some(p), _) => Ok(p),
            (None, Some(n)) => Ok(limit_for_target(n, c, &self.policy()?)?),
            (None, None) => Err(Failure::Usage("one of --P or --N is required".into())),
        }
    }

    pub fn table_for(&self, c: f64, bound: u64, mode: WeightMode) -> Outcome<FloorPowerTable> {
        Ok(build_table(c, bound, mode, &self.policy()?)?)
    }

    fn sink(&self) -> Outcome<Box<dyn Write>> {
        Ok(match &self.output {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    pub fn emit<T: Serialize>(&self, rows: &[T]) -> Outcome {
        let mut out = self.sink()?;
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                for r in rows {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, rows)?;
                writeln!(out)?;
                out.flush()?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct PairReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    word: Option<String>,
    kappa: Rational,
    lambda: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_max: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_max_decimal: Option<String>,
}

fn constraint(args: &ExppairArgs) -> Outcome<TypeIConstraint> {
    let base = TypeIConstraint::standard();
    let pick = |s: &Option<String>, d: Rational| -> Outcome<Rational> {
        Ok(match s {
            Some(t) => t.parse()?,
            None => d,
        })
    };
    Ok(TypeIConstraint::new(
        pick(&args.h0, base.h0.clone())?,
        pick(&args.m0, base.m0.clone())?,
        pick(&args.theta, base.theta.clone())?,
    )?)
}

fn cmd_exppair(cfg: &RunConfig, args: &ExppairArgs) -> Outcome {
    let cons = constraint(args)?;
    let (word, pair): (Option<String>, ExponentPair) = if args.search {
        if args.max_len > MAX_SEARCH_LEN {
            return Err(Failure::Usage(format!("--max-len is limited to {MAX_SEARCH_LEN}")));
        }
        let r = search_max_c(&cons, args.max_len)?;
        (Some(r.word.to_string()), r.pair)
    } else {
        let text = args
            .word
            .as_deref()
            .ok_or_else(|| Failure::Usage("exppair needs --word or --search".into()))?;
        let w = parse_word(text)?;
        (None, eval_word(&w))
    };
    let c_max = match max_c_type_i(&pair, &cons) {
        Ok(c) => Some(c),
        Err(Error::DegeneratePair) => {
            eprintln!("note: degenerate pair: constraint independent of c");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let report = PairReport {
        c_max_decimal: c_max.as_ref().map(|c| c.to_decimal(6)),
        word,
        kappa: pair.kappa,
        lambda: pair.lambda,
        c_max,
    };
    let mut out = cfg.sink()?;
    match cfg.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut line = String::new();
            if let Some(w) = &report.word {
                line.push_str(&format!("word={} ", if w.is_empty() { "\"\"" } else { w }));
            }
            line.push_str(&format!("kappa={} lambda={}", report.kappa, report.lambda));
            if let (Some(c), Some(d)) = (&report.c_max, &report.c_max_decimal) {
                line.push_str(&format!(" c_max={c} (≈{d})"));
            }
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_table(cfg: &RunConfig, args: &TableArgs) -> Outcome {
    let c = cfg.c()?;
    let table = cfg.table_for(c, cfg.prime_bound(c)?, args.weights.weights)?;
    if args.binary {
        let path = cfg
            .output
            .as_ref()
            .ok_or_else(|| Failure::Usage("--binary needs --output".into()))?;
        let mut w = BufWriter::new(File::create(path)?);
        table.write_binary(&mut w)?;
        w.flush()?;
        return Ok(());
    }
    cfg.emit(&table.entries)
}

fn cmd_count(cfg: &RunConfig, args: &CountArgs) -> Outcome {
    let c = cfg.c()?;
    let s = cfg.s()?;
    let n = cfg.target()?;
    let opts = cfg.count_options()?;
    let last = args.to.unwrap_or(n);
    if last < n {
        return Err(Failure::Usage("--to must not be below --N".into()));
    }
    let table = cfg.table_for(c, limit_for_target(last, c, &opts.policy)?, args.weights.weights)?;
    let rows = if last == n {
        vec![rep_count(&table, n, s, args.method, &opts)?]
    } else if args.method == CountMethod::DenseConvolution {
        rep_spectrum(&table, s, last, &opts)?.split_off(n as usize)
    } else {
        (n..=last)
            .map(|m| rep_count(&table, m, s, args.method, &opts))
            .collect::<Result<_, _>>()?
    };
    cfg.emit(&rows)
}

fn cmd_spectrum(cfg: &RunConfig, args: &WeightArgs) -> Outcome {
    let c = cfg.c()?;
    let s = cfg.s()?;
    let n = cfg.target()?;
    let opts = cfg.count_options()?;
    let table = cfg.table_for(c, limit_for_target(n, c, &opts.policy)?, args.weights)?;
    cfg.emit(&rep_spectrum(&table, s, n, &opts)?)
}

#[derive(Serialize)]
pub struct SizeCount {
    pub size: u64,
    pub count: u128,
}

fn report_fit(series: &[SizeCount]) {
    if series.len() >= 3 && series.iter().all(|r| r.count > 0) {
        let pts: Vec<(f64, f64)> = series.iter().map(|r| (r.size as f64, r.count as f64)).collect();
        if let Ok(e) = scaling_fit(&pts) {
            eprintln!("fitted exponent {e:.4}");
        }
    }
}

fn cmd_moment4(cfg: &RunConfig, args: &Moment4Args) -> Outcome {
    let c = cfg.c()?;
    let opts = cfg.count_options()?;
    let table = if args.primes {
        let top = args.x.iter().max().copied().unwrap_or(0);
        Some(cfg.table_for(c, 2 * top, WeightMode::LogPrime)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for &x in &args.x {
        let m = moment4_count(x, c, args.primes, table.as_ref(), &opts)?;
        if let Some(w) = m.weighted {
            eprintln!("X={x} weighted prime moment {w:.6e}");
        }
        rows.push(SizeCount { size: x, count: m.count });
    }
    report_fit(&rows);
    cfg.emit(&rows)
}

fn cmd_robert_sargos(cfg: &RunConfig, args: &RobertSargosArgs) -> Outcome {
    let c = cfg.c()?;
    let opts = cfg.count_options()?;
    let rows = args
        .y
        .iter()
        .map(|&y| {
            robert_sargos_count(y, c, args.gamma, &opts).map(|r| SizeCount {
                size: y,
                count: r.count,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    report_fit(&rows);
    cfg.emit(&rows)
}

#[derive(Serialize)]
struct ScanRow {
    alpha: f64,
    re: f64,
    im: f64,
    abs: f64,
}

fn cmd_scan(cfg: &RunConfig, args: &ScanArgs) -> Outcome {
    let c = cfg.c()?;
    let table = cfg.table_for(c, cfg.prime_bound(c)?, WeightMode::LogPrime)?;
    let report = minor_arc_scan(&table, cfg.epsilon, args.grid)?;
    eprintln!("{}", serde_json::to_string(&report)?);
    let tau = minor_arc_tau(table.limit, c, cfg.epsilon);
    let rows: Vec<ScanRow> = scan_s(&table, &arc_grid(tau, args.grid))?
        .into_iter()
        .map(|s| ScanRow {
            alpha: s.alpha,
            re: s.value.re,
            im: s.value.im,
            abs: s.value.norm(),
        })
        .collect();
    cfg.emit(&rows)
}

fn cmd_asymptotic(cfg: &RunConfig, args: &AsymptoticArgs) -> Outcome {
    let c = cfg.c()?;
    let s = cfg.s()?;
    let opts = cfg.count_options()?;
    let points = if args.points.is_empty() {
        let n = cfg.target()?;
        if args.steps == 0 {
            return Err(Failure::Usage("--steps must be positive".into()));
        }
        (1..=args.steps).map(|k| k * n / args.steps).filter(|&m| m >= 2).collect()
    } else {
        args.points.clone()
    };
    let top = points.iter().max().copied().unwrap_or(2);
    let table = cfg.table_for(c, limit_for_target(top, c, &opts.policy)?, WeightMode::LogPrime)?;
    cfg.emit(&asymptotic_ratio(&table, &points, s, &opts)?)
}

#[derive(Serialize)]
pub struct SawtoothRow {
    #[serde(rename = "H")]
    pub h: u64,
    pub samples: usize,
    pub max_ratio: f64,
}

pub fn sawtooth_rows(seed: u64, samples: usize, hs: &[u64]) -> Outcome<Vec<SawtoothRow>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = vec![0.0f64; hs.len()];
    for _ in 0..samples {
        let x: f64 = loop {
            let x = rng.gen_range(-50.0..50.0);
            if x != f64::floor(x) {
                break x;
            }
        };
        let alpha: f64 = loop {
            let a = rng.gen();
            if a > 0.0 {
                break a;
            }
        };
        for (slot, &h) in worst.iter_mut().zip(hs) {
            let r = sawtooth_error(x, alpha, h)? / sawtooth_bound(x, h);
            *slot = slot.max(r);
        }
    }
    Ok(hs
        .iter()
        .zip(worst)
        .map(|(&h, max_ratio)| SawtoothRow { h, samples, max_ratio })
        .collect())
}

fn cmd_sawtooth(cfg: &RunConfig, args: &SawtoothArgs) -> Outcome {
    cfg.emit(&sawtooth_rows(cfg.seed, args.samples, &args.h)?)
}

fn run(cli: Cli) -> Outcome {
    if let Some(t) = cli.cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    let cfg = &cli.cfg;
    if let Some(s) = cfg.s {
        if !(2..=6).contains(&s) {
            return Err(Failure::Usage(format!("--s must lie in 2..=6, got {s}")));
        }
    }
    match &cli.cmd {
        Command::Exppair(a) => cmd_exppair(cfg, a),
        Command::Table(a) => cmd_table(cfg, a),
        Command::Count(a) => cmd_count(cfg, a),
        Command::Spectrum(a) => cmd_spectrum(cfg, a),
        Command::Moment4(a) => cmd_moment4(cfg, a),
        Command::RobertSargos(a) => cmd_robert_sargos(cfg, a),
        Command::Scan(a) => cmd_scan(cfg, a),
        Command::Asymptotic(a) => cmd_asymptotic(cfg, a),
        Command::Sawtooth(a) => cmd_sawtooth(cfg, a),
        Command::Verify(a) => verify::run(cfg, a.suite),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Check(m) => (1, m),
                Failure::Other(m) => (1, m),
                Failure::Usage(m) => (2, m),
                Failure::Resource(m) => (3, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
