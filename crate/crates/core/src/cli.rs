//! The `ivq` command line.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 no-arbitrage violation,
//! 3 numerical failure, 4 some chain rows failed. Numbers are printed in the
//! shortest form that reads back to the same double.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::bench::{run_bench, write_report, GridSpec, ReportFormat, DEFAULT_REPETITIONS, DEFAULT_RUNS};
use crate::black_scholes::{bs_normalized_call, bs_normalized_put, OptionKind, OptionQuote};
use crate::error::{Error, Result};
use crate::implied_vol::{implied_vol_explicit, implied_vol_reference, InversionResult};
use crate::montecarlo::{survival_estimate_exact, survival_estimate_path, McConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ARBITRAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ROW_FAILURES: i32 = 4;

/// Environment variable capping the worker threads of `ivq chain`.
pub const THREADS_ENV: &str = "IVQ_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ivq", version, about = "Black-Scholes implied volatility through the inverse Gaussian quantile")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Implied volatility of one quote
    Iv(IvArgs),
    /// Black-Scholes price of one option
    Price(PriceArgs),
    /// Implied volatilities for every row of a CSV option chain
    Chain(ChainArgs),
    /// Accuracy and timing of both inverters on the delta grid
    Bench(BenchArgs),
    /// Monte Carlo check of the first-passage reading of the call price
    Verify(VerifyArgs),
}

/// Forward-based input, or spot with rate and dividend yield.
#[derive(Debug, Args)]
pub struct MarketArgs {
    #[arg(long)]
    pub strike: f64,
    #[arg(long, required_unless_present = "spot", conflicts_with = "spot")]
    pub forward: Option<f64>,
    #[arg(long)]
    pub spot: Option<f64>,
    /// Continuously compounded rate; sets the discount factor when none is given
    #[arg(long, allow_negative_numbers = true)]
    pub rate: Option<f64>,
    /// Continuous dividend yield (spot input only)
    #[arg(long, allow_negative_numbers = true, requires = "spot")]
    pub dividend: Option<f64>,
    /// Years to expiry
    #[arg(long)]
    pub maturity: f64,
    #[arg(long, conflicts_with = "spot")]
    pub discount: Option<f64>,
    #[arg(long, default_value = "call")]
    pub kind: OptionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum MethodArg {
    #[default]
    Explicit,
    Reference,
}

impl MethodArg {
    fn invert(self, quote: &OptionQuote) -> Result<InversionResult> {
        match self {
            MethodArg::Explicit => implied_vol_explicit(quote),
            MethodArg::Reference => implied_vol_reference(quote),
        }
    }
}

#[derive(Debug, Args)]
pub struct IvArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long)]
    pub price: f64,
    #[arg(long, value_enum, default_value_t)]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Annualized volatility σ
    #[arg(long)]
    pub vol: f64,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to standard output
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    pub reps: u32,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    pub runs: u32,
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum McMode {
    #[default]
    Exact,
    Path,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Log-moneyness ln(K/F), positive
    #[arg(long, default_value_t = 0.2)]
    pub k: f64,
    /// Total volatility σ√T
    #[arg(long, default_value_t = 0.5)]
    pub vol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t)]
    pub mode: McMode,
    /// Euler step for path mode (default: horizon 4/vol² over 1000)
    #[arg(long)]
    pub dt: Option<f64>,
}

/// Quote from the two accepted input sets. With a forward, the discount
/// factor is `--discount`, else `e^{-rT}` from `--rate`, else 1.
#[allow(clippy::too_many_arguments)]
pub fn resolve_quote(
    strike: f64,
    forward: Option<f64>,
    spot: Option<f64>,
    rate: Option<f64>,
    dividend: Option<f64>,
    maturity: f64,
    discount: Option<f64>,
    price: f64,
    kind: OptionKind,
) -> Result<OptionQuote> {
    match (forward, spot) {
        (Some(_), Some(_)) => Err(Error::domain("give either a forward or a spot, not both")),
        (None, Some(s)) => {
            if discount.is_some() {
                return Err(Error::domain("spot input takes --rate, not a discount factor"));
            }
            OptionQuote::from_spot(strike, s, rate.unwrap_or(0.0), dividend.unwrap_or(0.0), maturity, price, kind)
        }
        (Some(f), None) => {
            if dividend.is_some() {
                return Err(Error::domain("a dividend yield needs spot input"));
            }
            let discount = match (discount, rate) {
                (Some(d), _) => d,
                (None, Some(r)) => (-r * maturity).exp(),
                (None, None) => 1.0,
            };
            OptionQuote::new(strike, f, maturity, discount, price, kind)
        }
        (None, None) => Err(Error::domain("need a forward or a spot")),
    }
}

impl MarketArgs {
    fn quote(&self, price: f64) -> Result<OptionQuote> {
        resolve_quote(
            self.strike,
            self.forward,
            self.spot,
            self.rate,
            self.dividend,
            self.maturity,
            self.discount,
            price,
            self.kind,
        )
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Arbitrage { .. } => EXIT_ARBITRAGE,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Shortest round-trip decimal, in exponent form when very large or small.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn stdout_error(source: io::Error) -> Error {
    Error::Io { path: "<stdout>".into(), source }
}

fn cmd_iv(args: &IvArgs, out: &mut dyn Write) -> Result<i32> {
    let quote = args.market.quote(args.price)?;
    let r = args.method.invert(&quote)?;
    let mut text = format!(
        "sigma: {}\ntotal_vol: {}\nmethod: {}\nresidual: {}\niterations: {}\npricer_calls: {}\n",
        fmt_num(r.sigma),
        fmt_num(r.total_vol),
        r.method.label(),
        fmt_num(r.residual),
        r.iterations,
        r.pricer_calls
    );
    if r.at_intrinsic {
        text.push_str("at_intrinsic: true\n");
    }
    out.write_all(text.as_bytes()).map_err(stdout_error)?;
    Ok(EXIT_OK)
}

/// `D F c(k, σ√T)`, or the put through `c(k, v) - p(k, v) = 1 - e^k`.
pub fn price_quote(quote: &OptionQuote, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("volatility must be positive, got {sigma}")));
    }
    let v = sigma * quote.maturity.sqrt();
    let k = quote.log_moneyness();
    let normalized = match quote.kind {
        OptionKind::Call => bs_normalized_call(k, v)?,
        OptionKind::Put => bs_normalized_put(k, v)?,
    };
    Ok(quote.discount * quote.forward * normalized)
}

fn cmd_price(args: &PriceArgs, out: &mut dyn Write) -> Result<i32> {
    let quote = args.market.quote(0.0)?;
    let price = price_quote(&quote, args.vol)?;
    writeln!(out, "{}", fmt_num(price)).map_err(stdout_error)?;
    Ok(EXIT_OK)
}

const RESULT_COLUMNS: [&str; 5] = ["sigma", "total_vol", "method", "residual", "error"];

/// Column positions of a chain file, found from its header.
#[derive(Debug, Clone, Copy)]
struct ChainColumns {
    strike: usize,
    forward: Option<usize>,
    spot: Option<usize>,
    rate: Option<usize>,
    dividend: Option<usize>,
    maturity: usize,
    discount: Option<usize>,
    price: usize,
    kind: usize,
}

impl ChainColumns {
    fn from_header(header: &csv::StringRecord) -> Result<Self> {
        let find = |name: &str| header.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
        let mut missing = Vec::new();
        let mut need = |name: &'static str| {
            let found = find(name);
            if found.is_none() {
                missing.push(name);
            }
            found.unwrap_or(0)
        };
        let strike = need("strike");
        let maturity = need("maturity");
        let price = need("price");
        let kind = need("kind");
        let (forward, spot) = (find("forward"), find("spot"));
        if forward.is_none() && spot.is_none() {
            missing.push("forward (or spot)");
        }
        if !missing.is_empty() {
            let found: Vec<&str> = header.iter().collect();
            return Err(Error::Format(format!(
                "chain header lacks column(s) {}; found [{}]",
                missing.join(", "),
                found.join(", ")
            )));
        }
        Ok(Self {
            strike,
            forward,
            spot,
            rate: find("rate"),
            dividend: find("dividend"),
            maturity,
            discount: find("discount"),
            price,
            kind,
        })
    }
}

/// One parsed row of an option chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainRow {
    pub strike: f64,
    pub forward: Option<f64>,
    pub spot: Option<f64>,
    pub rate: Option<f64>,
    pub dividend: Option<f64>,
    pub maturity: f64,
    pub discount: Option<f64>,
    pub price: f64,
    pub kind: OptionKind,
}

impl ChainRow {
    fn parse(record: &csv::StringRecord, cols: &ChainColumns) -> Result<Self> {
        let cell = |i: usize, name: &str| {
            record
                .get(i)
                .map(str::trim)
                .ok_or_else(|| Error::Format(format!("missing {name} field")))
        };
        let number = |i: usize, name: &str| -> Result<f64> {
            let text = cell(i, name)?;
            text.parse()
                .map_err(|_| Error::Format(format!("{name}: cannot parse {text:?} as a number")))
        };
        let optional = |i: Option<usize>, name: &str| -> Result<Option<f64>> {
            match i.map(|i| cell(i, name)).transpose()? {
                None | Some("") => Ok(None),
                Some(_) => number(i.unwrap(), name).map(Some),
            }
        };
        Ok(Self {
            strike: number(cols.strike, "strike")?,
            forward: optional(cols.forward, "forward")?,
            spot: optional(cols.spot, "spot")?,
            rate: optional(cols.rate, "rate")?,
            dividend: optional(cols.dividend, "dividend")?,
            maturity: number(cols.maturity, "maturity")?,
            discount: optional(cols.discount, "discount")?,
            price: number(cols.price, "price")?,
            kind: cell(cols.kind, "kind")?.parse()?,
        })
    }

    pub fn quote(&self) -> Result<OptionQuote> {
        resolve_quote(
            self.strike,
            self.forward,
            self.spot,
            self.rate,
            self.dividend,
            self.maturity,
            self.discount,
            self.price,
            self.kind,
        )
    }
}

fn chain_cells(record: &csv::StringRecord, cols: &ChainColumns, method: MethodArg, line: u64) -> [String; 5] {
    let outcome = ChainRow::parse(record, cols).and_then(|row| method.invert(&row.quote()?));
    match outcome {
        Ok(r) => [
            fmt_num(r.sigma),
            fmt_num(r.total_vol),
            r.method.label().to_string(),
            fmt_num(r.residual),
            String::new(),
        ],
        Err(e) => [String::new(), String::new(), String::new(), String::new(), format!("line {line}: {e}")],
    }
}

fn chain_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Processes every row, returning the output CSV text and the number of
/// failed rows.
pub fn process_chain(input: &Path, method: MethodArg) -> Result<(Vec<u8>, usize)> {
    let io_error = |source| Error::Io { path: input.to_path_buf(), source };
    let file = File::open(input).map_err(io_error)?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", input.display())))?
        .clone();
    let cols = ChainColumns::from_header(&header)?;
    let records: Vec<(u64, csv::Result<csv::StringRecord>)> = reader
        .records()
        .enumerate()
        .map(|(i, r)| {
            let line = r.as_ref().ok().and_then(|r| r.position()).map_or(i as u64 + 2, |p| p.line());
            (line, r)
        })
        .collect();

    let work = || -> Vec<[String; 5]> {
        records
            .par_iter()
            .map(|(line, record)| match record {
                Ok(record) => chain_cells(record, &cols, method, *line),
                Err(e) => [String::new(), String::new(), String::new(), String::new(), format!("line {line}: {e}")],
            })
            .collect()
    };
    let cells = match chain_threads() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Format(e.to_string()))?
            .install(work),
        None => work(),
    };

    let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let csv_error = |e: csv::Error| Error::Format(e.to_string());
    writer
        .write_record(header.iter().chain(RESULT_COLUMNS))
        .map_err(csv_error)?;
    let mut failures = 0;
    for ((_, record), results) in records.iter().zip(&cells) {
        if !results[4].is_empty() {
            failures += 1;
        }
        let inputs: Vec<&str> = match record {
            Ok(r) => r.iter().collect(),
            Err(_) => vec![""; header.len()],
        };
        writer
            .write_record(inputs.into_iter().chain(results.iter().map(String::as_str)))
            .map_err(csv_error)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok((bytes, failures))
}

fn cmd_chain(args: &ChainArgs, out: &mut dyn Write) -> Result<i32> {
    let (bytes, failures) = process_chain(&args.input, args.method)?;
    match &args.output {
        Some(path) => std::fs::write(path, bytes).map_err(|source| Error::Io { path: path.clone(), source })?,
        None => out.write_all(&bytes).map_err(stdout_error)?,
    }
    if failures > 0 {
        eprintln!("{failures} row(s) failed; see the error column");
        Ok(EXIT_ROW_FAILURES)
    } else {
        Ok(EXIT_OK)
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let report = run_bench(&GridSpec::default(), args.reps, args.runs)?;
    write_report(&report, args.format, args.out.as_deref())?;
    Ok(EXIT_OK)
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let horizon = 4.0 / (args.vol * args.vol);
    let dt = args.dt.unwrap_or(horizon / 1000.0);
    let cfg = McConfig::new(args.paths, args.seed, dt)?;
    let analytic = bs_normalized_call(args.k, args.vol)?;
    let est = match args.mode {
        McMode::Exact => survival_estimate_exact(args.k, args.vol, &cfg)?,
        McMode::Path => survival_estimate_path(args.k, args.vol, &cfg)?,
    };
    let text = format!(
        "analytic: {}\nestimate: {}\nstd_error: {}\nz_score: {}\npaths: {}\n",
        fmt_num(analytic),
        fmt_num(est.estimate),
        fmt_num(est.std_error),
        fmt_num(est.z_score(analytic)),
        est.n_paths
    );
    out.write_all(text.as_bytes()).map_err(stdout_error)?;
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Iv(a) => cmd_iv(a, out),
        Command::Price(a) => cmd_price(a, out),
        Command::Chain(a) => cmd_chain(a, out),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, &mut io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
