//! Delta-grid accuracy and timing harness for the two inverters.
//!
//! Every case is a quote with forward 1 and discount 1, so the timed work is
//! the whole quote-to-σ path: normalization, inversion and the maturity
//! scaling. Errors are measured in total volatility.

use std::fmt::Write as _;
use std::hint::black_box;
use std::io;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::black_scholes::{bs_normalized_call, delta_to_logmoneyness, OptionKind, OptionQuote};
use crate::error::{Error, Result};
use crate::implied_vol::{implied_vol_explicit, implied_vol_reference, InversionResult};

pub const DEFAULT_DELTAS: [f64; 8] = [0.05, 0.20, 0.30, 0.45, 0.55, 0.70, 0.80, 0.95];
pub const DEFAULT_REPETITIONS: u32 = 5000;
pub const DEFAULT_RUNS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub vols: Vec<f64>,
    pub deltas: Vec<f64>,
    pub maturity: f64,
}

impl Default for GridSpec {
    /// 0.01 followed by 0.05, 0.10, ..., 2.00: 41 vols by 8 deltas.
    fn default() -> Self {
        let mut vols = vec![0.01];
        vols.extend((1..=40).map(|j| j as f64 / 20.0));
        Self {
            vols,
            deltas: DEFAULT_DELTAS.to_vec(),
            maturity: 1.0,
        }
    }
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.vols.len() * self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::domain("grid needs at least one vol and one delta"));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(Error::domain(format!("maturity must be positive, got {}", self.maturity)));
        }
        if let Some(v) = self.vols.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::domain(format!("grid vol must be positive, got {v}")));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::domain(format!("grid delta must lie in (0, 1), got {d}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCase {
    /// Total volatility `σ√T`.
    pub v: f64,
    pub delta: f64,
    pub k: f64,
    pub c: f64,
    pub quote: OptionQuote,
}

/// Cases in vol-major order, each priced at `c = c(k, v)` with `k` from the
/// call delta.
pub fn build_grid(spec: &GridSpec) -> Result<Vec<GridCase>> {
    spec.validate()?;
    let mut cases = Vec::with_capacity(spec.len());
    for &v in &spec.vols {
        for &delta in &spec.deltas {
            let k = delta_to_logmoneyness(v, delta)?;
            let c = bs_normalized_call(k, v)?;
            let intrinsic = (-k.exp_m1()).max(0.0);
            if !(c > intrinsic && c < 1.0) {
                return Err(Error::domain(format!(
                    "grid point v={v}, delta={delta} prices on a no-arbitrage bound (c={c})"
                )));
            }
            let quote = OptionQuote::new(k.exp(), 1.0, spec.maturity, 1.0, c, OptionKind::Call)?;
            cases.push(GridCase { v, delta, k, c, quote });
        }
    }
    Ok(cases)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Inverter {
    Explicit,
    Reference,
}

impl Inverter {
    pub const ALL: [Inverter; 2] = [Inverter::Explicit, Inverter::Reference];

    pub fn name(&self) -> &'static str {
        match self {
            Inverter::Explicit => "Explicit",
            Inverter::Reference => "Reference",
        }
    }

    pub fn invert(&self, quote: &OptionQuote) -> Result<InversionResult> {
        match self {
            Inverter::Explicit => implied_vol_explicit(quote),
            Inverter::Reference => implied_vol_reference(quote),
        }
    }
}

/// One row of the accuracy table; also the CSV record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub v_in: f64,
    pub delta: f64,
    pub k: f64,
    pub c: f64,
    pub v_explicit: f64,
    pub err_explicit: f64,
    pub v_reference: f64,
    pub err_reference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodAccuracy {
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    pub max_iterations: u32,
    /// Black–Scholes evaluations summed over the grid.
    pub pricer_calls: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub explicit: MethodAccuracy,
    pub reference: MethodAccuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    /// Wall-clock seconds of each timing run.
    pub run_seconds: Vec<f64>,
    pub mean_seconds: f64,
    pub micros_per_eval: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
    /// Black–Scholes evaluations per timing run.
    pub pricer_calls_per_run: u64,
    pub checksum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub repetitions: u32,
    pub runs: u32,
    pub evaluations_per_run: u64,
    pub hardware_specific: bool,
    pub explicit: MethodTiming,
    pub reference: MethodTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub grid: GridSpec,
    pub per_case: Vec<CaseRecord>,
    pub aggregates: Aggregates,
    pub timing: Option<Timing>,
}

fn invert_case(inverter: Inverter, case: &GridCase) -> Result<InversionResult> {
    inverter.invert(&case.quote).map_err(|e| {
        Error::Format(format!(
            "{} inversion failed at v={}, delta={} (k={}, c={}): {e}",
            inverter.name(),
            case.v,
            case.delta,
            case.k,
            case.c
        ))
    })
}

fn summarize(results: &[(InversionResult, f64)]) -> MethodAccuracy {
    let n = results.len().max(1) as f64;
    MethodAccuracy {
        mean_abs_error: results.iter().map(|r| r.1).sum::<f64>() / n,
        max_abs_error: results.iter().map(|r| r.1).fold(0.0, f64::max),
        max_iterations: results.iter().map(|r| r.0.iterations).max().unwrap_or(0),
        pricer_calls: results.iter().map(|r| r.0.pricer_calls as u64).sum(),
    }
}

/// Round trip of every case through both inverters. The first failure aborts
/// with the case identified.
pub fn run_accuracy(spec: &GridSpec, grid: &[GridCase]) -> Result<BenchReport> {
    let outcomes: Vec<[(InversionResult, f64); 2]> = grid
        .par_iter()
        .map(|case| {
            let e = invert_case(Inverter::Explicit, case)?;
            let r = invert_case(Inverter::Reference, case)?;
            Ok([(e, (e.total_vol - case.v).abs()), (r, (r.total_vol - case.v).abs())])
        })
        .collect::<Result<_>>()?;

    let per_case = grid
        .iter()
        .zip(&outcomes)
        .map(|(case, [e, r])| CaseRecord {
            v_in: case.v,
            delta: case.delta,
            k: case.k,
            c: case.c,
            v_explicit: e.0.total_vol,
            err_explicit: e.1,
            v_reference: r.0.total_vol,
            err_reference: r.1,
        })
        .collect();
    let explicit: Vec<_> = outcomes.iter().map(|o| o[0]).collect();
    let reference: Vec<_> = outcomes.iter().map(|o| o[1]).collect();
    Ok(BenchReport {
        grid: spec.clone(),
        per_case,
        aggregates: Aggregates {
            explicit: summarize(&explicit),
            reference: summarize(&reference),
        },
        timing: None,
    })
}

fn time_method(inverter: Inverter, grid: &[GridCase], expected: &[f64], repetitions: u32, runs: u32) -> Result<MethodTiming> {
    // warm-up pass, also confirming timing sees the accuracy-phase outputs
    for (case, want) in grid.iter().zip(expected) {
        let got = invert_case(inverter, case)?.total_vol;
        assert_eq!(got.to_bits(), want.to_bits(), "{} output changed between phases", inverter.name());
    }

    let mut run_seconds = Vec::with_capacity(runs as usize);
    let mut checksum = 0.0;
    let mut pricer_calls_per_run = 0;
    for _ in 0..runs {
        let mut sink = 0.0;
        let mut calls = 0u64;
        let start = Instant::now();
        for _ in 0..repetitions {
            for case in grid {
                let r = invert_case(inverter, black_box(case))?;
                sink += r.total_vol;
                calls += r.pricer_calls as u64;
            }
        }
        run_seconds.push(start.elapsed().as_secs_f64());
        checksum = black_box(sink);
        pricer_calls_per_run = calls;
    }

    let evaluations = grid.len() as f64 * repetitions as f64;
    let mean_seconds = run_seconds.iter().sum::<f64>() / runs as f64;
    Ok(MethodTiming {
        mean_seconds,
        micros_per_eval: 1e6 * mean_seconds / evaluations,
        min_seconds: run_seconds.iter().copied().fold(f64::INFINITY, f64::min),
        max_seconds: run_seconds.iter().copied().fold(0.0, f64::max),
        run_seconds,
        pricer_calls_per_run,
        checksum,
    })
}

/// Single-threaded wall-clock timing of both inverters over `runs` runs of
/// `repetitions` passes through the grid. Needs the accuracy report so the
/// timed outputs can be checked against it.
pub fn run_timing(grid: &[GridCase], accuracy: &BenchReport, repetitions: u32, runs: u32) -> Result<Timing> {
    if grid.is_empty() || repetitions == 0 || runs == 0 {
        return Err(Error::domain("timing needs a non-empty grid, repetitions and runs"));
    }
    let explicit_out: Vec<f64> = accuracy.per_case.iter().map(|r| r.v_explicit).collect();
    let reference_out: Vec<f64> = accuracy.per_case.iter().map(|r| r.v_reference).collect();
    Ok(Timing {
        repetitions,
        runs,
        evaluations_per_run: grid.len() as u64 * repetitions as u64,
        hardware_specific: true,
        explicit: time_method(Inverter::Explicit, grid, &explicit_out, repetitions, runs)?,
        reference: time_method(Inverter::Reference, grid, &reference_out, repetitions, runs)?,
    })
}

/// Grid, accuracy and timing in one go.
pub fn run_bench(spec: &GridSpec, repetitions: u32, runs: u32) -> Result<BenchReport> {
    let grid = build_grid(spec)?;
    let mut report = run_accuracy(spec, &grid)?;
    report.timing = Some(run_timing(&grid, &report, repetitions, runs)?);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ReportFormat {
    #[default]
    Table,
    Json,
    Csv,
}

fn table(report: &BenchReport) -> String {
    let mut out = String::new();
    let a = &report.aggregates;
    let _ = writeln!(out, "{:<10} {:>14} {:>10} {:>12} {:>12}", "Method", "Total seconds", "µs/eval", "Mean", "Max");
    for inverter in Inverter::ALL {
        let acc = match inverter {
            Inverter::Explicit => &a.explicit,
            Inverter::Reference => &a.reference,
        };
        let (secs, per) = match &report.timing {
            Some(t) => {
                let m = match inverter {
                    Inverter::Explicit => &t.explicit,
                    Inverter::Reference => &t.reference,
                };
                (format!("{:.3}", m.mean_seconds), format!("{:.3}", m.micros_per_eval))
            }
            None => ("-".to_string(), "-".to_string()),
        };
        let _ = writeln!(
            out,
            "{:<10} {:>14} {:>10} {:>12.3e} {:>12.3e}",
            inverter.name(),
            secs,
            per,
            acc.mean_abs_error,
            acc.max_abs_error
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{} cases; Black-Scholes evaluations on the grid: explicit {}, reference {}",
        report.per_case.len(),
        a.explicit.pricer_calls,
        a.reference.pricer_calls
    );
    if let Some(t) = &report.timing {
        let _ = writeln!(
            out,
            "{} runs x {} repetitions = {} evaluations per run and method (single thread)",
            t.runs, t.repetitions, t.evaluations_per_run
        );
        let _ = writeln!(
            out,
            "run spread: explicit {:.3}..{:.3} s, reference {:.3}..{:.3} s",
            t.explicit.min_seconds, t.explicit.max_seconds, t.reference.min_seconds, t.reference.max_seconds
        );
        let _ = writeln!(out, "timings are specific to this machine and build");
    }
    out
}

fn csv(report: &BenchReport) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for record in &report.per_case {
        writer.serialize(record).map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn emit_report(report: &BenchReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Table => Ok(table(report)),
        ReportFormat::Json => serde_json::to_string_pretty(report).map_err(|e| Error::Format(e.to_string())),
        ReportFormat::Csv => csv(report),
    }
}

/// Writes the report to `out`, or to standard output.
pub fn write_report(report: &BenchReport, format: ReportFormat, out: Option<&Path>) -> Result<()> {
    let text = emit_report(report, format)?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            use io::Write;
            io::stdout().write_all(text.as_bytes()).map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_328_cases() {
        let spec = GridSpec::default();
        assert_eq!(spec.vols.len(), 41);
        assert_eq!(spec.vols[40], 2.0);
        assert_eq!(build_grid(&spec).unwrap().len(), 328);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = GridSpec::default();
        spec.deltas.push(1.0);
        assert!(build_grid(&spec).is_err());
        let spec = GridSpec { vols: vec![], ..GridSpec::default() };
        assert!(build_grid(&spec).is_err());
    }

    #[test]
    fn timing_rejects_empty_runs() {
        let spec = GridSpec { vols: vec![0.3], deltas: vec![0.5], maturity: 1.0 };
        let grid = build_grid(&spec).unwrap();
        let report = run_accuracy(&spec, &grid).unwrap();
        assert!(run_timing(&grid, &report, 0, 1).is_err());
        assert!(run_timing(&grid, &report, 1, 1).is_ok());
    }
}
