//! Command-line front end: configuration loading, sweeps, placement traces,
//! scheme comparison and the verification suite.

mod sweep;
mod verify;

pub use sweep::{format_db, rate_from_db, run_sweep, write_csv, ResultRow, SweepParam, SweepSpec};
pub use verify::{run_verify, CheckResult, VerifyOptions, VerifyReport};

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::allocation::{self, AllocationSolution, Method};
use crate::benchmarks::BenchmarkSystem;
use crate::error::{Error, Result};
use crate::placement::{self, AoTrace, PlacementGrid, DEFAULT_AO_MAX_ITERS, DEFAULT_AO_TOL};
use crate::scenario::{Scenario, ScenarioConfig};
use crate::snr::{self, DEFAULT_REGIME_EPSILON};
use crate::Scheme;

#[derive(Debug, Parser)]
#[command(name = "irs-alloc", version, about = "Element allocation and placement for active/passive IRS links")]
pub struct Cli {
    /// Scenario file (TOML); the reference deployment when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for the randomized checks. Every other computation is
    /// deterministic.
    #[arg(long, global = true, default_value_t = 2024)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the element allocation for one scenario.
    Allocate(AllocateArgs),
    /// Sweep one parameter and write one CSV row per point and system.
    Sweep(SweepArgs),
    /// Alternate placement and allocation on a position grid.
    Placement(PlacementArgs),
    /// Report which deployment order is preferable and how well the
    /// large-distance approximation holds.
    Compare(CompareArgs),
    /// Run the cross-checks between the matrix model, closed forms, solvers
    /// and Monte-Carlo simulation.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    #[arg(long, default_value = "tapr")]
    pub scheme: Scheme,
    #[arg(long, default_value = "optimal")]
    pub method: Method,
    /// Also write the result as a CSV row.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub param: SweepParam,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long)]
    pub step: f64,
    /// `tapr`, `tpar` or `both`.
    #[arg(long, default_value = "both")]
    pub scheme: String,
    #[arg(long, default_value = "optimal")]
    pub method: Method,
    /// Comma-separated benchmark systems, `all` or `none`.
    #[arg(long, default_value = "none")]
    pub benchmarks: String,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlacementArgs {
    #[arg(long, default_value = "tapr")]
    pub scheme: Scheme,
    /// Grid spacing in metres.
    #[arg(long, default_value_t = 1.0)]
    pub grid_step: f64,
    /// Extent of the search box along x around each surface, metres.
    #[arg(long, default_value_t = placement::DEFAULT_BOX_WIDTH)]
    pub grid_width: f64,
    /// Extent of the search box along y around each surface, metres.
    #[arg(long, default_value_t = placement::DEFAULT_BOX_DEPTH)]
    pub grid_depth: f64,
    #[arg(long, default_value_t = DEFAULT_AO_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Threshold for the large-distance regime test.
    #[arg(long, default_value_t = DEFAULT_REGIME_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value = "optimal")]
    pub method: Method,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {}

pub fn load_scenario(path: Option<&Path>) -> Result<Scenario> {
    match path {
        Some(p) => ScenarioConfig::load(p)?.scenario(),
        None => ScenarioConfig::default().scenario(),
    }
}

pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>> {
    match s {
        "both" | "all" => Ok(Scheme::ALL.to_vec()),
        "none" => Ok(Vec::new()),
        _ => s.split(',').map(|t| t.trim().parse()).collect(),
    }
}

pub fn parse_benchmarks(s: &str) -> Result<Vec<BenchmarkSystem>> {
    match s {
        "all" => Ok(BenchmarkSystem::ALL.to_vec()),
        "none" | "" => Ok(Vec::new()),
        _ => s.split(',').map(|t| t.trim().parse()).collect(),
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("output: {e}"))
}

pub fn run_allocate(scenario: &Scenario, scheme: Scheme, method: Method) -> Result<AllocationSolution> {
    allocation::solve(&scenario.params, &scenario.topology, scheme, method)
}

/// Scheme comparison at one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub comparison: snr::SchemeComparison,
    /// Regime test at the passive count of the closed-form split; `None` when
    /// the condition is undefined.
    pub regime: Option<snr::RegimeReport>,
    pub rows: Vec<ResultRow>,
}

pub fn run_compare(scenario: &Scenario, epsilon: f64, method: Method) -> Result<CompareReport> {
    let p = &scenario.params;
    let t = &scenario.topology;
    let x_pas = 2.0 * p.total_budget / (3.0 * p.cost_passive);
    let spec = SweepSpec {
        param: SweepParam::TotalBudget,
        from: p.total_budget,
        to: p.total_budget,
        step: 1.0,
        schemes: Scheme::ALL.to_vec(),
        benchmarks: BenchmarkSystem::ALL.to_vec(),
        method,
    };
    Ok(CompareReport {
        comparison: snr::compare_schemes(p, t),
        regime: snr::check_lemma1(p, t, x_pas, epsilon).ok(),
        rows: run_sweep(scenario, &spec)?,
    })
}

pub fn run_placement(scenario: &Scenario, scheme: Scheme, grid: &PlacementGrid, max_iters: usize) -> Result<AoTrace> {
    let pos = scenario.topology.positions;
    placement::alternating_optimize(&scenario.params, pos.tx, pos.rx, grid, scheme, DEFAULT_AO_TOL, max_iters)
}

pub fn write_trace_csv<W: Write>(trace: &AoTrace, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "iteration", "a_x", "a_y", "a_z", "b_x", "b_y", "b_z", "n_act", "n_pas", "amplitude", "rate_bps_hz",
    ])
    .map_err(io_err)?;
    for it in &trace.iterations {
        let mut rec = vec![it.iteration.to_string()];
        rec.extend(it.irs_a.iter().chain(&it.irs_b).map(|x| x.to_string()));
        rec.extend([
            it.allocation.n_act.to_string(),
            it.allocation.n_pas.to_string(),
            it.amplitude.to_string(),
            it.rate.to_string(),
        ]);
        out.write_record(&rec).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn solution_row(scenario: &Scenario, sol: &AllocationSolution) -> ResultRow {
    ResultRow::from_solution(SweepParam::TotalBudget, scenario.params.total_budget, sol)
}

/// Runs a parsed command, printing to `stdout`. Returns the process exit code.
pub fn run(cli: &Cli, stdout: &mut impl Write) -> Result<i32> {
    let scenario = load_scenario(cli.config.as_deref())?;
    match &cli.command {
        Command::Allocate(a) => {
            let sol = run_allocate(&scenario, a.scheme, a.method)?;
            let al = sol.allocation;
            let snr_db = format_db(sol.budget.snr_db());
            writeln!(
                stdout,
                "scheme      {}\nmethod      {}\nn_act       {}\nn_pas       {}\namplitude   {}\nsnr_db      {}\nrate_bps_hz {}",
                al.scheme,
                sol.method,
                al.n_act,
                al.n_pas,
                sol.amplitude,
                snr_db,
                rate_from_db(&snr_db),
            )
            .map_err(io_err)?;
            if let Some(path) = &a.out {
                write_csv(&[solution_row(&scenario, &sol)], create(path)?)?;
            }
            Ok(0)
        }
        Command::Sweep(s) => {
            let spec = SweepSpec {
                param: s.param,
                from: s.from,
                to: s.to,
                step: s.step,
                schemes: parse_schemes(&s.scheme)?,
                benchmarks: parse_benchmarks(&s.benchmarks)?,
                method: s.method,
            };
            let rows = run_sweep(&scenario, &spec)?;
            match &s.out {
                Some(path) => write_csv(&rows, create(path)?)?,
                None => write_csv(&rows, &mut *stdout)?,
            }
            Ok(0)
        }
        Command::Placement(pl) => {
            let pos = scenario.topology.positions;
            let mut grid = PlacementGrid::around(pos.irs_a, pos.irs_b, pl.grid_width, pl.grid_depth, pl.grid_step);
            grid.d_min = scenario.topology.d_min;
            let trace = run_placement(&scenario, pl.scheme, &grid, pl.max_iters)?;
            match &pl.out {
                Some(path) => write_trace_csv(&trace, create(path)?)?,
                None => write_trace_csv(&trace, &mut *stdout)?,
            }
            Ok(0)
        }
        Command::Compare(c) => {
            let report = run_compare(&scenario, c.epsilon, c.method)?;
            let cmp = report.comparison;
            writeln!(
                stdout,
                "Pv/(d3^2 sigma0^2)  {:.6e}\nPt/(d1^2 sigmav^2)  {:.6e}\n1/rho               {:.6e}\nmargin              {:.6e}\npreferred           {}",
                cmp.amp_term,
                cmp.tx_term,
                cmp.inv_ref_gain,
                cmp.margin,
                if cmp.tapr_at_least_tpar { "tapr" } else { "tpar" },
            )
            .map_err(io_err)?;
            match report.regime {
                Some(r) => writeln!(
                    stdout,
                    "regime              lhs {:.6} m, d2 {:.6} m, ratio {:.6}, {} at epsilon {}",
                    r.lemma1_lhs,
                    r.d2,
                    r.ratio,
                    if r.satisfied { "satisfied" } else { "not satisfied" },
                    r.epsilon
                ),
                None => writeln!(stdout, "regime              undefined (rho Pv <= sigma0^2 d3^2)"),
            }
            .map_err(io_err)?;
            for row in &report.rows {
                match (row.rate_bps_hz, &row.error) {
                    (Some(rate), _) => writeln!(stdout, "{:<12} rate {rate} bps/Hz", row.system),
                    (None, e) => writeln!(stdout, "{:<12} failed: {}", row.system, e.as_deref().unwrap_or("")),
                }
                .map_err(io_err)?;
            }
            if let Some(path) = &c.out {
                write_csv(&report.rows, create(path)?)?;
            }
            Ok(0)
        }
        Command::Verify(_) => {
            let report = run_verify(&scenario, cli.seed, &VerifyOptions::default());
            write!(stdout, "{report}").map_err(io_err)?;
            Ok(if report.all_passed() { 0 } else { 2 })
        }
    }
}

/// Entry point for the binary: parses `args`, runs, and maps errors to exit
/// codes (0 success, 1 configuration, 2 solver or guard failure).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
