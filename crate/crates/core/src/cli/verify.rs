use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::allocation::{self, Allocation, Method};
use crate::benchmarks::{self, BenchmarkSystem};
use crate::channel::build_channels;
use crate::reflection::optimal_reflection;
use crate::scenario::{build_topology, dbm_to_watts, Positions, Scenario, SystemParams};
use crate::snr::{self, snr_exact_matrix};
use crate::Scheme;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Multiplies the closed-form `ζ` before comparison. Anything but 1 must
    /// make the equality check fail.
    pub zeta_scale: f64,
    pub mc_samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            zeta_scale: 1.0,
            mc_samples: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        for c in &self.checks {
            writeln!(f, "{} {:<24} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        writeln!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn matrix_vs_closed_form(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 50 {
        let params = SystemParams {
            transmit_power: dbm_to_watts(rng.random_range(0.0..30.0)),
            amp_power_budget: dbm_to_watts(rng.random_range(0.0..30.0)),
            rx_noise_power: dbm_to_watts(rng.random_range(-100.0..-70.0)),
            amp_noise_power: dbm_to_watts(rng.random_range(-100.0..-70.0)),
            ..SystemParams::reference()
        };
        let mut pt = || [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(0.0..20.0)];
        let pos = Positions { tx: pt(), rx: pt(), irs_a: pt(), irs_b: pt() };
        let Ok(topo) = build_topology(pos, 1.0) else { continue };
        let scheme = if rng.random_bool(0.5) { Scheme::Tapr } else { Scheme::Tpar };
        let alloc = Allocation::integer(rng.random_range(1..=32), rng.random_range(1..=32), scheme);
        let ch = build_channels(&params, &topo, &alloc).expect("integer allocation");
        let refl = optimal_reflection(&params, &topo, &alloc, &ch);
        let matrix = snr_exact_matrix(&params, &alloc, &ch, &refl).expect("consistent dimensions").snr;
        let zeta = snr::zeta_coefficients(&params, &topo, scheme).eval(alloc.n_act, alloc.n_pas);
        let closed = snr::snr_numerator(&params) / (zeta * opts.zeta_scale);
        worst = worst.max(rel(matrix, closed));
        done += 1;
    }
    check("matrix-vs-closed-form", worst <= 1e-9, format!("50 scenarios, max rel err {worst:.3e} (tol 1e-9)"))
}

fn monte_carlo(sc: &Scenario, seed: u64, opts: &VerifyOptions) -> CheckResult {
    let mut worst: f64 = 0.0;
    for scheme in Scheme::ALL {
        let alloc = Allocation::integer(8, 32, scheme);
        let ch = build_channels(&sc.params, &sc.topology, &alloc).expect("integer allocation");
        let refl = optimal_reflection(&sc.params, &sc.topology, &alloc, &ch);
        let exact = snr_exact_matrix(&sc.params, &alloc, &ch, &refl).expect("consistent dimensions").snr;
        let emp = snr::simulate_empirical_snr(&sc.params, &ch, &refl, opts.mc_samples, seed)
            .expect("consistent dimensions")
            .budget
            .snr;
        worst = worst.max(rel(emp, exact));
    }
    check(
        "monte-carlo",
        worst <= 0.02,
        format!("{} samples, max rel err {worst:.3e} (tol 2e-2)", opts.mc_samples),
    )
}

fn optimizer_vs_grid(sc: &Scenario) -> CheckResult {
    let p = &sc.params;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for scheme in Scheme::ALL {
        let coeffs = snr::zeta_coefficients(p, &sc.topology, scheme);
        let Ok(sol) = allocation::solve_continuous(p, &sc.topology, scheme, allocation::DEFAULT_TOL) else {
            ok = false;
            continue;
        };
        let got = coeffs.eval(sol.allocation.n_act, sol.allocation.n_pas);
        let hi = (p.total_budget - p.cost_active) / p.cost_passive;
        let n = 100_000;
        let grid = (0..n)
            .map(|i| {
                let t = 1.0 + (hi - 1.0) * i as f64 / (n - 1) as f64;
                coeffs.eval((p.total_budget - p.cost_passive * t) / p.cost_active, t)
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((got - grid) / grid);
    }
    check(
        "optimizer-vs-grid",
        ok && worst <= 1e-8,
        format!("objective excess over 1e5-point grid {worst:.3e} (tol 1e-8)"),
    )
}

fn rounding_vs_exhaustive(sc: &Scenario) -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for m in [20.0, 50.0, 100.0, 200.0, 500.0] {
        let p = sc.params.with_budget(m);
        for scheme in Scheme::ALL {
            match (
                allocation::solve(&p, &sc.topology, scheme, Method::Optimal),
                allocation::exhaustive_search(&p, &sc.topology, scheme),
            ) {
                (Ok(r), Ok(e)) => worst = worst.max(e.rate() - r.rate()),
                _ => ok = false,
            }
        }
    }
    check(
        "rounding-vs-exhaustive",
        ok && worst <= 1e-2,
        format!("M in {{20..500}}, max rate gap {worst:.3e} bps/Hz (tol 1e-2)"),
    )
}

fn scaling_slopes(sc: &Scenario) -> CheckResult {
    let ms = [500.0, 1000.0, 2000.0, 4000.0];
    let approx = |scheme| {
        let ys: Vec<f64> = ms
            .iter()
            .map(|&m| snr::approx_snr_suboptimal(&sc.params, &sc.topology, scheme, m).snr)
            .collect();
        log_log_slope(&ms, &ys)
    };
    let bench = |system| {
        let ys: Vec<f64> = ms
            .iter()
            .map(|&m| {
                benchmarks::rate_benchmark(system, &sc.params.with_budget(m), &sc.topology)
                    .map(|r| r.snr)
                    .unwrap_or(f64::NAN)
            })
            .collect();
        log_log_slope(&ms, &ys)
    };
    let s = [
        ("tapr-approx", approx(Scheme::Tapr), 3.0, 1e-9),
        ("tpar-approx", approx(Scheme::Tpar), 3.0, 1e-9),
        ("single-pirs", bench(BenchmarkSystem::SinglePirs), 2.0, 0.05),
        ("single-airs", bench(BenchmarkSystem::SingleAirs), 1.0, 0.05),
        ("double-pirs", bench(BenchmarkSystem::DoublePirs), 4.0, 0.05),
    ];
    let passed = s.iter().all(|&(_, v, want, tol)| (v - want).abs() <= tol);
    let detail = s
        .iter()
        .map(|(n, v, _, _)| format!("{n} {v:.6}"))
        .collect::<Vec<_>>()
        .join(", ");
    check("scaling-slopes", passed, detail)
}

/// Runs all cross-checks. Deterministic for a given scenario and seed.
pub fn run_verify(scenario: &Scenario, seed: u64, opts: &VerifyOptions) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    VerifyReport {
        seed,
        checks: vec![
            matrix_vs_closed_form(&mut rng, opts),
            monte_carlo(scenario, seed, opts),
            optimizer_vs_grid(scenario),
            rounding_vs_exhaustive(scenario),
            scaling_slopes(scenario),
        ],
    }
}
