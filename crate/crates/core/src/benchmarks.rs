//! Comparison systems: a single passive surface, a single active surface, a
//! co-located hybrid surface and two cascaded passive surfaces.
//!
//! Passive-only systems transmit with `Pt + Pv` so that every system spends
//! the same total power. Single-surface systems are placed at whichever of the
//! two existing surface sites gives the higher SNR.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{distance, Point, SystemParams, Topology};
use crate::snr::rate_from_snr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkSystem {
    SinglePirs,
    SingleAirs,
    HybridIrs,
    DoublePirs,
}

impl BenchmarkSystem {
    pub const ALL: [BenchmarkSystem; 4] = [
        BenchmarkSystem::SinglePirs,
        BenchmarkSystem::SingleAirs,
        BenchmarkSystem::HybridIrs,
        BenchmarkSystem::DoublePirs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkSystem::SinglePirs => "single-pirs",
            BenchmarkSystem::SingleAirs => "single-airs",
            BenchmarkSystem::HybridIrs => "hybrid-irs",
            BenchmarkSystem::DoublePirs => "double-pirs",
        }
    }
}

impl fmt::Display for BenchmarkSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown benchmark `{s}`")))
    }
}

/// Where a benchmark surface sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    /// The first surface position (near Tx).
    A,
    /// The second surface position (near Rx).
    B,
    /// Both positions, one surface each.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchmarkResult {
    pub system: BenchmarkSystem,
    pub n_act: u64,
    pub n_pas: u64,
    pub site: Site,
    /// Amplitude of the active elements, 1 for passive-only systems.
    pub amplitude: f64,
    pub snr: f64,
    pub rate: f64,
}

impl BenchmarkResult {
    fn new(system: BenchmarkSystem, n_act: u64, n_pas: u64, site: Site, amplitude: f64, snr: f64) -> Self {
        Self {
            system,
            n_act,
            n_pas,
            site,
            amplitude,
            snr,
            rate: rate_from_snr(snr),
        }
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr.log10()
    }
}

/// Incoming and outgoing distance of a single surface at each site.
fn site_distances(topo: &Topology) -> [(Site, f64, f64); 2] {
    let p = &topo.positions;
    [
        (Site::A, topo.d1, distance(p.rx, p.irs_a)),
        (Site::B, distance(p.irs_b, p.tx), topo.d3),
    ]
}

/// Higher SNR wins, site A on ties.
fn best_site(results: impl IntoIterator<Item = BenchmarkResult>) -> Option<BenchmarkResult> {
    results
        .into_iter()
        .fold(None, |best: Option<BenchmarkResult>, r| match best {
            Some(b) if b.snr >= r.snr => Some(b),
            _ => Some(r),
        })
}

fn affordable(budget: f64, cost: f64) -> u64 {
    // guard against 2.9999999 style float results
    ((budget / cost) * (1.0 + 1e-12)).floor() as u64
}

fn require(budget: f64, needed: f64) -> Result<()> {
    if budget < needed {
        Err(Error::InfeasibleBudget { budget })
    } else {
        Ok(())
    }
}

/// `(Pt + Pv) ρ² N² / (d_a² d_b² σ0²)`.
pub fn single_pirs_snr(params: &SystemParams, n: u64, d_a: f64, d_b: f64) -> f64 {
    let n = n as f64;
    (params.transmit_power + params.amp_power_budget) * params.ref_gain.powi(2) * n * n
        / (d_a * d_a * d_b * d_b * params.rx_noise_power)
}

/// `N = ⌊M / W_pas⌋` passive elements at the better site.
pub fn rate_single_pirs(params: &SystemParams, topo: &Topology) -> Result<BenchmarkResult> {
    require(params.total_budget, params.cost_passive)?;
    let n = affordable(params.total_budget, params.cost_passive);
    Ok(best_site(site_distances(topo).map(|(site, da, db)| {
        BenchmarkResult::new(BenchmarkSystem::SinglePirs, 0, n, site, 1.0, single_pirs_snr(params, n, da, db))
    }))
    .expect("two sites"))
}

/// Amplitude of `n` active elements that exhausts `Pv`:
/// `α² = Pv d_a² / ((Pt ρ + σv² d_a²) n)`.
pub fn single_airs_amplitude(params: &SystemParams, n: u64, d_a: f64) -> f64 {
    (params.amp_power_budget * d_a * d_a
        / ((params.transmit_power * params.ref_gain + params.amp_noise_power * d_a * d_a) * n as f64))
        .sqrt()
}

/// `Pt Pv ρ² N / (σv² ρ Pv d_a² + σ0² d_b² (Pt ρ + σv² d_a²))`.
pub fn single_airs_snr(params: &SystemParams, n: u64, d_a: f64, d_b: f64) -> f64 {
    let SystemParams {
        transmit_power: pt,
        amp_power_budget: pv,
        rx_noise_power: s0,
        amp_noise_power: sv,
        ref_gain: rho,
        ..
    } = *params;
    let (da2, db2) = (d_a * d_a, d_b * d_b);
    pt * pv * rho * rho * n as f64 / (sv * rho * pv * da2 + s0 * db2 * (pt * rho + sv * da2))
}

/// `N = ⌊M / W_act⌋` active elements at the better site. The amplitude is
/// reported but not constrained to be at least one.
pub fn rate_single_airs(params: &SystemParams, topo: &Topology) -> Result<BenchmarkResult> {
    require(params.total_budget, params.cost_active)?;
    let n = affordable(params.total_budget, params.cost_active);
    Ok(best_site(site_distances(topo).map(|(site, da, db)| {
        BenchmarkResult::new(
            BenchmarkSystem::SingleAirs,
            n,
            0,
            site,
            single_airs_amplitude(params, n, da),
            single_airs_snr(params, n, da, db),
        )
    }))
    .expect("two sites"))
}

/// SNR of a co-located hybrid surface with `n_a` active (amplitude `α`) and
/// `n_p` passive elements, all co-phased:
/// `Pt ρ² (α n_a + n_p)² / (d_a² d_b² (σv² α² ρ n_a / d_b² + σ0²))`.
///
/// Returns `None` when the power-budget amplitude is below one.
pub fn hybrid_snr(params: &SystemParams, n_a: u64, n_p: u64, d_a: f64, d_b: f64) -> Option<(f64, f64)> {
    let alpha = single_airs_amplitude(params, n_a, d_a);
    if alpha < 1.0 {
        return None;
    }
    let rho = params.ref_gain;
    let amp = alpha * n_a as f64 + n_p as f64;
    let signal = params.transmit_power * rho * rho * amp * amp / (d_a * d_a * d_b * d_b);
    let noise = params.amp_noise_power * alpha * alpha * rho * n_a as f64 / (d_b * d_b) + params.rx_noise_power;
    Some((alpha, signal / noise))
}

/// Hybrid surface at the better site, best integer split with the leftover
/// budget spent on passive elements.
pub fn rate_hybrid_irs(params: &SystemParams, topo: &Topology) -> Result<BenchmarkResult> {
    require(params.total_budget, params.cost_active + params.cost_passive)?;
    let na_max = affordable(params.total_budget, params.cost_active);
    let mut results = Vec::with_capacity(2);
    for (site, da, db) in site_distances(topo) {
        let best = (1..=na_max)
            .filter_map(|na| {
                let np = affordable(params.total_budget - params.cost_active * na as f64, params.cost_passive);
                hybrid_snr(params, na, np, da, db).map(|(alpha, snr)| (na, np, alpha, snr))
            })
            // larger SNR, then fewer active elements
            .fold(None, |best: Option<(u64, u64, f64, f64)>, c| match best {
                Some(b) if b.3 >= c.3 => Some(b),
                _ => Some(c),
            });
        if let Some((na, np, alpha, snr)) = best {
            results.push(BenchmarkResult::new(BenchmarkSystem::HybridIrs, na, np, site, alpha, snr));
        }
    }
    best_site(results).ok_or(Error::AmplitudeBelowOne(single_airs_amplitude(params, 1, topo.d1)))
}

/// `(Pt + Pv) ρ³ N1² N2² / (d1² d2² d3² σ0²)`.
pub fn double_pirs_snr(params: &SystemParams, n1: u64, n2: u64, topo: &Topology) -> f64 {
    let (n1, n2) = (n1 as f64, n2 as f64);
    (params.transmit_power + params.amp_power_budget) * params.ref_gain.powi(3) * n1 * n1 * n2 * n2
        / ((topo.d1 * topo.d2 * topo.d3).powi(2) * params.rx_noise_power)
}

/// Two passive surfaces at both sites with `⌊M / (2 W_pas)⌋` elements each.
pub fn rate_double_pirs(params: &SystemParams, topo: &Topology) -> Result<BenchmarkResult> {
    require(params.total_budget, 2.0 * params.cost_passive)?;
    let n = affordable(params.total_budget, 2.0 * params.cost_passive);
    Ok(BenchmarkResult::new(
        BenchmarkSystem::DoublePirs,
        0,
        2 * n,
        Site::Both,
        1.0,
        double_pirs_snr(params, n, n, topo),
    ))
}

pub fn rate_benchmark(system: BenchmarkSystem, params: &SystemParams, topo: &Topology) -> Result<BenchmarkResult> {
    match system {
        BenchmarkSystem::SinglePirs => rate_single_pirs(params, topo),
        BenchmarkSystem::SingleAirs => rate_single_airs(params, topo),
        BenchmarkSystem::HybridIrs => rate_hybrid_irs(params, topo),
        BenchmarkSystem::DoublePirs => rate_double_pirs(params, topo),
    }
}

/// Position of a single-surface benchmark.
pub fn site_position(topo: &Topology, site: Site) -> Option<Point> {
    match site {
        Site::A => Some(topo.positions.irs_a),
        Site::B => Some(topo.positions.irs_b),
        Site::Both => None,
    }
}
