use std::io::Write;

use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::{self, AllocationSolution, Method, EXHAUSTIVE_LIMIT};
use crate::benchmarks::{self, BenchmarkResult, BenchmarkSystem};
use crate::error::{Error, Result};
use crate::scenario::{dbm_to_watts, Scenario, SystemParams};
use crate::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// Element budget `M`.
    TotalBudget,
    /// Amplification power budget `Pv` in dBm.
    AmpPowerDbm,
    /// `W_act / W_pas` with `W_pas` held fixed.
    CostRatio,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::TotalBudget => "total-budget",
            SweepParam::AmpPowerDbm => "amp-power-dbm",
            SweepParam::CostRatio => "cost-ratio",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: &SystemParams, value: f64) -> SystemParams {
        let mut p = *base;
        match self {
            SweepParam::TotalBudget => p.total_budget = value,
            SweepParam::AmpPowerDbm => p.amp_power_budget = dbm_to_watts(value),
            SweepParam::CostRatio => p.cost_active = value * p.cost_passive,
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub step: f64,
    pub schemes: Vec<Scheme>,
    pub benchmarks: Vec<BenchmarkSystem>,
    pub method: Method,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.from.is_finite() && self.to.is_finite() && self.step.is_finite()) {
            return Err(Error::Config("sweep bounds must be finite".into()));
        }
        if !(self.step > 0.0) {
            return Err(Error::Config(format!("sweep step must be positive, got {}", self.step)));
        }
        if self.from > self.to {
            return Err(Error::Config(format!("sweep runs backwards: {} > {}", self.from, self.to)));
        }
        Ok(())
    }

    /// `from, from + step, ...` up to and including `to` (within rounding).
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.from + self.step * i as f64).collect()
    }
}

/// One CSV line: a system evaluated at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep_param: SweepParam,
    pub value: f64,
    pub system: String,
    pub n_act: Option<f64>,
    pub n_pas: Option<f64>,
    pub amplitude: Option<f64>,
    /// Rounded to six decimals, as written.
    pub snr_db: Option<f64>,
    /// Derived from the rounded `snr_db`.
    pub rate_bps_hz: Option<f64>,
    pub method: String,
    pub error: Option<String>,
}

/// dB value with six decimals; `inf`/`-inf` for unbounded values.
pub fn format_db(db: f64) -> String {
    if db.is_finite() {
        format!("{db:.6}")
    } else if db > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// `log2(1 + 10^(dB/10))` of a formatted dB value.
pub fn rate_from_db(db: &str) -> f64 {
    let db: f64 = db.parse().unwrap_or(f64::NAN);
    crate::snr::rate_from_snr(10f64.powf(db / 10.0))
}

impl ResultRow {
    fn with_snr(
        param: SweepParam,
        value: f64,
        system: String,
        counts: (f64, f64),
        amplitude: f64,
        snr_db: f64,
        method: String,
    ) -> Self {
        let db = format_db(snr_db);
        Self {
            sweep_param: param,
            value,
            system,
            n_act: Some(counts.0),
            n_pas: Some(counts.1),
            amplitude: Some(amplitude),
            snr_db: Some(db.parse().unwrap_or(f64::NAN)),
            rate_bps_hz: Some(rate_from_db(&db)),
            method,
            error: None,
        }
    }

    pub fn from_solution(param: SweepParam, value: f64, sol: &AllocationSolution) -> Self {
        let a = sol.allocation;
        Self::with_snr(
            param,
            value,
            a.scheme.to_string(),
            (a.n_act, a.n_pas),
            sol.amplitude,
            sol.budget.snr_db(),
            sol.method.to_string(),
        )
    }

    pub fn from_benchmark(param: SweepParam, value: f64, r: &BenchmarkResult) -> Self {
        Self::with_snr(
            param,
            value,
            r.system.to_string(),
            (r.n_act as f64, r.n_pas as f64),
            r.amplitude,
            r.snr_db(),
            "benchmark".into(),
        )
    }

    pub fn failed(param: SweepParam, value: f64, system: String, method: String, err: &Error) -> Self {
        Self {
            sweep_param: param,
            value,
            system,
            n_act: None,
            n_pas: None,
            amplitude: None,
            snr_db: None,
            rate_bps_hz: None,
            method,
            error: Some(err.to_string()),
        }
    }

    fn record(&self) -> [String; 10] {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        [
            self.sweep_param.as_str().to_string(),
            self.value.to_string(),
            self.system.clone(),
            opt(self.n_act),
            opt(self.n_pas),
            opt(self.amplitude),
            self.snr_db.map(format_db).unwrap_or_default(),
            opt(self.rate_bps_hz),
            self.method.clone(),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "sweep_param",
    "value",
    "system",
    "n_act",
    "n_pas",
    "amplitude",
    "snr_db",
    "rate_bps_hz",
    "method",
    "error",
];

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let err = |e: csv::Error| Error::Config(format!("output: {e}"));
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER).map_err(err)?;
    for row in rows {
        out.write_record(row.record()).map_err(err)?;
    }
    out.flush().map_err(|e| Error::Config(format!("output: {e}")))
}

fn point_rows(scenario: &Scenario, spec: &SweepSpec, value: f64) -> Vec<ResultRow> {
    let params = spec.param.apply(&scenario.params, value);
    let topo = &scenario.topology;
    let valid = params.validate();
    let mut rows = Vec::with_capacity(spec.schemes.len() + spec.benchmarks.len());
    for &scheme in &spec.schemes {
        let method = spec.method.to_string();
        let res = valid
            .clone()
            .and_then(|_| allocation::solve(&params, topo, scheme, spec.method));
        rows.push(match res {
            Ok(sol) => ResultRow::from_solution(spec.param, value, &sol),
            Err(e) => ResultRow::failed(spec.param, value, scheme.to_string(), method, &e),
        });
    }
    for &system in &spec.benchmarks {
        let res = valid
            .clone()
            .and_then(|_| benchmarks::rate_benchmark(system, &params, topo));
        rows.push(match res {
            Ok(r) => ResultRow::from_benchmark(spec.param, value, &r),
            Err(e) => ResultRow::failed(spec.param, value, system.to_string(), "benchmark".into(), &e),
        });
    }
    rows
}

/// Evaluates every requested system at every sweep value. Rows are ordered by
/// value, then schemes, then benchmarks; failures become rows with the error
/// column set.
pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let values = spec.values();
    if spec.method == Method::Exhaustive && !spec.schemes.is_empty() {
        for &v in &values {
            let count = allocation::candidate_count(&spec.param.apply(&scenario.params, v));
            if count > EXHAUSTIVE_LIMIT {
                return Err(Error::SearchSpaceTooLarge {
                    candidates: count,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
        }
    }
    let per_point: Vec<Vec<ResultRow>> = values.par_iter().map(|&v| point_rows(scenario, spec, v)).collect();
    Ok(per_point.into_iter().flatten().collect())
}
