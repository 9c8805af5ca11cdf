//! Splitting the element budget between the active and passive surface.
//!
//! With the optimal amplitude substituted, maximizing the rate is the same as
//! minimizing `ζ = a / x_act + b / (x_act x_pas²)` subject to
//! `W_act x_act + W_pas x_pas ≤ M`. In log variables the objective is a sum of
//! exponentials of affine functions and therefore convex, and the budget is
//! tight at the optimum. Substituting the active budget constraint leaves a
//! one-dimensional problem in `x_pas` whose logarithm is convex, which is
//! solved by golden-section search.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::reflection;
use crate::scenario::{SystemParams, Topology};
use crate::snr::{self, LinkBudget, ZetaCoefficients};
use crate::Scheme;

/// Element counts of the active and passive surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Allocation {
    pub n_act: f64,
    pub n_pas: f64,
    /// Counts may be fractional (relaxed problem).
    pub continuous: bool,
    pub scheme: Scheme,
}

impl Allocation {
    pub fn integer(n_act: u64, n_pas: u64, scheme: Scheme) -> Self {
        Self {
            n_act: n_act as f64,
            n_pas: n_pas as f64,
            continuous: false,
            scheme,
        }
    }

    pub fn continuous(x_act: f64, x_pas: f64, scheme: Scheme) -> Self {
        Self {
            n_act: x_act,
            n_pas: x_pas,
            continuous: true,
            scheme,
        }
    }

    /// Integer counts of the (first, second) surface in cascade order.
    pub fn surface_sizes(&self) -> Result<(usize, usize)> {
        let integral = |x: f64| x >= 1.0 && x.fract() == 0.0 && x < usize::MAX as f64;
        if !(integral(self.n_act) && integral(self.n_pas)) {
            return Err(Error::NonIntegerAllocation {
                n_act: self.n_act,
                n_pas: self.n_pas,
            });
        }
        let (a, p) = (self.n_act as usize, self.n_pas as usize);
        Ok(if self.scheme.active_first() { (a, p) } else { (p, a) })
    }

    pub fn cost(&self, params: &SystemParams) -> f64 {
        params.cost_active * self.n_act + params.cost_passive * self.n_pas
    }

    pub fn within_budget(&self, params: &SystemParams) -> bool {
        self.n_act >= 1.0
            && self.n_pas >= 1.0
            && self.cost(params) <= params.total_budget * (1.0 + 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Continuous convex optimum, then rounded.
    Optimal,
    /// `(M/(3W_act), 2M/(3W_pas))`, rounded to the nearest active count.
    ClosedForm,
    /// Full integer enumeration.
    Exhaustive,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Optimal => "optimal",
            Method::ClosedForm => "closed-form",
            Method::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(Method::Optimal),
            "closed-form" | "closed_form" => Ok(Method::ClosedForm),
            "exhaustive" => Ok(Method::Exhaustive),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    /// Final bracket width in passive elements (continuous solver only).
    pub interval_width: f64,
    /// Integer points evaluated.
    pub candidates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AllocationSolution {
    pub allocation: Allocation,
    /// α* (TAPR) or β* (TPAR) at this allocation.
    pub amplitude: f64,
    pub budget: LinkBudget,
    pub method: Method,
    pub diagnostics: SolverDiagnostics,
}

impl AllocationSolution {
    fn evaluate(
        params: &SystemParams,
        topo: &Topology,
        allocation: Allocation,
        method: Method,
        diagnostics: SolverDiagnostics,
    ) -> Self {
        Self {
            allocation,
            amplitude: reflection::optimal_amplitude(params, topo, &allocation),
            budget: snr::snr_closed_form(params, topo, &allocation),
            method,
            diagnostics,
        }
    }

    pub fn rate(&self) -> f64 {
        self.budget.rate
    }
}

/// Result of a golden-section search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenSection {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    pub width: f64,
}

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`, stopping when
/// the bracket is narrower than `tol` or after `max_iter` reductions.
pub fn golden_section(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> GoldenSection {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while b - a > tol && iterations < max_iter {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iterations += 1;
    }
    // endpoints can win when the minimum sits on the boundary
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    GoldenSection {
        x: best.0,
        fx: best.1,
        iterations,
        width: b - a,
    }
}

/// Relative bracket tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_GOLDEN_ITERS: usize = 500;

/// Continuous minimizer of `coeffs` on the tight budget line
/// `W_act x_act + W_pas x_pas = M` with both counts at least one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineOptimum {
    pub x_act: f64,
    pub x_pas: f64,
    pub objective: f64,
    pub diagnostics: SolverDiagnostics,
}

pub fn minimize_on_budget_line(
    coeffs: &ZetaCoefficients,
    budget: f64,
    cost_active: f64,
    cost_passive: f64,
    tol: f64,
) -> Result<LineOptimum> {
    let hi = (budget - cost_active) / cost_passive;
    if !(hi >= 1.0) {
        return Err(Error::InfeasibleBudget { budget });
    }
    let x_act = |t: f64| (budget - cost_passive * t) / cost_active;
    // log ζ along the line is convex in x_pas
    let objective = |t: f64| coeffs.eval(x_act(t), t).ln();
    let gs = golden_section(objective, 1.0, hi, tol * hi, MAX_GOLDEN_ITERS);
    let x_pas = gs.x;
    Ok(LineOptimum {
        x_act: x_act(x_pas),
        x_pas,
        objective: coeffs.eval(x_act(x_pas), x_pas),
        diagnostics: SolverDiagnostics {
            iterations: gs.iterations,
            interval_width: gs.width,
            candidates: 0,
        },
    })
}

/// Relaxed optimum of the exact objective.
pub fn solve_continuous(
    params: &SystemParams,
    topo: &Topology,
    scheme: Scheme,
    tol: f64,
) -> Result<AllocationSolution> {
    let coeffs = snr::zeta_coefficients(params, topo, scheme);
    let opt = minimize_on_budget_line(
        &coeffs,
        params.total_budget,
        params.cost_active,
        params.cost_passive,
        tol,
    )?;
    Ok(AllocationSolution::evaluate(
        params,
        topo,
        Allocation::continuous(opt.x_act, opt.x_pas, scheme),
        Method::Optimal,
        opt.diagnostics,
    ))
}

/// `(M / (3 W_act), 2M / (3 W_pas))`, optimal for the large-`d2`
/// approximation in either scheme.
pub fn closed_form_split(budget: f64, cost_active: f64, cost_passive: f64, scheme: Scheme) -> Allocation {
    Allocation::continuous(
        budget / (3.0 * cost_active),
        2.0 * budget / (3.0 * cost_passive),
        scheme,
    )
}

fn feasible(params: &SystemParams, topo: &Topology, alloc: &Allocation) -> bool {
    alloc.within_budget(params)
        && reflection::validate_amplitude(reflection::optimal_amplitude(params, topo, alloc)).is_ok()
}

/// Largest passive count affordable next to `n_act` active elements.
fn max_passive(params: &SystemParams, n_act: u64) -> u64 {
    let rest = params.total_budget - params.cost_active * n_act as f64;
    if rest < params.cost_passive {
        0
    } else {
        // guard against 2.9999999 style float results
        ((rest / params.cost_passive) * (1.0 + 1e-12)).floor() as u64
    }
}

/// Ordering used to pick among integer candidates: higher rate, then more
/// passive elements, then more active elements.
fn better(a: &(f64, u64, u64), b: &(f64, u64, u64)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.cmp(&b.1))
        .then(a.2.cmp(&b.2))
}

fn pick_best(
    params: &SystemParams,
    topo: &Topology,
    scheme: Scheme,
    candidates: impl IntoIterator<Item = (u64, u64)>,
) -> (Option<(f64, u64, u64)>, usize) {
    let mut seen = 0;
    let mut best: Option<(f64, u64, u64)> = None;
    for (na, np) in candidates {
        let alloc = Allocation::integer(na, np, scheme);
        if na == 0 || np == 0 || !feasible(params, topo, &alloc) {
            continue;
        }
        seen += 1;
        let key = (snr::snr_closed_form(params, topo, &alloc).rate, np, na);
        if best.is_none_or(|b| better(&key, &b) == Ordering::Greater) {
            best = Some(key);
        }
    }
    (best, seen)
}

/// Integer allocation near a continuous solution.
///
/// Candidates are the floor/ceil combinations, each repaired onto the budget
/// (drop passive, then active elements) and each also completed with as many
/// passive elements as the leftover budget allows. The best feasible one by
/// closed-form rate wins.
pub fn round_to_integer(
    continuous: &Allocation,
    params: &SystemParams,
    topo: &Topology,
    method: Method,
) -> Result<AllocationSolution> {
    let scheme = continuous.scheme;
    let floors = |x: f64| [(x.floor().max(1.0)) as u64, (x.ceil().max(1.0)) as u64];
    let mut candidates = Vec::with_capacity(12);
    for na in floors(continuous.n_act) {
        for np in floors(continuous.n_pas) {
            let (mut na, mut np) = (na, np);
            let cost = |na: u64, np: u64| params.cost_active * na as f64 + params.cost_passive * np as f64;
            while cost(na, np) > params.total_budget && np > 1 {
                np -= 1;
            }
            while cost(na, np) > params.total_budget && na > 1 {
                na -= 1;
            }
            candidates.push((na, np));
            candidates.push((na, max_passive(params, na)));
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    match pick_best(params, topo, scheme, candidates) {
        (Some((_, np, na)), seen) => Ok(AllocationSolution::evaluate(
            params,
            topo,
            Allocation::integer(na, np, scheme),
            method,
            SolverDiagnostics {
                candidates: seen,
                ..Default::default()
            },
        )),
        (None, _) => Err(Error::InfeasibleBudget {
            budget: params.total_budget,
        }),
    }
}

/// Closed-form split with the active count rounded to the nearest integer and
/// the rest of the budget spent on passive elements.
pub fn integer_closed_form(
    params: &SystemParams,
    topo: &Topology,
    scheme: Scheme,
) -> Result<AllocationSolution> {
    if params.total_budget < params.cost_active + params.cost_passive {
        return Err(Error::InfeasibleBudget {
            budget: params.total_budget,
        });
    }
    let split = closed_form_split(params.total_budget, params.cost_active, params.cost_passive, scheme);
    let mut n_act = (split.n_act.round().max(1.0)) as u64;
    while n_act > 1 && max_passive(params, n_act) < 1 {
        n_act -= 1;
    }
    let n_pas = max_passive(params, n_act);
    let alloc = Allocation::integer(n_act, n_pas, scheme);
    if !alloc.within_budget(params) {
        return Err(Error::InfeasibleBudget {
            budget: params.total_budget,
        });
    }
    Ok(AllocationSolution::evaluate(
        params,
        topo,
        alloc,
        Method::ClosedForm,
        SolverDiagnostics {
            candidates: 1,
            ..Default::default()
        },
    ))
}

/// Upper limit on the number of integer points [`exhaustive_search`] visits.
pub const EXHAUSTIVE_LIMIT: u128 = 10_000_000;

/// Number of integer pairs `(n_act, n_pas) ≥ 1` within the budget.
pub fn candidate_count(params: &SystemParams) -> u128 {
    if params.total_budget < params.cost_active + params.cost_passive {
        return 0;
    }
    let na_max = ((params.total_budget - params.cost_passive) / params.cost_active).floor() as u128;
    if na_max > EXHAUSTIVE_LIMIT {
        // certainly above the limit, bound from below
        return na_max;
    }
    (1..=na_max as u64).map(|na| max_passive(params, na) as u128).sum()
}

/// Best integer allocation over the whole feasible set.
pub fn exhaustive_search(
    params: &SystemParams,
    topo: &Topology,
    scheme: Scheme,
) -> Result<AllocationSolution> {
    let count = candidate_count(params);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            candidates: count,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let na_max = if params.total_budget >= params.cost_active + params.cost_passive {
        ((params.total_budget - params.cost_passive) / params.cost_active).floor() as u64
    } else {
        0
    };
    let (best, seen) = (1..=na_max)
        .into_par_iter()
        .map(|na| pick_best(params, topo, scheme, (1..=max_passive(params, na)).map(move |np| (na, np))))
        .reduce(
            || (None, 0),
            |(a, sa), (b, sb)| {
                let best = match (a, b) {
                    (Some(x), Some(y)) => Some(if better(&x, &y) == Ordering::Less { y } else { x }),
                    (x, None) => x,
                    (None, y) => y,
                };
                (best, sa + sb)
            },
        );
    match best {
        Some((_, np, na)) => Ok(AllocationSolution::evaluate(
            params,
            topo,
            Allocation::integer(na, np, scheme),
            Method::Exhaustive,
            SolverDiagnostics {
                candidates: seen,
                ..Default::default()
            },
        )),
        None => Err(Error::InfeasibleBudget {
            budget: params.total_budget,
        }),
    }
}

/// Integer allocation with the requested method.
pub fn solve(
    params: &SystemParams,
    topo: &Topology,
    scheme: Scheme,
    method: Method,
) -> Result<AllocationSolution> {
    if params.total_budget < params.cost_active + params.cost_passive {
        return Err(Error::InfeasibleBudget {
            budget: params.total_budget,
        });
    }
    match method {
        Method::Optimal => {
            let cont = solve_continuous(params, topo, scheme, DEFAULT_TOL)?;
            let mut sol = round_to_integer(&cont.allocation, params, topo, Method::Optimal)?;
            sol.diagnostics.iterations = cont.diagnostics.iterations;
            sol.diagnostics.interval_width = cont.diagnostics.interval_width;
            Ok(sol)
        }
        Method::ClosedForm => integer_closed_form(params, topo, scheme),
        Method::Exhaustive => exhaustive_search(params, topo, scheme),
    }
}
