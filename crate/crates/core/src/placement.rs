//! Grid search over the positions of both surfaces, alternated with the
//! element allocation.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::{self, Allocation, Method};
use crate::error::{Error, Result};
use crate::reflection;
use crate::scenario::{build_topology, Point, Positions, SystemParams, Topology, DEFAULT_D_MIN};
use crate::snr;
use crate::Scheme;

/// Closed interval sampled at `min, min + step, ...` up to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
}

impl AxisRange {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn points(&self, step: f64) -> Vec<f64> {
        let n = ((self.max - self.min) / step * (1.0 + 1e-12)).floor() as usize;
        (0..=n).map(|i| self.min + step * i as f64).collect()
    }

    fn center(&self, step: f64) -> f64 {
        let pts = self.points(step);
        pts[(pts.len() - 1) / 2]
    }
}

pub const DEFAULT_BOX_WIDTH: f64 = 30.0;
pub const DEFAULT_BOX_DEPTH: f64 = 10.0;

/// Candidate positions of the two surfaces, both at height `height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlacementGrid {
    pub a_x: AxisRange,
    pub a_y: AxisRange,
    pub b_x: AxisRange,
    pub b_y: AxisRange,
    pub step: f64,
    pub height: f64,
    pub d_min: f64,
}

impl PlacementGrid {
    /// `width × depth` box centred on each surface position (x and y), the
    /// surfaces' common height taken from `a`.
    pub fn around(a: Point, b: Point, width: f64, depth: f64, step: f64) -> Self {
        let span = |c: f64, ext: f64| AxisRange::new(c - ext / 2.0, c + ext / 2.0);
        Self {
            a_x: span(a[0], width),
            a_y: span(a[1], depth),
            b_x: span(b[0], width),
            b_y: span(b[1], depth),
            step,
            height: a[2],
            d_min: DEFAULT_D_MIN,
        }
    }

    /// 30 m × 10 m box around each reference surface position, 1 m step.
    pub fn reference() -> Self {
        let p = Positions::reference();
        Self::around(p.irs_a, p.irs_b, DEFAULT_BOX_WIDTH, DEFAULT_BOX_DEPTH, 1.0)
    }

    /// Grid containing only the given surface positions.
    pub fn single(a: Point, b: Point, height: f64) -> Self {
        Self {
            a_x: AxisRange::new(a[0], a[0]),
            a_y: AxisRange::new(a[1], a[1]),
            b_x: AxisRange::new(b[0], b[0]),
            b_y: AxisRange::new(b[1], b[1]),
            step: 1.0,
            height,
            d_min: DEFAULT_D_MIN,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParams(format!("grid step must be positive, got {}", self.step)));
        }
        for (name, r) in [("a_x", self.a_x), ("a_y", self.a_y), ("b_x", self.b_x), ("b_y", self.b_y)] {
            if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max) {
                return Err(Error::InvalidParams(format!(
                    "grid bounds {name} = [{}, {}] are not an interval",
                    r.min, r.max
                )));
            }
        }
        if !(self.height.is_finite() && self.d_min >= 0.0) {
            return Err(Error::InvalidParams("grid height and d_min must be finite".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        [self.a_x, self.a_y, self.b_x, self.b_y]
            .iter()
            .map(|r| r.points(self.step).len())
            .product()
    }

    pub fn center(&self) -> (Point, Point) {
        (
            [self.a_x.center(self.step), self.a_y.center(self.step), self.height],
            [self.b_x.center(self.step), self.b_y.center(self.step), self.height],
        )
    }
}

/// Rate at a placement, or `None` if the allocation's amplitude is infeasible
/// there.
fn placement_rate(params: &SystemParams, topo: &Topology, alloc: &Allocation) -> Option<f64> {
    let amp = reflection::optimal_amplitude(params, topo, alloc);
    reflection::validate_amplitude(amp).ok()?;
    Some(snr::snr_closed_form(params, topo, alloc).rate)
}

/// Grid indices `(ax, bx, ay, by)` with the best rate seen.
type Candidate = (f64, [usize; 4]);

fn pick(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => {
            // higher rate, then lexicographically smaller indices
            let ord = x.0.total_cmp(&y.0).then_with(|| y.1.cmp(&x.1));
            Some(if ord == Ordering::Less { y } else { x })
        }
        (x, None) => x,
        (None, y) => y,
    }
}

/// Joint grid argmax of the closed-form rate over both surface positions.
///
/// Pairs that violate `d_min` on any link or make the active amplitude fall
/// below one are skipped. Ties go to the smallest `x_A`, then `x_B`, `y_A`,
/// `y_B`.
pub fn optimize_placement_given_allocation(
    params: &SystemParams,
    tx: Point,
    rx: Point,
    alloc: &Allocation,
    grid: &PlacementGrid,
) -> Result<Topology> {
    grid.validate()?;
    let ax = grid.a_x.points(grid.step);
    let ay = grid.a_y.points(grid.step);
    let bx = grid.b_x.points(grid.step);
    let by = grid.b_y.points(grid.step);
    let positions = |[i, j, k, l]: [usize; 4]| Positions {
        tx,
        rx,
        irs_a: [ax[i], ay[k], grid.height],
        irs_b: [bx[j], by[l], grid.height],
    };

    let best = (0..ax.len())
        .into_par_iter()
        .map(|i| {
            let mut best = None;
            for j in 0..bx.len() {
                for k in 0..ay.len() {
                    for l in 0..by.len() {
                        let idx = [i, j, k, l];
                        let Ok(topo) = build_topology(positions(idx), grid.d_min) else {
                            continue;
                        };
                        if let Some(rate) = placement_rate(params, &topo, alloc) {
                            best = pick(best, Some((rate, idx)));
                        }
                    }
                }
            }
            best
        })
        .reduce(|| None, pick);

    let (_, idx) = best.ok_or(Error::NoFeasiblePlacement)?;
    build_topology(positions(idx), grid.d_min)
}

/// One completed placement + allocation round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AoIteration {
    pub iteration: usize,
    pub irs_a: Point,
    pub irs_b: Point,
    pub allocation: Allocation,
    pub amplitude: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AoTrace {
    pub iterations: Vec<AoIteration>,
    /// Rate improvement fell below the tolerance before `max_iters`.
    pub converged: bool,
}

impl AoTrace {
    pub fn last(&self) -> &AoIteration {
        self.iterations.last().expect("trace has at least one iteration")
    }

    pub fn final_rate(&self) -> f64 {
        self.last().rate
    }
}

pub const DEFAULT_AO_TOL: f64 = 1e-6;
pub const DEFAULT_AO_MAX_ITERS: usize = 20;

/// Alternates placement (grid argmax) and allocation (relaxed optimum, then
/// rounding), starting from the closed-form split with both surfaces at the
/// grid center.
///
/// An allocation step is only accepted if it does not lower the rate, so the
/// recorded rates never decrease.
pub fn alternating_optimize(
    params: &SystemParams,
    tx: Point,
    rx: Point,
    grid: &PlacementGrid,
    scheme: Scheme,
    tol: f64,
    max_iters: usize,
) -> Result<AoTrace> {
    grid.validate()?;
    params.validate()?;
    let (a0, b0) = grid.center();
    let start = build_topology(Positions { tx, rx, irs_a: a0, irs_b: b0 }, grid.d_min)?;
    let mut alloc = allocation::integer_closed_form(params, &start, scheme)?.allocation;
    let mut rate = f64::NEG_INFINITY;
    let mut iterations = Vec::new();
    let mut converged = false;

    for it in 1..=max_iters.max(1) {
        let topo = optimize_placement_given_allocation(params, tx, rx, &alloc, grid)?;
        let placed = placement_rate(params, &topo, &alloc).unwrap_or(f64::NEG_INFINITY);

        let (mut next_alloc, mut next_rate) = (alloc, placed);
        if let Ok(sol) = allocation::solve(params, &topo, scheme, Method::Optimal) {
            if sol.rate() >= placed {
                next_alloc = sol.allocation;
                next_rate = sol.rate();
            }
        }

        let improvement = next_rate - rate;
        alloc = next_alloc;
        rate = next_rate;
        iterations.push(AoIteration {
            iteration: it,
            irs_a: topo.positions.irs_a,
            irs_b: topo.positions.irs_b,
            allocation: alloc,
            amplitude: reflection::optimal_amplitude(params, &topo, &alloc),
            rate,
        });
        // a single cell leaves nothing for the placement step to improve
        if improvement < tol || grid.cell_count() == 1 {
            converged = true;
            break;
        }
    }
    Ok(AoTrace { iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TX: Point = [0.0, 0.0, 0.0];
    const RX: Point = [100.0, 0.0, 0.0];

    fn small_grid() -> PlacementGrid {
        PlacementGrid {
            a_x: AxisRange::new(5.0, 20.0),
            a_y: AxisRange::new(0.0, 6.0),
            b_x: AxisRange::new(85.0, 99.0),
            b_y: AxisRange::new(0.0, 6.0),
            step: 2.0,
            height: 10.0,
            d_min: 1.0,
        }
    }

    /// Sequential scan kept independent of the parallel search.
    fn brute_force(params: &SystemParams, alloc: &Allocation, grid: &PlacementGrid) -> (f64, Point, Point) {
        let mut best = (f64::NEG_INFINITY, [0.0; 3], [0.0; 3]);
        for xa in grid.a_x.points(grid.step) {
            for xb in grid.b_x.points(grid.step) {
                for ya in grid.a_y.points(grid.step) {
                    for yb in grid.b_y.points(grid.step) {
                        let a = [xa, ya, grid.height];
                        let b = [xb, yb, grid.height];
                        let Ok(t) = build_topology(Positions { tx: TX, rx: RX, irs_a: a, irs_b: b }, grid.d_min)
                        else {
                            continue;
                        };
                        if reflection::optimal_amplitude(params, &t, alloc) < 1.0 {
                            continue;
                        }
                        let r = snr::snr_closed_form(params, &t, alloc).rate;
                        if r > best.0 {
                            best = (r, a, b);
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn axis_points_cover_bounds() {
        assert_eq!(AxisRange::new(0.0, 3.0).points(1.0), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(AxisRange::new(0.0, 0.3).points(0.1).len(), 4);
        assert_eq!(AxisRange::new(2.0, 2.0).points(1.0), vec![2.0]);
        assert_eq!(PlacementGrid::reference().cell_count(), 31 * 11 * 31 * 11);
    }

    #[test]
    fn single_cell_grid() {
        let p = SystemParams::reference();
        let grid = PlacementGrid::single([15.0, 5.0, 10.0], [98.0, 5.0, 10.0], 10.0);
        let alloc = Allocation::integer(100, 1000, Scheme::Tapr);
        let t = optimize_placement_given_allocation(&p, TX, RX, &alloc, &grid).unwrap();
        assert_eq!(t.positions.irs_a, [15.0, 5.0, 10.0]);
        assert_eq!(t.positions.irs_b, [98.0, 5.0, 10.0]);

        let trace = alternating_optimize(&p, TX, RX, &grid, Scheme::Tapr, DEFAULT_AO_TOL, 20).unwrap();
        assert_eq!(trace.iterations.len(), 1);
        assert!(trace.converged);
        let direct = allocation::solve(&p, &Topology::reference(), Scheme::Tapr, Method::Optimal).unwrap();
        assert_eq!(trace.last().allocation, direct.allocation);
        assert_eq!(trace.final_rate(), direct.rate());
    }

    #[test]
    fn placement_is_grid_argmax() {
        let p = SystemParams::reference();
        let grid = small_grid();
        for scheme in Scheme::ALL {
            let alloc = Allocation::integer(100, 1000, scheme);
            let t = optimize_placement_given_allocation(&p, TX, RX, &alloc, &grid).unwrap();
            let (rate, a, b) = brute_force(&p, &alloc, &grid);
            assert_eq!(snr::snr_closed_form(&p, &t, &alloc).rate, rate);
            assert_eq!((t.positions.irs_a, t.positions.irs_b), (a, b));
        }
    }

    #[test]
    fn tpar_pulls_passive_surface_towards_tx() {
        let p = SystemParams::reference();
        let grid = small_grid();
        let alloc = Allocation::integer(100, 1000, Scheme::Tpar);
        let t = optimize_placement_given_allocation(&p, TX, RX, &alloc, &grid).unwrap();
        // smallest feasible x_A minimizes d1 d2 along the Tx-Rx axis
        assert_eq!(t.positions.irs_a[0], 5.0);
    }

    #[test]
    fn ties_resolve_to_smallest_coordinates() {
        // Tx and Rx placed symmetrically about y = 0: mirrored y give equal rates
        let p = SystemParams::reference();
        let grid = PlacementGrid {
            a_x: AxisRange::new(10.0, 10.0),
            a_y: AxisRange::new(-2.0, 2.0),
            b_x: AxisRange::new(90.0, 90.0),
            b_y: AxisRange::new(-2.0, 2.0),
            step: 1.0,
            height: 10.0,
            d_min: 1.0,
        };
        let alloc = Allocation::integer(50, 500, Scheme::Tapr);
        let t = optimize_placement_given_allocation(&p, TX, RX, &alloc, &grid).unwrap();
        let (rate, _, _) = brute_force(&p, &alloc, &grid);
        assert_eq!(snr::snr_closed_form(&p, &t, &alloc).rate, rate);
        let mirrored = build_topology(
            Positions {
                tx: TX,
                rx: RX,
                irs_a: [10.0, -t.positions.irs_a[1], 10.0],
                irs_b: [90.0, -t.positions.irs_b[1], 10.0],
            },
            1.0,
        )
        .unwrap();
        assert_eq!(snr::snr_closed_form(&p, &mirrored, &alloc).rate, rate);
        assert!(t.positions.irs_a[1] <= 0.0);
    }

    #[test]
    fn no_feasible_placement() {
        let p = SystemParams::reference();
        // surface A sits on Tx
        let grid = PlacementGrid::single([0.0, 0.0, 0.0], [98.0, 5.0, 0.0], 0.0);
        let alloc = Allocation::integer(10, 10, Scheme::Tapr);
        assert!(matches!(
            optimize_placement_given_allocation(&p, TX, RX, &alloc, &grid),
            Err(Error::NoFeasiblePlacement)
        ));
    }

    #[test]
    fn ao_trace_is_monotone_and_beats_fixed_placement() {
        let p = SystemParams::reference();
        let grid = small_grid();
        for scheme in Scheme::ALL {
            let trace = alternating_optimize(&p, TX, RX, &grid, scheme, DEFAULT_AO_TOL, 20).unwrap();
            assert!(trace.iterations.len() <= 20);
            for w in trace.iterations.windows(2) {
                assert!(w[1].rate >= w[0].rate - 1e-12);
            }
            // (15, 4) and (97, 4) lie on this grid
            let fixed = Topology::reference().with_surfaces([15.0, 4.0, 10.0], [97.0, 4.0, 10.0]).unwrap();
            let fixed_rate = allocation::solve(&p, &fixed, scheme, Method::Optimal).unwrap().rate();
            assert!(trace.final_rate() >= fixed_rate - 1e-12);
        }
    }
}
