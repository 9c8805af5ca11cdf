//! Deterministic line-of-sight channels built from uniform planar array
//! (UPA) steering vectors.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};

use crate::allocation::Allocation;
use crate::error::Result;
use crate::scenario::{distance, sub, LinkAngles, Point, SystemParams, Topology};
use crate::Scheme;

pub type C64 = Complex<f64>;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Steering phase per element index and unit argument: `2δ/λ` with
/// half-wavelength spacing.
pub const SPACING_FACTOR: f64 = 1.0;

/// Unit-modulus array response; entry 0 is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(pub CVector);

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn phases(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|z| z.arg())
    }
}

/// Uniform linear array factor `[1, e^{-jπw}, ..., e^{-jπ(N-1)w}]`.
pub fn steering(w: f64, n: usize) -> SteeringVector {
    SteeringVector(CVector::from_fn(n, |k, _| {
        if k == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::from_polar(1.0, -PI * k as f64 * w)
        }
    }))
}

/// Near-square grid `N = N_x × N_y` with `N_x` the largest divisor of `N`
/// not exceeding `√N`.
pub fn grid_factor(n: usize) -> (usize, usize) {
    assert!(n >= 1, "array must have at least one element");
    let mut nx = (n as f64).sqrt().floor() as usize;
    while nx * nx > n {
        nx -= 1;
    }
    while !n.is_multiple_of(nx) {
        nx -= 1;
    }
    (nx, n / nx)
}

fn kron(a: &CVector, b: &CVector) -> CVector {
    let nb = b.len();
    CVector::from_fn(a.len() * nb, |i, _| a[i / nb] * b[i % nb])
}

/// UPA response for a direction, `a(κ sinθ sinϑ, N_x) ⊗ a(κ cosϑ, N_y)`.
pub fn upa_response(azimuth: f64, elevation: f64, n: usize) -> SteeringVector {
    let (nx, ny) = grid_factor(n);
    let wx = SPACING_FACTOR * azimuth.sin() * elevation.sin();
    let wy = SPACING_FACTOR * elevation.cos();
    SteeringVector(kron(&steering(wx, nx).0, &steering(wy, ny).0))
}

fn upa(angles: LinkAngles, n: usize) -> SteeringVector {
    upa_response(angles.azimuth, angles.elevation, n)
}

/// `√ρ / d · e^{-j2πd/λ}`.
pub fn path_coefficient(params: &SystemParams, d: f64) -> C64 {
    C64::from_polar(
        params.ref_gain.sqrt() / d,
        -2.0 * PI * d / params.wavelength,
    )
}

/// Channels of a double-reflection link. `g` feeds the first surface (A
/// site), `s` couples first to second, `h` leaves the second surface (B
/// site) towards Rx.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTriple {
    pub scheme: Scheme,
    /// `N_first × 1`.
    pub g: CVector,
    /// `N_second × N_first`, rank one.
    pub s: CMatrix,
    /// `N_second × 1`.
    pub h: CVector,
    /// Response of the first surface towards Tx (`u_TA`).
    pub u_first_tx: SteeringVector,
    /// Response of the first surface towards the second (`u_BA`).
    pub u_first_out: SteeringVector,
    /// Response of the second surface towards the first (`u_AB`).
    pub u_second_in: SteeringVector,
    /// Response of the second surface towards Rx (`u_RB`).
    pub u_second_rx: SteeringVector,
}

impl ChannelTriple {
    pub fn n_first(&self) -> usize {
        self.g.len()
    }

    pub fn n_second(&self) -> usize {
        self.h.len()
    }
}

pub fn build_channels(
    params: &SystemParams,
    topo: &Topology,
    alloc: &Allocation,
) -> Result<ChannelTriple> {
    let (n_first, n_second) = alloc.surface_sizes()?;

    let u_first_tx = upa(topo.a_to_tx, n_first);
    let u_first_out = upa(topo.a_to_b, n_first);
    let u_second_in = upa(topo.b_to_a, n_second);
    let u_second_rx = upa(topo.b_to_rx, n_second);

    let g = u_first_tx.0.clone() * path_coefficient(params, topo.d1);
    let s = (&u_second_in.0 * u_first_out.0.adjoint()) * path_coefficient(params, topo.d2);
    let h = u_second_rx.0.clone() * path_coefficient(params, topo.d3);

    Ok(ChannelTriple {
        scheme: alloc.scheme,
        g,
        s,
        h,
        u_first_tx,
        u_first_out,
        u_second_in,
        u_second_rx,
    })
}

/// Tx → surface → Rx link through a single surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleHop {
    pub g: CVector,
    pub h: CVector,
    pub u_in: SteeringVector,
    pub u_out: SteeringVector,
    pub d_in: f64,
    pub d_out: f64,
}

pub fn build_single_hop(
    params: &SystemParams,
    tx: Point,
    site: Point,
    rx: Point,
    n: usize,
) -> SingleHop {
    let d_in = distance(site, tx);
    let d_out = distance(rx, site);
    let u_in = upa(LinkAngles::from_displacement(sub(tx, site)), n);
    let u_out = upa(LinkAngles::from_displacement(sub(rx, site)), n);
    SingleHop {
        g: u_in.0.clone() * path_coefficient(params, d_in),
        h: u_out.0.clone() * path_coefficient(params, d_out),
        u_in,
        u_out,
        d_in,
        d_out,
    }
}
