//! Optimal phase shifts, common amplification factors and the resulting
//! reflection coefficients of both surfaces.

use std::f64::consts::TAU;

use crate::allocation::Allocation;
use crate::channel::{CVector, ChannelTriple, C64};
use crate::error::{Error, Result};
use crate::scenario::{SystemParams, Topology};
use crate::Scheme;

/// Per-element phases and common amplitudes of both surfaces. The passive
/// surface always has amplitude 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionConfig {
    /// Phases in `[0, 2π)` of the first surface (A site).
    pub phases_first: Vec<f64>,
    /// Phases in `[0, 2π)` of the second surface (B site).
    pub phases_second: Vec<f64>,
    pub amp_first: f64,
    pub amp_second: f64,
}

fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Phases that co-phase every element of `h^H Φ S Ψ g`.
///
/// First surface: `arg(u_BA) - arg(u_TA)`. Second surface:
/// `arg(u_RB) - arg(u_AB)`, which is the sign that cancels the conjugate
/// taken by `h^H`.
pub fn optimal_phases(ch: &ChannelTriple) -> ReflectionConfig {
    let phases_first = ch
        .u_first_out
        .phases()
        .zip(ch.u_first_tx.phases())
        .map(|(out, inc)| wrap_phase(out - inc))
        .collect();
    let phases_second = ch
        .u_second_rx
        .phases()
        .zip(ch.u_second_in.phases())
        .map(|(out, inc)| wrap_phase(out - inc))
        .collect();
    ReflectionConfig {
        phases_first,
        phases_second,
        amp_first: 1.0,
        amp_second: 1.0,
    }
}

impl ReflectionConfig {
    /// Sets the amplitude of whichever surface is active under `scheme`.
    pub fn with_active_amplitude(mut self, scheme: Scheme, amp: f64) -> Self {
        match scheme {
            Scheme::Tapr => {
                self.amp_first = amp;
                self.amp_second = 1.0;
            }
            Scheme::Tpar => {
                self.amp_first = 1.0;
                self.amp_second = amp;
            }
        }
        self
    }

    pub fn active_amplitude(&self, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::Tapr => self.amp_first,
            Scheme::Tpar => self.amp_second,
        }
    }

    /// Diagonal of `Ψ` (first surface).
    pub fn first_diag(&self) -> CVector {
        diag(&self.phases_first, self.amp_first)
    }

    /// Diagonal of `Φ` (second surface).
    pub fn second_diag(&self) -> CVector {
        diag(&self.phases_second, self.amp_second)
    }
}

fn diag(phases: &[f64], amp: f64) -> CVector {
    CVector::from_iterator(phases.len(), phases.iter().map(|&p| C64::from_polar(amp, p)))
}

fn check_dims(ch: &ChannelTriple, refl: &ReflectionConfig) -> Result<()> {
    let (n1, n2) = (ch.n_first(), ch.n_second());
    if ch.s.shape() != (n2, n1) || refl.phases_first.len() != n1 || refl.phases_second.len() != n2 {
        return Err(Error::DimensionMismatch(format!(
            "g: {n1}, h: {n2}, S: {:?}, phases: ({}, {})",
            ch.s.shape(),
            refl.phases_first.len(),
            refl.phases_second.len()
        )));
    }
    Ok(())
}

/// Row vector `h^H Φ S` (length `N_first`) and `h^H Φ` (length `N_second`).
pub(crate) fn receive_rows(ch: &ChannelTriple, refl: &ReflectionConfig) -> Result<(CVector, CVector)> {
    check_dims(ch, refl)?;
    let h_phi: CVector = ch.h.conjugate().component_mul(&refl.second_diag());
    let h_phi_s: CVector = ch.s.transpose() * &h_phi;
    Ok((h_phi_s, h_phi))
}

/// Cascaded scalar `h^H Φ S Ψ g`.
pub fn cascade(ch: &ChannelTriple, refl: &ReflectionConfig) -> Result<C64> {
    let (h_phi_s, _) = receive_rows(ch, refl)?;
    let psi_g = refl.first_diag().component_mul(&ch.g);
    Ok(h_phi_s.dot(&psi_g))
}

/// Output power of the active surface, signal plus amplification noise.
/// TAPR: `Pt‖Ψg‖² + σv²‖Ψ‖²`; TPAR: `Pt‖ΦSΨg‖² + σv²‖Φ‖²`.
pub fn active_output_power(
    params: &SystemParams,
    ch: &ChannelTriple,
    refl: &ReflectionConfig,
) -> Result<f64> {
    check_dims(ch, refl)?;
    let psi_g = refl.first_diag().component_mul(&ch.g);
    Ok(match ch.scheme {
        Scheme::Tapr => {
            params.transmit_power * psi_g.norm_squared()
                + params.amp_noise_power * refl.first_diag().norm_squared()
        }
        Scheme::Tpar => {
            let incident = &ch.s * psi_g;
            let out = refl.second_diag().component_mul(&incident);
            params.transmit_power * out.norm_squared()
                + params.amp_noise_power * refl.second_diag().norm_squared()
        }
    })
}

/// `α* = √(Pv d1² / (Pt ρ N_act + d1² σv² N_act))`.
pub fn optimal_alpha_tapr(params: &SystemParams, topo: &Topology, alloc: &Allocation) -> f64 {
    let d1sq = topo.d1 * topo.d1;
    let n = alloc.n_act;
    (params.amp_power_budget * d1sq
        / (params.transmit_power * params.ref_gain * n + d1sq * params.amp_noise_power * n))
        .sqrt()
}

/// `β* = √(Pv d2² / (Pt ρ² N_act N_pas² / d1² + d2² σv² N_act))`.
pub fn optimal_beta_tpar(params: &SystemParams, topo: &Topology, alloc: &Allocation) -> f64 {
    let d1sq = topo.d1 * topo.d1;
    let d2sq = topo.d2 * topo.d2;
    let (xa, xp) = (alloc.n_act, alloc.n_pas);
    let rho = params.ref_gain;
    (params.amp_power_budget * d2sq
        / (params.transmit_power * rho * rho * xa * xp * xp / d1sq
            + d2sq * params.amp_noise_power * xa))
        .sqrt()
}

/// α* for TAPR or β* for TPAR.
pub fn optimal_amplitude(params: &SystemParams, topo: &Topology, alloc: &Allocation) -> f64 {
    match alloc.scheme {
        Scheme::Tapr => optimal_alpha_tapr(params, topo, alloc),
        Scheme::Tpar => optimal_beta_tpar(params, topo, alloc),
    }
}

/// An active surface cannot reflect with amplitude below one.
pub fn validate_amplitude(amp: f64) -> Result<f64> {
    if amp >= 1.0 {
        Ok(amp)
    } else {
        Err(Error::AmplitudeBelowOne(amp))
    }
}

/// Optimal phases with the optimal active amplitude applied. The amplitude is
/// not validated here.
pub fn optimal_reflection(
    params: &SystemParams,
    topo: &Topology,
    alloc: &Allocation,
    ch: &ChannelTriple,
) -> ReflectionConfig {
    optimal_phases(ch).with_active_amplitude(alloc.scheme, optimal_amplitude(params, topo, alloc))
}
