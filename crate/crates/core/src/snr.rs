//! Received SNR and achievable rate.
//!
//! Three routes are provided and cross-checked against each other:
//!
//! * [`snr_exact_matrix`] evaluates the SNR from explicit channel matrices and
//!   reflection coefficients,
//! * [`snr_closed_form`] uses `γ = Pt Pv ρ³ / ζ` with the element-count
//!   dependent denominator `ζ = a / N_act + b / (N_act N_pas²)`,
//! * [`simulate_empirical_snr`] estimates the SNR from sampled symbols and
//!   noise.
//!
//! The large-`d2` approximations ([`snr_approx`], [`approx_snr_suboptimal`])
//! drop one term of `ζ`. [`check_lemma1`] reports whether the geometry is in
//! the regime where that is justified.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::{closed_form_split, Allocation};
use crate::channel::{ChannelTriple, C64};
use crate::error::{Error, Result};
use crate::reflection::{self, ReflectionConfig};
use crate::scenario::{SystemParams, Topology};
use crate::Scheme;

pub fn rate_from_snr(snr: f64) -> f64 {
    snr.ln_1p() / std::f64::consts::LN_2
}

/// Received power split and the resulting SNR/rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub scheme: Scheme,
    pub snr: f64,
    /// bps/Hz.
    pub rate: f64,
    pub signal_power: f64,
    pub amp_noise_power_at_rx: f64,
    pub rx_noise_power: f64,
}

impl LinkBudget {
    pub fn from_parts(scheme: Scheme, signal: f64, amp_noise: f64, rx_noise: f64) -> Self {
        let noise = amp_noise + rx_noise;
        let snr = if noise == 0.0 { f64::INFINITY } else { signal / noise };
        Self {
            scheme,
            snr,
            rate: rate_from_snr(snr),
            signal_power: signal,
            amp_noise_power_at_rx: amp_noise,
            rx_noise_power: rx_noise,
        }
    }

    /// Replaces the SNR (and rate) while keeping the power split.
    fn with_snr(mut self, snr: f64) -> Self {
        self.snr = snr;
        self.rate = rate_from_snr(snr);
        self
    }

    pub fn is_infinite(&self) -> bool {
        self.snr.is_infinite()
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr.log10()
    }
}

/// SNR from explicit matrices:
/// TAPR `Pt|h^HΦSΨg|² / (σv²‖h^HΦSΨ‖² + σ0²)`,
/// TPAR `Pt|h^HΦSΨg|² / (σv²‖h^HΦ‖² + σ0²)`.
pub fn snr_exact_matrix(
    params: &SystemParams,
    alloc: &Allocation,
    ch: &ChannelTriple,
    refl: &ReflectionConfig,
) -> Result<LinkBudget> {
    let (n1, n2) = alloc.surface_sizes()?;
    if alloc.scheme != ch.scheme || ch.n_first() != n1 || ch.n_second() != n2 {
        return Err(Error::DimensionMismatch(format!(
            "allocation {}:({n1}, {n2}) vs channels {}:({}, {})",
            alloc.scheme,
            ch.scheme,
            ch.n_first(),
            ch.n_second()
        )));
    }
    let (h_phi_s, h_phi) = reflection::receive_rows(ch, refl)?;
    let psi = refl.first_diag();
    let gain = h_phi_s.dot(&psi.component_mul(&ch.g));
    let signal = params.transmit_power * gain.norm_sqr();
    let amp_noise = params.amp_noise_power
        * match ch.scheme {
            Scheme::Tapr => h_phi_s.component_mul(&psi).norm_squared(),
            Scheme::Tpar => h_phi.norm_squared(),
        };
    Ok(LinkBudget::from_parts(
        ch.scheme,
        signal,
        amp_noise,
        params.rx_noise_power,
    ))
}

/// `ζ = inv_act / x_act + inv_act_pas2 / (x_act x_pas²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaCoefficients {
    pub inv_act: f64,
    pub inv_act_pas2: f64,
}

impl ZetaCoefficients {
    pub fn eval(&self, x_act: f64, x_pas: f64) -> f64 {
        self.inv_act / x_act + self.inv_act_pas2 / (x_act * x_pas * x_pas)
    }

    /// Objective in log variables `x̃ = ln x`.
    pub fn eval_log(&self, xa_log: f64, xp_log: f64) -> f64 {
        self.inv_act * (-xa_log).exp() + self.inv_act_pas2 * (-xa_log - 2.0 * xp_log).exp()
    }
}

/// Numerator `Pt Pv ρ³` shared by both schemes.
pub fn snr_numerator(params: &SystemParams) -> f64 {
    params.transmit_power * params.amp_power_budget * params.ref_gain.powi(3)
}

/// Exact denominator coefficients.
///
/// TAPR: `ζ_AP = Pv σv² ρ² d1² / N_act + σ0² d2² d3² (ρPt + σv² d1²) / (N_act N_pas²)`.
/// TPAR: `ζ_PA = Pt σ0² ρ² d3² / N_act + σv² d1² d2² (ρPv + σ0² d3²) / (N_act N_pas²)`.
pub fn zeta_coefficients(params: &SystemParams, topo: &Topology, scheme: Scheme) -> ZetaCoefficients {
    let SystemParams {
        transmit_power: pt,
        amp_power_budget: pv,
        rx_noise_power: s0,
        amp_noise_power: sv,
        ref_gain: rho,
        ..
    } = *params;
    let (d1sq, d2sq, d3sq) = (topo.d1 * topo.d1, topo.d2 * topo.d2, topo.d3 * topo.d3);
    match scheme {
        Scheme::Tapr => ZetaCoefficients {
            inv_act: pv * sv * rho * rho * d1sq,
            inv_act_pas2: s0 * d2sq * d3sq * (rho * pt + sv * d1sq),
        },
        Scheme::Tpar => ZetaCoefficients {
            inv_act: pt * s0 * rho * rho * d3sq,
            inv_act_pas2: sv * d1sq * d2sq * (rho * pv + s0 * d3sq),
        },
    }
}

/// Dominant-term coefficients valid for large `d2`.
///
/// TAPR keeps `σ0² d2² d3² (ρPt + σv² d1²) / (x_act x_pas²)`,
/// TPAR keeps `d1² d2² σv² ρ Pv / (x_act x_pas²)`.
pub fn approx_zeta_coefficients(
    params: &SystemParams,
    topo: &Topology,
    scheme: Scheme,
) -> ZetaCoefficients {
    let exact = zeta_coefficients(params, topo, scheme);
    let inv_act_pas2 = match scheme {
        Scheme::Tapr => exact.inv_act_pas2,
        Scheme::Tpar => {
            params.amp_noise_power
                * topo.d1.powi(2)
                * topo.d2.powi(2)
                * params.ref_gain
                * params.amp_power_budget
        }
    };
    ZetaCoefficients {
        inv_act: 0.0,
        inv_act_pas2,
    }
}

/// Signal and amplification noise at Rx at the optimal amplitude, from the
/// closed-form channel gains.
fn closed_form_parts(params: &SystemParams, topo: &Topology, alloc: &Allocation) -> (f64, f64) {
    let amp = reflection::optimal_amplitude(params, topo, alloc);
    let rho = params.ref_gain;
    let (xa, xp) = (alloc.n_act, alloc.n_pas);
    let (d1sq, d2sq, d3sq) = (topo.d1 * topo.d1, topo.d2 * topo.d2, topo.d3 * topo.d3);
    let signal =
        params.transmit_power * amp * amp * xa * xa * xp * xp * rho.powi(3) / (d1sq * d2sq * d3sq);
    let amp_noise = params.amp_noise_power
        * amp
        * amp
        * match alloc.scheme {
            Scheme::Tapr => xa * xp * xp * rho * rho / (d2sq * d3sq),
            Scheme::Tpar => xa * rho / d3sq,
        };
    (signal, amp_noise)
}

/// `γ = Pt Pv ρ³ / ζ` at the optimal amplitude and phases. Accepts continuous
/// counts.
pub fn snr_closed_form(params: &SystemParams, topo: &Topology, alloc: &Allocation) -> LinkBudget {
    let zeta = zeta_coefficients(params, topo, alloc.scheme).eval(alloc.n_act, alloc.n_pas);
    let (signal, amp_noise) = closed_form_parts(params, topo, alloc);
    LinkBudget::from_parts(alloc.scheme, signal, amp_noise, params.rx_noise_power)
        .with_snr(snr_numerator(params) / zeta)
}

/// Large-`d2` approximation. TAPR neglects the amplification noise, TPAR the
/// receiver noise.
pub fn snr_approx(params: &SystemParams, topo: &Topology, alloc: &Allocation) -> LinkBudget {
    let zeta = approx_zeta_coefficients(params, topo, alloc.scheme).eval(alloc.n_act, alloc.n_pas);
    let (signal, amp_noise) = closed_form_parts(params, topo, alloc);
    let base = match alloc.scheme {
        Scheme::Tapr => LinkBudget::from_parts(alloc.scheme, signal, 0.0, params.rx_noise_power),
        Scheme::Tpar => LinkBudget::from_parts(alloc.scheme, signal, amp_noise, 0.0),
    };
    base.with_snr(snr_numerator(params) / zeta)
}

/// Approximate SNR at the split `(M/(3W_act), 2M/(3W_pas))`:
///
/// TAPR `4M³ Pt Pv ρ³ / (27 σ0² d2² d3² (ρPt + σv² d1²) W_act W_pas²)`,
/// TPAR `4M³ Pt ρ³ / (27 d1² d2² σv² ρ W_act W_pas²)`.
pub fn approx_snr_suboptimal(
    params: &SystemParams,
    topo: &Topology,
    scheme: Scheme,
    budget: f64,
) -> LinkBudget {
    let SystemParams {
        transmit_power: pt,
        amp_power_budget: pv,
        rx_noise_power: s0,
        amp_noise_power: sv,
        ref_gain: rho,
        cost_active: wa,
        cost_passive: wp,
        ..
    } = *params;
    let (d1sq, d2sq, d3sq) = (topo.d1 * topo.d1, topo.d2 * topo.d2, topo.d3 * topo.d3);
    let m3 = budget.powi(3);
    let snr = match scheme {
        Scheme::Tapr => {
            4.0 * m3 * pt * pv * rho.powi(3)
                / (27.0 * s0 * d2sq * d3sq * (rho * pt + sv * d1sq) * wa * wp * wp)
        }
        Scheme::Tpar => 4.0 * m3 * pt * rho.powi(3) / (27.0 * d1sq * d2sq * sv * rho * wa * wp * wp),
    };
    let split = closed_form_split(budget, wa, wp, scheme);
    snr_approx(params, topo, &split).with_snr(snr)
}

/// Outcome of the large-`d2` regime test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    /// Larger of the two branch distances, metres.
    pub lemma1_lhs: f64,
    pub d2: f64,
    pub ratio: f64,
    pub epsilon: f64,
    pub satisfied: bool,
}

pub const DEFAULT_REGIME_EPSILON: f64 = 0.1;

/// `max(√(Pvρ) σv d1 x_pas / (√Pt σ0 d3), √Pt σ0 ρ d3 x_pas / √(σv² d1² (ρPv − σ0² d3²))) ≪ d2`,
/// with `≪` read as `lhs / d2 ≤ ε`.
pub fn check_lemma1(
    params: &SystemParams,
    topo: &Topology,
    x_pas: f64,
    epsilon: f64,
) -> Result<RegimeReport> {
    let SystemParams {
        transmit_power: pt,
        amp_power_budget: pv,
        rx_noise_power: s0,
        amp_noise_power: sv,
        ref_gain: rho,
        ..
    } = *params;
    let (d1, d3) = (topo.d1, topo.d3);
    let margin = rho * pv - s0 * d3 * d3;
    if !(margin > 0.0) {
        return Err(Error::ConditionUndefined);
    }
    let sigma0 = s0.sqrt();
    let sigmav = sv.sqrt();
    let first = (pv * rho).sqrt() * sigmav * d1 * x_pas / (pt.sqrt() * sigma0 * d3);
    let second = pt.sqrt() * sigma0 * rho * d3 * x_pas / (sv * d1 * d1 * margin).sqrt();
    let lhs = first.max(second);
    let ratio = lhs / topo.d2;
    Ok(RegimeReport {
        lemma1_lhs: lhs,
        d2: topo.d2,
        ratio,
        epsilon,
        satisfied: ratio <= epsilon,
    })
}

/// Which scheme wins under the approximate analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeComparison {
    /// `Pv / (d3² σ0²)`.
    pub amp_term: f64,
    /// `Pt / (d1² σv²)`.
    pub tx_term: f64,
    /// `1 / ρ`.
    pub inv_ref_gain: f64,
    /// `amp_term − tx_term − inv_ref_gain`; TAPR ≥ TPAR iff non-negative.
    pub margin: f64,
    pub tapr_at_least_tpar: bool,
}

pub fn compare_schemes(params: &SystemParams, topo: &Topology) -> SchemeComparison {
    let amp_term = params.amp_power_budget / (topo.d3 * topo.d3 * params.rx_noise_power);
    let tx_term = params.transmit_power / (topo.d1 * topo.d1 * params.amp_noise_power);
    let inv_ref_gain = 1.0 / params.ref_gain;
    let margin = amp_term - tx_term - inv_ref_gain;
    SchemeComparison {
        amp_term,
        tx_term,
        inv_ref_gain,
        margin,
        tapr_at_least_tpar: inv_ref_gain <= amp_term - tx_term,
    }
}

/// Sample estimate of the received SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalSnr {
    pub budget: LinkBudget,
    pub num_samples: usize,
}

const CHUNK: usize = 1 << 14;

fn complex_normal<R: Rng>(rng: &mut R, variance: f64) -> C64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(scale * re, scale * im)
}

/// Monte-Carlo SNR from the received signal model.
///
/// Symbols are `CN(0, 1)` scaled by `√Pt`; amplification noise is
/// `CN(0, σv² I)` per active element and receiver noise `CN(0, σ0²)`. Signal
/// and noise parts are accumulated separately and the estimate is their power
/// ratio. Samples are split into fixed chunks of 16384, chunk `k` drawing from
/// ChaCha8 seeded with `seed` on stream `k`, so the result does not depend on
/// the thread count.
pub fn simulate_empirical_snr(
    params: &SystemParams,
    ch: &ChannelTriple,
    refl: &ReflectionConfig,
    num_samples: usize,
    seed: u64,
) -> Result<EmpiricalSnr> {
    assert!(num_samples >= 1, "need at least one sample");
    let (h_phi_s, h_phi) = reflection::receive_rows(ch, refl)?;
    let psi = refl.first_diag();
    let gain = h_phi_s.dot(&psi.component_mul(&ch.g));
    let noise_row = match ch.scheme {
        Scheme::Tapr => h_phi_s.component_mul(&psi),
        Scheme::Tpar => h_phi,
    };
    let sqrt_pt = params.transmit_power.sqrt();
    let (sv, s0) = (params.amp_noise_power, params.rx_noise_power);

    if sv == 0.0 && s0 == 0.0 {
        let budget = LinkBudget::from_parts(ch.scheme, params.transmit_power * gain.norm_sqr(), 0.0, 0.0);
        return Ok(EmpiricalSnr {
            budget,
            num_samples,
        });
    }

    let chunks = num_samples.div_ceil(CHUNK);
    let partial: Vec<[f64; 3]> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = CHUNK.min(num_samples - k * CHUNK);
            let mut acc = [0.0f64; 3];
            for _ in 0..len {
                let s = complex_normal(&mut rng, 1.0);
                let signal = gain * s * sqrt_pt;
                let mut amp = C64::new(0.0, 0.0);
                for w in noise_row.iter() {
                    amp += w * complex_normal(&mut rng, sv);
                }
                let n0 = complex_normal(&mut rng, s0);
                acc[0] += signal.norm_sqr();
                acc[1] += amp.norm_sqr();
                acc[2] += n0.norm_sqr();
            }
            acc
        })
        .collect();
    let mut total = [0.0f64; 3];
    for p in &partial {
        for i in 0..3 {
            total[i] += p[i];
        }
    }
    let n = num_samples as f64;
    Ok(EmpiricalSnr {
        budget: LinkBudget::from_parts(ch.scheme, total[0] / n, total[1] / n, total[2] / n),
        num_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_channels;
    use crate::reflection::optimal_reflection;
    use crate::scenario::{build_topology, dbm_to_watts, Positions};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference() -> (SystemParams, Topology) {
        (SystemParams::reference(), Topology::reference())
    }

    fn exact(p: &SystemParams, t: &Topology, alloc: &Allocation) -> LinkBudget {
        let ch = build_channels(p, t, alloc).unwrap();
        let r = optimal_reflection(p, t, alloc, &ch);
        snr_exact_matrix(p, alloc, &ch, &r).unwrap()
    }

    #[test]
    fn scalar_cascade_by_hand() {
        let (p, t) = reference();
        let alloc = Allocation::integer(1, 1, Scheme::Tapr);
        let b = exact(&p, &t, &alloc);
        let a = reflection::optimal_alpha_tapr(&p, &t, &alloc);
        let rho = p.ref_gain;
        let g = rho.powf(1.5) * a / (t.d1 * t.d2 * t.d3);
        let noise_gain = rho * a / (t.d2 * t.d3);
        let expected = p.transmit_power * g * g
            / (p.amp_noise_power * noise_gain * noise_gain + p.rx_noise_power);
        assert_relative_eq!(b.snr, expected, max_relative = 1e-12);
    }

    #[test]
    fn noiseless_amplifier_limit() {
        let (mut p, t) = reference();
        p.amp_noise_power = 0.0;
        let alloc = Allocation::integer(7, 30, Scheme::Tapr);
        let ch = build_channels(&p, &t, &alloc).unwrap();
        let alpha = 12.0;
        let r = reflection::optimal_phases(&ch).with_active_amplitude(Scheme::Tapr, alpha);
        let b = snr_exact_matrix(&p, &alloc, &ch, &r).unwrap();
        let expected = p.transmit_power * alpha * alpha * p.ref_gain.powi(3) * 49.0 * 900.0
            / (t.d1.powi(2) * t.d2.powi(2) * t.d3.powi(2) * p.rx_noise_power);
        assert_relative_eq!(b.snr, expected, max_relative = 1e-12);
    }

    #[test]
    fn reference_matrix_matches_closed_form() {
        let (p, t) = reference();
        for scheme in Scheme::ALL {
            let alloc = Allocation::integer(100, 1000, scheme);
            let m = exact(&p, &t, &alloc);
            let c = snr_closed_form(&p, &t, &alloc);
            assert_relative_eq!(m.snr, c.snr, max_relative = 1e-9);
            assert_relative_eq!(m.signal_power, c.signal_power, max_relative = 1e-9);
            assert_relative_eq!(m.amp_noise_power_at_rx, c.amp_noise_power_at_rx, max_relative = 1e-9);
        }
    }

    #[test]
    fn closed_form_doubles_with_active_count() {
        let (p, t) = reference();
        for scheme in Scheme::ALL {
            let a = snr_closed_form(&p, &t, &Allocation::continuous(37.5, 412.0, scheme));
            let b = snr_closed_form(&p, &t, &Allocation::continuous(75.0, 412.0, scheme));
            assert_relative_eq!(b.snr / a.snr, 2.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn tpar_unit_passive_denominator() {
        let (p, t) = reference();
        let n_act = 20.0;
        let z = zeta_coefficients(&p, &t, Scheme::Tpar).eval(n_act, 1.0);
        let rho = p.ref_gain;
        let expected = (p.transmit_power * p.rx_noise_power * rho * rho * t.d3.powi(2)
            + p.amp_noise_power
                * t.d1.powi(2)
                * t.d2.powi(2)
                * (rho * p.amp_power_budget + p.rx_noise_power * t.d3.powi(2)))
            / n_act;
        assert_relative_eq!(z, expected, max_relative = 1e-14);
    }

    #[test]
    fn approximation_limits() {
        // TAPR without amplification noise: the approximation is exactly the second term.
        let (mut p, t) = reference();
        p.amp_noise_power = 0.0;
        let alloc = Allocation::continuous(50.0, 700.0, Scheme::Tapr);
        let exact_cf = snr_closed_form(&p, &t, &alloc);
        let approx = snr_approx(&p, &t, &alloc);
        assert_relative_eq!(exact_cf.snr, approx.snr, max_relative = 1e-14);
    }

    #[test]
    fn approximation_converges_with_d2() {
        let p = SystemParams::reference();
        let x_pas = 1000.0;
        for scheme in Scheme::ALL {
            let t0 = Topology::reference();
            let lhs = check_lemma1(&p, &t0, x_pas, 0.1).unwrap().lemma1_lhs;
            let far = t0
                .with_surfaces(t0.positions.irs_a, [15.0 + 100.0 * lhs, 5.0, 10.0])
                .unwrap();
            // keep d3 fixed by moving Rx with B
            let mut pos = far.positions;
            pos.rx = [pos.irs_b[0] + 2.0, 0.0, 0.0];
            let far = build_topology(pos, 1.0).unwrap();
            let alloc = Allocation::continuous(100.0, x_pas, scheme);
            let ratio = snr_approx(&p, &far, &alloc).snr / snr_closed_form(&p, &far, &alloc).snr;
            assert!((ratio - 1.0).abs() < 0.01, "{scheme}: ratio {ratio}");
        }
    }

    #[test]
    fn reference_regime_report() {
        // Frozen from direct evaluation with the reference constants:
        // branch one = √(Pvρ/Pt)·d1/d3·x_pas ≈ 36.87 m dominates branch two ≈ 27.12 m.
        let (p, t) = reference();
        let r = check_lemma1(&p, &t, 1000.0, DEFAULT_REGIME_EPSILON).unwrap();
        let pv = dbm_to_watts(17.0);
        let first = (pv * 1e-3 / 0.1).sqrt() * 350f64.sqrt() / 129f64.sqrt() * 1000.0;
        assert_relative_eq!(r.lemma1_lhs, first, max_relative = 1e-12);
        assert_relative_eq!(r.lemma1_lhs, 36.875_606_080_374_12, max_relative = 1e-12);
        assert_relative_eq!(r.ratio, 0.444_284_410_606_917_1, max_relative = 1e-12);
        assert!(!r.satisfied);
        assert!(check_lemma1(&p, &t, 100.0, DEFAULT_REGIME_EPSILON).unwrap().satisfied);

        let r10 = check_lemma1(&p, &t, 10_000.0, DEFAULT_REGIME_EPSILON).unwrap();
        assert_relative_eq!(r10.lemma1_lhs, 10.0 * r.lemma1_lhs, max_relative = 1e-14);
    }

    #[test]
    fn regime_undefined_at_boundary() {
        // ρPv = 0.5 * 2 = 1 and σ0² d3² = 0.25 * 4 = 1 exactly
        let pos = Positions {
            tx: [0.0, 0.0, 0.0],
            irs_a: [10.0, 0.0, 0.0],
            irs_b: [50.0, 0.0, 0.0],
            rx: [52.0, 0.0, 0.0],
        };
        let t = build_topology(pos, 1.0).unwrap();
        let mut p = SystemParams {
            ref_gain: 0.5,
            amp_power_budget: 2.0,
            rx_noise_power: 0.25,
            ..SystemParams::reference()
        };
        assert_eq!(check_lemma1(&p, &t, 10.0, 0.1), Err(Error::ConditionUndefined));
        p.amp_power_budget = 1.0;
        assert_eq!(check_lemma1(&p, &t, 10.0, 0.1), Err(Error::ConditionUndefined));
        p.amp_power_budget = 4.0;
        assert!(check_lemma1(&p, &t, 10.0, 0.1).is_ok());
    }

    #[test]
    fn cubic_law_exact() {
        let (p, t) = reference();
        for scheme in Scheme::ALL {
            let a = approx_snr_suboptimal(&p, &t, scheme, 700.0).snr;
            let b = approx_snr_suboptimal(&p, &t, scheme, 1400.0).snr;
            assert_relative_eq!(b / a, 8.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn suboptimal_equals_approx_at_split() {
        let (p, t) = reference();
        for scheme in Scheme::ALL {
            let m = 1234.0;
            let split = closed_form_split(m, p.cost_active, p.cost_passive, scheme);
            let a = snr_approx(&p, &t, &split).snr;
            let b = approx_snr_suboptimal(&p, &t, scheme, m).snr;
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn tpar_suboptimal_ignores_pv_and_sigma0() {
        let (p, t) = reference();
        let base = approx_snr_suboptimal(&p, &t, Scheme::Tpar, 900.0).snr;
        let q = SystemParams {
            amp_power_budget: 3.0 * p.amp_power_budget,
            rx_noise_power: 0.1 * p.rx_noise_power,
            ..p
        };
        assert_eq!(approx_snr_suboptimal(&q, &t, Scheme::Tpar, 900.0).snr, base);
    }

    #[test]
    fn reference_comparison() {
        let (p, t) = reference();
        let c = compare_schemes(&p, &t);
        assert!(c.tapr_at_least_tpar);
        // Pv/(d3²σ0²) = 0.0501187/(129e-11), Pt/(d1²σv²) = 0.1/(350e-11)
        assert_relative_eq!(c.amp_term, dbm_to_watts(17.0) / 129e-11, max_relative = 1e-12);
        assert_relative_eq!(c.amp_term, 38_851_723.536_997_85, max_relative = 1e-12);
        assert_relative_eq!(c.tx_term, 28_571_428.571_428_57, max_relative = 1e-12);
        assert_relative_eq!(c.margin, 10_279_294.965_569_276, max_relative = 1e-9);

        let weak = SystemParams {
            amp_power_budget: 1e-12,
            ..p
        };
        assert!(!compare_schemes(&weak, &t).tapr_at_least_tpar);
    }

    #[test]
    fn comparator_agrees_with_approximate_snrs() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut checked, mut attempts) = (0, 0);
        while checked < 100 {
            attempts += 1;
            assert!(attempts < 1_000_000, "sampler found only {checked} scenarios");
            let p = SystemParams {
                transmit_power: dbm_to_watts(rng.random_range(0.0..30.0)),
                amp_power_budget: dbm_to_watts(rng.random_range(0.0..30.0)),
                rx_noise_power: dbm_to_watts(rng.random_range(-95.0..-70.0)),
                amp_noise_power: dbm_to_watts(rng.random_range(-95.0..-70.0)),
                ..SystemParams::reference()
            };
            let pos = Positions {
                irs_a: [rng.random_range(2.0..30.0), rng.random_range(-10.0..10.0), 10.0],
                irs_b: [rng.random_range(70.0..98.0), rng.random_range(-10.0..10.0), 10.0],
                ..Positions::reference()
            };
            let t = build_topology(pos, 1.0).unwrap();
            // both branches multiply to at least ρ x_pas², so only small budgets qualify
            let m = rng.random_range(20.0..300.0);
            let Ok(reg) = check_lemma1(&p, &t, 2.0 * m / 3.0, 0.1) else { continue };
            if !reg.satisfied {
                continue;
            }
            let c = compare_schemes(&p, &t);
            let ap = approx_snr_suboptimal(&p, &t, Scheme::Tapr, m).snr;
            let pa = approx_snr_suboptimal(&p, &t, Scheme::Tpar, m).snr;
            assert_eq!(c.tapr_at_least_tpar, ap >= pa, "{c:?} {ap} {pa}");
            checked += 1;
        }
    }

    #[test]
    fn empirical_snr_deterministic_and_close() {
        let (p, t) = reference();
        let alloc = Allocation::integer(4, 9, Scheme::Tapr);
        let ch = build_channels(&p, &t, &alloc).unwrap();
        let r = optimal_reflection(&p, &t, &alloc, &ch);
        let a = simulate_empirical_snr(&p, &ch, &r, 200_000, 11).unwrap();
        let b = simulate_empirical_snr(&p, &ch, &r, 200_000, 11).unwrap();
        assert_eq!(a.budget.snr.to_bits(), b.budget.snr.to_bits());
        let exact = snr_exact_matrix(&p, &alloc, &ch, &r).unwrap();
        assert!((a.budget.snr / exact.snr - 1.0).abs() < 0.02);
    }

    #[test]
    fn empirical_snr_infinite_without_noise() {
        let (mut p, t) = reference();
        p.amp_noise_power = 0.0;
        p.rx_noise_power = 0.0;
        let alloc = Allocation::integer(2, 2, Scheme::Tpar);
        let ch = build_channels(&p, &t, &alloc).unwrap();
        let r = reflection::optimal_phases(&ch).with_active_amplitude(Scheme::Tpar, 2.0);
        let e = simulate_empirical_snr(&p, &ch, &r, 10, 1).unwrap();
        assert!(e.budget.is_infinite());
    }

    #[test]
    fn mismatched_allocation_rejected() {
        let (p, t) = reference();
        let alloc = Allocation::integer(3, 4, Scheme::Tapr);
        let ch = build_channels(&p, &t, &alloc).unwrap();
        let r = reflection::optimal_phases(&ch);
        let other = Allocation::integer(4, 4, Scheme::Tapr);
        assert!(matches!(
            snr_exact_matrix(&p, &other, &ch, &r),
            Err(Error::DimensionMismatch(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_form_monotone(xa in 1.0f64..500.0, xp in 1.0f64..5000.0, tapr in prop::bool::ANY) {
            let (p, t) = reference();
            let scheme = if tapr { Scheme::Tapr } else { Scheme::Tpar };
            let base = snr_closed_form(&p, &t, &Allocation::continuous(xa, xp, scheme)).snr;
            prop_assert!(snr_closed_form(&p, &t, &Allocation::continuous(xa * 1.01, xp, scheme)).snr > base);
            prop_assert!(snr_closed_form(&p, &t, &Allocation::continuous(xa, xp * 1.01, scheme)).snr > base);
        }

        #[test]
        fn closed_form_budget_consistent(xa in 1.0f64..500.0, xp in 1.0f64..5000.0, tapr in prop::bool::ANY) {
            let (p, t) = reference();
            let scheme = if tapr { Scheme::Tapr } else { Scheme::Tpar };
            let b = snr_closed_form(&p, &t, &Allocation::continuous(xa, xp, scheme));
            let parts = b.signal_power / (b.amp_noise_power_at_rx + b.rx_noise_power);
            prop_assert!((parts / b.snr - 1.0).abs() < 1e-10);
            prop_assert!((b.rate - (1.0 + b.snr).log2()).abs() < 1e-12);
        }

        #[test]
        fn approximation_valid_in_regime(
            pt_dbm in 10.0f64..30.0, pv_dbm in 0.0f64..30.0,
            s0_dbm in -100.0f64..-70.0, sv_dbm in -100.0f64..-70.0,
            a in prop::array::uniform3(1.0f64..20.0), len in 100.0f64..400.0, b_off in 2.0f64..20.0,
            xa in 1.0f64..500.0, u in 0.01f64..1.0, tapr in prop::bool::ANY,
        ) {
            let p = SystemParams {
                transmit_power: dbm_to_watts(pt_dbm),
                amp_power_budget: dbm_to_watts(pv_dbm),
                rx_noise_power: dbm_to_watts(s0_dbm),
                amp_noise_power: dbm_to_watts(sv_dbm),
                ..SystemParams::reference()
            };
            let pos = Positions {
                tx: [0.0, 0.0, 0.0],
                rx: [len, 0.0, 0.0],
                irs_a: a,
                irs_b: [len - b_off, 3.0, 8.0],
            };
            let t = build_topology(pos, 1.0).unwrap();
            // the receiver-noise share of the TPAR term is not bounded by the regime test
            prop_assume!(p.rx_noise_power * t.d3 * t.d3 <= 0.01 * p.ref_gain * p.amp_power_budget);
            let lhs_unit = check_lemma1(&p, &t, 1.0, 0.01).unwrap().lemma1_lhs;
            let x_pas = u * 0.01 * t.d2 / lhs_unit;
            prop_assert!(check_lemma1(&p, &t, x_pas, 0.01).unwrap().satisfied);
            let scheme = if tapr { Scheme::Tapr } else { Scheme::Tpar };
            let alloc = Allocation::continuous(xa, x_pas, scheme);
            let exact = snr_closed_form(&p, &t, &alloc).snr;
            let approx = snr_approx(&p, &t, &alloc).snr;
            prop_assert!(((approx - exact) / exact).abs() <= 0.02, "{} vs {}", approx, exact);
        }
    }
}
