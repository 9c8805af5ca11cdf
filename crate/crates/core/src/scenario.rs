//! Physical parameters, unit conversions and deployment geometry.
//!
//! The A site is the surface nearest the transmitter (first in the cascade)
//! and the B site the one nearest the receiver. Link distances are
//! `d1 = |A - Tx|`, `d2 = |B - A|` and `d3 = |Rx - B|`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or displacement in metres.
pub type Point = [f64; 3];

pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(p_w: f64) -> f64 {
    10.0 * p_w.log10() + 30.0
}

pub fn db_to_linear(g_db: f64) -> f64 {
    10f64.powf(g_db / 10.0)
}

pub fn linear_to_db(g: f64) -> f64 {
    10.0 * g.log10()
}

/// Free-space channel power gain at 1 m, `(λ / 4π)²`.
pub fn ref_gain_from_wavelength(wavelength: f64) -> f64 {
    (wavelength / (4.0 * PI)).powi(2)
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(v: Point) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn distance(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Link parameters in linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Transmit power `Pt` in watts.
    pub transmit_power: f64,
    /// Amplification power budget `Pv` of the active surface in watts.
    pub amp_power_budget: f64,
    /// Receiver noise power `σ0²` in watts.
    pub rx_noise_power: f64,
    /// Per-element amplification noise power `σv²` in watts.
    pub amp_noise_power: f64,
    /// Channel power gain `ρ` at 1 m.
    pub ref_gain: f64,
    /// Carrier wavelength in metres. Only enters the carrier phase terms.
    pub wavelength: f64,
    /// Budget cost of one active element.
    pub cost_active: f64,
    /// Budget cost of one passive element.
    pub cost_passive: f64,
    /// Total element budget `M`.
    pub total_budget: f64,
}

impl SystemParams {
    /// Simulation parameters used throughout the reference deployment
    /// (Pt = 20 dBm, Pv = 17 dBm, σ0² = σv² = -80 dBm, ρ = -30 dB,
    /// W_act = 5, W_pas = 1, M = 1500).
    pub fn reference() -> Self {
        Self {
            transmit_power: dbm_to_watts(20.0),
            amp_power_budget: dbm_to_watts(17.0),
            rx_noise_power: dbm_to_watts(-80.0),
            amp_noise_power: dbm_to_watts(-80.0),
            ref_gain: db_to_linear(-30.0),
            wavelength: 0.1,
            cost_active: 5.0,
            cost_passive: 1.0,
            total_budget: 1500.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("transmit_power", self.transmit_power),
            ("amp_power_budget", self.amp_power_budget),
            ("rx_noise_power", self.rx_noise_power),
            ("amp_noise_power", self.amp_noise_power),
            ("ref_gain", self.ref_gain),
            ("wavelength", self.wavelength),
            ("cost_active", self.cost_active),
            ("cost_passive", self.cost_passive),
            ("total_budget", self.total_budget),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.ref_gain > 1.0 {
            return Err(Error::InvalidParams(format!(
                "ref_gain must not exceed 1, got {}",
                self.ref_gain
            )));
        }
        if self.cost_active < self.cost_passive {
            return Err(Error::InvalidParams(format!(
                "cost_active ({}) must be at least cost_passive ({})",
                self.cost_active, self.cost_passive
            )));
        }
        if self.total_budget < self.cost_active + self.cost_passive {
            return Err(Error::InfeasibleBudget {
                budget: self.total_budget,
            });
        }
        Ok(())
    }

    pub fn with_budget(mut self, total_budget: f64) -> Self {
        self.total_budget = total_budget;
        self
    }
}

/// Azimuth (from +x, in the x–y plane) and elevation (from +z) of a
/// displacement vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkAngles {
    pub azimuth: f64,
    pub elevation: f64,
}

impl LinkAngles {
    pub fn from_displacement(v: Point) -> Self {
        let r = norm(v);
        let elevation = (v[2] / r).clamp(-1.0, 1.0).acos();
        let azimuth = v[1].atan2(v[0]);
        Self { azimuth, elevation }
    }

    pub fn unit_vector(&self) -> Point {
        let (st, ct) = self.elevation.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [st * ca, st * sa, ct]
    }
}

/// The four node positions of a deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Positions {
    pub tx: Point,
    pub rx: Point,
    pub irs_a: Point,
    pub irs_b: Point,
}

impl Positions {
    /// Tx (0,0,0), A (15,5,10), B (98,5,10), Rx (100,0,0).
    pub fn reference() -> Self {
        Self {
            tx: [0.0, 0.0, 0.0],
            rx: [100.0, 0.0, 0.0],
            irs_a: [15.0, 5.0, 10.0],
            irs_b: [98.0, 5.0, 10.0],
        }
    }
}

/// Geometry of a deployment with derived link distances and angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Topology {
    pub positions: Positions,
    pub d_min: f64,
    /// Tx → A.
    pub d1: f64,
    /// A → B.
    pub d2: f64,
    /// B → Rx.
    pub d3: f64,
    /// Direction from A towards Tx.
    pub a_to_tx: LinkAngles,
    /// Direction from A towards B.
    pub a_to_b: LinkAngles,
    /// Direction from B towards A.
    pub b_to_a: LinkAngles,
    /// Direction from B towards Rx.
    pub b_to_rx: LinkAngles,
}

pub const DEFAULT_D_MIN: f64 = 1.0;

pub fn build_topology(positions: Positions, d_min: f64) -> Result<Topology> {
    let Positions {
        tx,
        rx,
        irs_a,
        irs_b,
    } = positions;
    let d1 = distance(irs_a, tx);
    let d2 = distance(irs_b, irs_a);
    let d3 = distance(rx, irs_b);
    for (link, d) in [("tx-a", d1), ("a-b", d2), ("b-rx", d3)] {
        if !(d >= d_min) {
            return Err(Error::DistanceTooSmall {
                link,
                distance: d,
                d_min,
            });
        }
    }
    Ok(Topology {
        positions,
        d_min,
        d1,
        d2,
        d3,
        a_to_tx: LinkAngles::from_displacement(sub(tx, irs_a)),
        a_to_b: LinkAngles::from_displacement(sub(irs_b, irs_a)),
        b_to_a: LinkAngles::from_displacement(sub(irs_a, irs_b)),
        b_to_rx: LinkAngles::from_displacement(sub(rx, irs_b)),
    })
}

impl Topology {
    pub fn reference() -> Self {
        build_topology(Positions::reference(), DEFAULT_D_MIN)
            .expect("reference geometry is valid")
    }

    /// Same endpoints, surfaces moved.
    pub fn with_surfaces(&self, irs_a: Point, irs_b: Point) -> Result<Self> {
        build_topology(
            Positions {
                irs_a,
                irs_b,
                ..self.positions
            },
            self.d_min,
        )
    }

    /// Distance from Tx to the B site.
    pub fn tx_to_b(&self) -> f64 {
        distance(self.positions.irs_b, self.positions.tx)
    }

    /// Distance from the A site to Rx.
    pub fn a_to_rx(&self) -> f64 {
        distance(self.positions.rx, self.positions.irs_a)
    }

    pub fn tx_to_rx(&self) -> f64 {
        distance(self.positions.rx, self.positions.tx)
    }
}

/// Parameters plus geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub params: SystemParams,
    pub topology: Topology,
}

impl Scenario {
    pub fn reference() -> Self {
        Self {
            params: SystemParams::reference(),
            topology: Topology::reference(),
        }
    }
}

/// On-disk scenario description (TOML). Powers in dBm, gains in dB.
/// Missing keys fall back to the reference deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub pt_dbm: f64,
    pub pv_dbm: f64,
    pub sigma0_dbm: f64,
    pub sigmav_dbm: f64,
    pub rho_db: f64,
    pub wavelength_m: f64,
    pub w_act: f64,
    pub w_pas: f64,
    pub total_budget: f64,
    pub pos_tx: Point,
    pub pos_rx: Point,
    pub pos_irs_a: Point,
    pub pos_irs_b: Point,
    pub d_min_m: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let p = Positions::reference();
        Self {
            pt_dbm: 20.0,
            pv_dbm: 17.0,
            sigma0_dbm: -80.0,
            sigmav_dbm: -80.0,
            rho_db: -30.0,
            wavelength_m: 0.1,
            w_act: 5.0,
            w_pas: 1.0,
            total_budget: 1500.0,
            pos_tx: p.tx,
            pos_rx: p.rx,
            pos_irs_a: p.irs_a,
            pos_irs_b: p.irs_b,
            d_min_m: DEFAULT_D_MIN,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn params(&self) -> SystemParams {
        SystemParams {
            transmit_power: dbm_to_watts(self.pt_dbm),
            amp_power_budget: dbm_to_watts(self.pv_dbm),
            rx_noise_power: dbm_to_watts(self.sigma0_dbm),
            amp_noise_power: dbm_to_watts(self.sigmav_dbm),
            ref_gain: db_to_linear(self.rho_db),
            wavelength: self.wavelength_m,
            cost_active: self.w_act,
            cost_passive: self.w_pas,
            total_budget: self.total_budget,
        }
    }

    pub fn positions(&self) -> Positions {
        Positions {
            tx: self.pos_tx,
            rx: self.pos_rx,
            irs_a: self.pos_irs_a,
            irs_b: self.pos_irs_b,
        }
    }

    /// Validated scenario in linear units.
    pub fn scenario(&self) -> Result<Scenario> {
        let params = self.params();
        params.validate().map_err(|e| Error::Config(e.to_string()))?;
        let topology = build_topology(self.positions(), self.d_min_m)?;
        Ok(Scenario { params, topology })
    }
}
