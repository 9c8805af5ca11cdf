//! Element allocation, beamforming and placement for links aided by one
//! active and one passive intelligent reflecting surface (IRS).
//!
//! Two deployment orders are supported:
//!
//! * [`Scheme::Tapr`]: Tx → active IRS → passive IRS → Rx
//! * [`Scheme::Tpar`]: Tx → passive IRS → active IRS → Rx
//!
//! The first surface in the cascade is always the "A" site (near the
//! transmitter) and the second the "B" site, so a [`Topology`] is shared by
//! both orders and only the role of each surface changes.
//!
//! Everything inside the library works in linear SI units. dBm/dB only
//! appear at the configuration and CLI boundary ([`scenario`], [`cli`]).

pub mod allocation;
pub mod benchmarks;
pub mod channel;
pub mod cli;
pub mod error;
pub mod placement;
pub mod reflection;
pub mod scenario;
pub mod snr;

pub use allocation::{Allocation, AllocationSolution, Method};
pub use error::{Error, Result};
pub use scenario::{Scenario, SystemParams, Topology};
pub use snr::LinkBudget;

use std::fmt;
use std::str::FromStr;

/// Deployment order of the two surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Tx → active → passive → Rx.
    Tapr,
    /// Tx → passive → active → Rx.
    Tpar,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Tapr, Scheme::Tpar];

    /// Whether the first surface of the cascade (the A site) is the active one.
    pub fn active_first(self) -> bool {
        matches!(self, Scheme::Tapr)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Tapr => "tapr",
            Scheme::Tpar => "tpar",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tapr" => Ok(Scheme::Tapr),
            "tpar" => Ok(Scheme::Tpar),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}
