use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system parameter: {0}")]
    InvalidParams(String),

    #[error("link `{link}` is {distance:.6} m, below the minimum of {d_min} m")]
    DistanceTooSmall {
        link: &'static str,
        distance: f64,
        d_min: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("allocation must be integral here, got ({n_act}, {n_pas})")]
    NonIntegerAllocation { n_act: f64, n_pas: f64 },

    #[error("amplification factor {0:.6} is below one")]
    AmplitudeBelowOne(f64),

    #[error("regime condition undefined: rho*Pv must exceed sigma0^2*d3^2")]
    ConditionUndefined,

    #[error("element budget {budget} cannot afford one active and one passive element")]
    InfeasibleBudget { budget: f64 },

    #[error("exhaustive search would visit {candidates} candidates (limit {limit})")]
    SearchSpaceTooLarge { candidates: u128, limit: u128 },

    #[error("no feasible placement on the grid")]
    NoFeasiblePlacement,

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code used by the CLI: 1 for configuration problems,
    /// 2 for solver and guard failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParams(_) | Error::DistanceTooSmall { .. } => 1,
            _ => 2,
        }
    }
}
