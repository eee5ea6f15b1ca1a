use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate state: cannot normalize a zero vector")]
    DegenerateState,

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigen-decomposition did not converge")]
    EigenFailure,

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite Hamiltonian entry at t = {time}")]
    NonFiniteHamiltonian { time: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("control field vanishes at t = {time}; mixing angle undefined")]
    VanishingField { time: f64 },

    #[error("near-degeneracy at t = {time} (gap {gap:.3e} < {threshold:.3e}); derivative unreliable")]
    NearDegeneracy { time: f64, gap: f64, threshold: f64 },

    #[error("time window mismatch: trajectory [{traj_start}, {traj_end}] vs scheme [{scheme_start}, {scheme_end}]")]
    WindowMismatch {
        traj_start: f64,
        traj_end: f64,
        scheme_start: f64,
        scheme_end: f64,
    },

    #[error("bisection failed: {0}")]
    Bisection(String),

    #[error("unknown {kind} `{name}`; valid: {valid}")]
    UnknownName {
        kind: &'static str,
        name: String,
        valid: String,
    },

    #[error("protocol `{protocol}` is incompatible with {scheme} parameters")]
    IncompatibleProtocol {
        protocol: &'static str,
        scheme: &'static str,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be strictly positive",
        })
    }
}

pub(crate) fn require_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}
