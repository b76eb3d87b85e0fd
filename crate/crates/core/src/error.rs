use thiserror::Error;

/// Errors returned by the simulation and calibration layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("operator dimension {got} does not match expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state vectors live on different bases")]
    BasisMismatch,

    #[error("transition ({0}, {1}) is not driven on site {2}")]
    InvalidTransition(usize, usize, usize),

    #[error("calibration infeasible: {binding}")]
    Infeasible { binding: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("time-dependent coefficient is not a single-frequency exponential")]
    NonMonochromatic,
}

pub type Result<T> = std::result::Result<T, Error>;
