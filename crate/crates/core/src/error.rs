use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KappaError {
    #[error("need at least {min} observations, got {got}")]
    TooFewObservations { min: usize, got: usize },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("degenerate margin `{margin}`: every off-diagonal centred score is zero")]
    DegenerateMargin { margin: String },

    #[error("{name} = {value} is outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("theta is infeasible: |eta| = {eta_abs} >= 1 on contrast ({first}, {second})")]
    Infeasible {
        first: usize,
        second: usize,
        eta_abs: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enumeration too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, KappaError>;
