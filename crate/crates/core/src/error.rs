use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite ECP value {0}")]
    NonFiniteEcp(f64),
    #[error("ECPs {left} and {right} are closer than the minimum spacing {min}")]
    EcpSpacing { left: f64, right: f64, min: f64 },
    #[error("invalid range [{lo}, {hi}] with {n} samples")]
    InvalidRange { lo: f64, hi: f64, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("input too short: need at least {need} steps, got {got}")]
    InputTooShort { need: usize, got: usize },
    #[error("no root in bracket: {0}")]
    NoRoot(String),
    #[error("insufficient points for fit: need {need}, got {got}")]
    InsufficientPoints { need: usize, got: usize },
    #[error("singular normal equations")]
    Singular,
    #[error("normal-equation residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
