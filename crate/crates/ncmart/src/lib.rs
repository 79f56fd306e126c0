//! Finite-dimensional models of tracial von Neumann algebras with filtrations,
//! martingale square functions and Hardy quasi-norms, Cuculescu stopping
//! projections, constructive two-sided K-functional estimates for the couple
//! (h_2^c, h_inf^c), symmetric-space quasi-norms (Lorentz, Orlicz,
//! Orlicz-Lorentz, generalized Lorentz), and a seeded verification harness for
//! the associated operator inequalities.

pub mod algebra;
pub mod cuculescu;
pub mod jones;
pub mod martingale;
pub mod rearrangement;
pub mod symspaces;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("filtration level {level} out of range 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("operator is not Hermitian: relative asymmetry {0:.3e}")]
    NotHermitian(f64),
    #[error("operator is not positive: min eigenvalue {0:.3e}")]
    NotPositive(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("scalar function undefined at eigenvalue {0}")]
    FunctionUndefined(f64),
    #[error("bisection failed to bracket the Luxemburg norm")]
    BracketFailure,
    #[error("K-curve grid does not reach the tail regime: {0}")]
    TailRegime(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
