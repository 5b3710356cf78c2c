use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible point: {0}")]
    Infeasible(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("solver did not converge after {iterations} iterations (gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },
    #[error("round {round}: inner saddle gap {gap:e} exceeds the budget {budget:e}")]
    GapBudgetExceeded { round: usize, gap: f64, budget: f64 },
    #[error("incompatible pairing: {0}")]
    IncompatiblePairing(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
