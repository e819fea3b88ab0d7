use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("root bracket invalid: f(0) = {f_lo:e}, f(hi) = {f_hi:e} (need f(0) < 0 <= f(hi))")]
    RootBracket { f_lo: f64, f_hi: f64 },

    #[error("root finder did not converge after {iterations} iterations (bracket [{lo:e}, {hi:e}])")]
    RootNotConverged { iterations: usize, lo: f64, hi: f64 },

    #[error("point outside the operator domain: {0}")]
    OutsideDomain(String),

    #[error("empty sample set")]
    EmptySample,

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("degenerate kernel matrix: {0}")]
    DegenerateKernel(String),

    #[error("solver failed at iteration {iteration}: {cause}")]
    SolverFailure { iteration: usize, cause: String },

    #[error("reference solve did not converge: {0}")]
    NotConverged(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn ensure_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn ensure_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
