use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} along {direction:?}")]
    Indefinite { eigenvalue: f64, direction: Vec<f64> },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("arbitrage: {0}")]
    Arbitrage(String),

    #[error("market is incomplete: volatility matrix is singular along {null_direction:?}")]
    Incomplete { null_direction: Vec<f64> },

    #[error("explicit scheme unstable: 2DΔt/(Δx)² = {ratio:.4} > 1; stability needs 2DΔt/(Δx)² ≤ 1, i.e. Δt ≤ {dt_limit:e}")]
    Unstable { ratio: f64, dt_limit: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("input row {row}: {message}")]
    Input { row: usize, message: String },
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}
