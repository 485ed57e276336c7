use crate::error::{domain, Result};

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function for finite or infinite input.
///
/// Evaluated through `erfc` so the lower tail keeps full relative precision.
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Checked standard normal CDF; NaN and ±∞ are rejected.
pub fn norm_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("norm_cdf needs a finite argument, got {x}"));
    }
    Ok(phi(x))
}

/// Mean of `exp(X)` for `X ~ N(0, v)`.
pub fn lognormal_mean(v: f64) -> Result<f64> {
    if !(v >= 0.0) || !v.is_finite() {
        return domain(format!("lognormal_mean needs a finite variance v >= 0, got {v}"));
    }
    Ok((0.5 * v).exp())
}
