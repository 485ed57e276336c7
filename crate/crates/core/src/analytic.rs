//! Closed-form prices: Black-Scholes calls, puts and binaries with Greeks,
//! dividend-adjusted forwards, small-volatility expansions, static bounds,
//! foreign exchange and quanto forwards, and hedge ratios.

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure, Result};
use crate::lattice::Exercise;
use crate::mathcore::{norm_pdf, phi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
    Binary,
}

impl OptionKind {
    pub fn payoff(self, s: f64, k: f64) -> f64 {
        match self {
            OptionKind::Call => (s - k).max(0.0),
            OptionKind::Put => (k - s).max(0.0),
            OptionKind::Binary => {
                if s > k {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Spot `z` at time `t`, strike `k`, maturity `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceSpec {
    pub spot: f64,
    pub strike: f64,
    pub rate: f64,
    pub sigma: f64,
    #[serde(default)]
    pub t: f64,
    pub maturity: f64,
}

impl PriceSpec {
    pub fn tau(&self) -> f64 {
        self.maturity - self.t
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.spot > 0.0 && self.spot.is_finite(), || format!("spot = {} must be positive", self.spot))?;
        ensure(self.strike > 0.0 && self.strike.is_finite(), || {
            format!("strike = {} must be positive", self.strike)
        })?;
        ensure(self.sigma >= 0.0 && self.sigma.is_finite(), || format!("sigma = {} must be >= 0", self.sigma))?;
        ensure(self.rate.is_finite(), || "rate must be finite".into())?;
        ensure(self.tau() >= 0.0 && self.t.is_finite() && self.maturity.is_finite(), || {
            format!("need t <= T, got t = {}, T = {}", self.t, self.maturity)
        })
    }
}

/// Sensitivities; `theta` is `∂V/∂t` in calendar time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Greeks {
    pub theta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub vega: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DividendSpec {
    /// Continuous yield `ρ`.
    Continuous { yield_rate: f64 },
    /// `payments` discrete dividends in `(t, T]`, each a fraction of the price.
    Periodic { fraction: f64, payments: u32 },
}

/// Forward price of the stock for delivery at `T`.
pub fn forward_price(spec: &PriceSpec, dividend: Option<&DividendSpec>) -> Result<f64> {
    spec.validate()?;
    let tau = spec.tau();
    let growth = (spec.rate * tau).exp();
    Ok(match dividend {
        None => spec.spot * growth,
        Some(DividendSpec::Continuous { yield_rate }) => spec.spot * ((spec.rate - yield_rate) * tau).exp(),
        Some(&DividendSpec::Periodic { fraction, payments }) => {
            ensure((0.0..1.0).contains(&fraction), || format!("dividend fraction {fraction} outside [0, 1)"))?;
            spec.spot * (1.0 - fraction).powi(payments as i32) * growth
        }
    })
}

/// Undiscounted-forward form: `discount · E[payoff]` for a lognormal terminal
/// price with mean `forward` and log standard deviation `total_sd`.
pub fn black(kind: OptionKind, forward: f64, strike: f64, discount: f64, total_sd: f64) -> f64 {
    if total_sd == 0.0 {
        let intrinsic = match kind {
            OptionKind::Binary if forward == strike => 0.5,
            _ => kind.payoff(forward, strike),
        };
        return discount * intrinsic;
    }
    let d_plus = ((forward / strike).ln() + 0.5 * total_sd * total_sd) / total_sd;
    let d_minus = d_plus - total_sd;
    match kind {
        OptionKind::Call => discount * (forward * phi(d_plus) - strike * phi(d_minus)),
        OptionKind::Put => discount * (strike * phi(-d_minus) - forward * phi(-d_plus)),
        OptionKind::Binary => discount * phi(d_minus),
    }
}

/// Black-Scholes value without dividends.
pub fn bs_price(kind: OptionKind, spec: &PriceSpec) -> Result<f64> {
    spec.validate()?;
    let tau = spec.tau();
    Ok(black(
        kind,
        spec.spot * (spec.rate * tau).exp(),
        spec.strike,
        (-spec.rate * tau).exp(),
        spec.sigma * tau.sqrt(),
    ))
}

/// Black-Scholes value on the dividend-adjusted forward.
pub fn bs_price_with_dividends(kind: OptionKind, spec: &PriceSpec, dividend: &DividendSpec) -> Result<f64> {
    let forward = forward_price(spec, Some(dividend))?;
    let tau = spec.tau();
    Ok(black(kind, forward, spec.strike, (-spec.rate * tau).exp(), spec.sigma * tau.sqrt()))
}

/// Closed-form Greeks. `T > t` is required; `σ = 0` returns the
/// deterministic limits.
pub fn bs_greeks(kind: OptionKind, spec: &PriceSpec) -> Result<Greeks> {
    spec.validate()?;
    let tau = spec.tau();
    if !(tau > 0.0) {
        return domain("Greeks need T > t");
    }
    let PriceSpec { spot: z, strike: k, rate: r, sigma, .. } = *spec;
    let disc = (-r * tau).exp();
    let v = sigma * tau.sqrt();
    if v == 0.0 {
        let itm = z > k * disc;
        let (delta, rho) = match kind {
            OptionKind::Call if itm => (1.0, k * tau * disc),
            OptionKind::Put if !itm && z < k * disc => (-1.0, -k * tau * disc),
            _ => (0.0, 0.0),
        };
        let value = bs_price(kind, spec)?;
        return Ok(Greeks { theta: r * value - r * z * delta, delta, gamma: 0.0, vega: 0.0, rho });
    }
    let d_plus = ((z / k).ln() + (r + 0.5 * sigma * sigma) * tau) / v;
    let d_minus = d_plus - v;
    let sqrt_tau = tau.sqrt();
    Ok(match kind {
        OptionKind::Call | OptionKind::Put => {
            let gamma = norm_pdf(d_plus) / (z * v);
            let vega = z * norm_pdf(d_plus) * sqrt_tau;
            let decay = -z * norm_pdf(d_plus) * sigma / (2.0 * sqrt_tau);
            if kind == OptionKind::Call {
                Greeks {
                    theta: decay - r * k * disc * phi(d_minus),
                    delta: phi(d_plus),
                    gamma,
                    vega,
                    rho: k * tau * disc * phi(d_minus),
                }
            } else {
                Greeks {
                    theta: decay + r * k * disc * phi(-d_minus),
                    delta: phi(d_plus) - 1.0,
                    gamma,
                    vega,
                    rho: -k * tau * disc * phi(-d_minus),
                }
            }
        }
        OptionKind::Binary => {
            let n = norm_pdf(d_minus);
            let value = disc * phi(d_minus);
            let log_moneyness = (z / k).ln() + r * tau;
            let dd_dtau = r / (sigma * sqrt_tau) - log_moneyness / (2.0 * sigma * tau * sqrt_tau) - sigma / (4.0 * sqrt_tau);
            Greeks {
                theta: r * value - disc * n * dd_dtau,
                delta: disc * n / (z * v),
                gamma: -disc * n * d_plus / (z * z * v * v),
                vega: -disc * n * d_plus / sigma,
                rho: -tau * value + disc * n * sqrt_tau / sigma,
            }
        }
    })
}

/// Binary prices at interior strikes from call prices on a uniform strike
/// grid, by central differences of `-∂C/∂k`. The two edge strikes are not
/// reported.
pub fn binary_from_call_spectrum(strikes: &[f64], calls: &[f64]) -> Result<Vec<(f64, f64)>> {
    if strikes.len() < 3 || strikes.len() != calls.len() {
        return domain("need at least three strikes with one call price each");
    }
    let h = strikes[1] - strikes[0];
    ensure(h > 0.0, || "strikes must increase".into())?;
    for w in strikes.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return domain("strike grid must be uniform");
        }
    }
    Ok((1..strikes.len() - 1)
        .map(|i| (strikes[i], -(calls[i + 1] - calls[i - 1]) / (2.0 * h)))
        .collect())
}

/// Leading-order expansion in `σ√T` around the money, with
/// `κ = ln(F/k)/(σ√T)`.
pub fn atm_approx(kind: OptionKind, forward: f64, strike: f64, r: f64, maturity: f64, sigma: f64) -> Result<f64> {
    ensure(forward > 0.0 && strike > 0.0 && maturity > 0.0 && sigma > 0.0, || {
        "atm_approx needs positive forward, strike, maturity and sigma".into()
    })?;
    let s = sigma * maturity.sqrt();
    let kappa = (forward / strike).ln() / s;
    let disc = (-r * maturity).exp();
    Ok(match kind {
        OptionKind::Call => strike * disc * (kappa * phi(kappa) + norm_pdf(kappa)) * s,
        // Φ̃ = 1 - Φ and Φ̃' = -Φ'
        OptionKind::Put => -strike * disc * (kappa * phi(-kappa) - norm_pdf(kappa)) * s,
        OptionKind::Binary => disc * (phi(kappa) - norm_pdf(kappa) * s / 2.0),
    })
}

/// Model-free no-arbitrage bounds `(lower, upper)` without dividends.
pub fn price_bounds(kind: OptionKind, exercise: Exercise, spec: &PriceSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let pv_strike = spec.strike * (-spec.rate * spec.tau()).exp();
    Ok(match (kind, exercise) {
        (OptionKind::Call, _) => ((spec.spot - pv_strike).max(0.0), spec.spot),
        (OptionKind::Put, Exercise::European) => ((pv_strike - spec.spot).max(0.0), pv_strike),
        (OptionKind::Put, Exercise::American) => ((spec.strike - spec.spot).max(0.0), spec.strike),
        (OptionKind::Binary, _) => (0.0, (-spec.rate * spec.tau()).exp()),
    })
}

/// Guaranteed floor of the index-linked contract, as a fraction of the
/// initial index level.
pub const FTSE_FLOOR: f64 = 1.3;
/// Cap as a fraction of the initial level.
pub const FTSE_CAP: f64 = 1.8;
/// Participation in the index return.
pub const FTSE_PARTICIPATION: f64 = 0.9;

/// Payoff `min{max{1.3, 0.9 S_T/S_0}, 1.8}`.
pub fn ftse_claim(ratio: f64) -> f64 {
    (FTSE_PARTICIPATION * ratio).clamp(FTSE_FLOOR, FTSE_CAP)
}

/// The contract as bond plus call spread:
/// `1.3 + 0.9[(S_T - 13/9)⁺ - (S_T - 2)⁺]`, priced with a continuous yield.
pub fn ftse_contract_price(s0: f64, r: f64, yield_rate: f64, sigma: f64, maturity: f64) -> Result<f64> {
    ensure(s0 > 0.0 && maturity > 0.0 && sigma >= 0.0, || "need s0 > 0, T > 0, sigma >= 0".into())?;
    let lower = FTSE_FLOOR / FTSE_PARTICIPATION;
    let upper = FTSE_CAP / FTSE_PARTICIPATION;
    let disc = (-r * maturity).exp();
    let forward = ((r - yield_rate) * maturity).exp();
    let sd = sigma * maturity.sqrt();
    let spread = black(OptionKind::Call, forward, lower, disc, sd) - black(OptionKind::Call, forward, upper, disc, sd);
    Ok(s0 * (disc * FTSE_FLOOR + FTSE_PARTICIPATION * spread))
}

/// Forward exchange rate `C e^{(r-u)(T-t)}` with domestic rate `r` and
/// foreign rate `u`.
pub fn fx_forward(c0: f64, r: f64, u: f64, t: f64, maturity: f64) -> Result<f64> {
    ensure(c0 > 0.0 && maturity >= t, || "need C > 0 and T >= t".into())?;
    Ok(c0 * ((r - u) * (maturity - t)).exp())
}

/// Foreign asset with vol `sigma1` and foreign rate `u`, exchange rate with
/// vol `sigma2`, correlation `rho`, domestic rate `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantoParams {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub r: f64,
    pub u: f64,
}

impl QuantoParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.sigma1 >= 0.0 && self.sigma2 >= 0.0, || "quanto vols must be >= 0".into())?;
        ensure(self.rho.abs() <= 1.0, || format!("correlation {} outside [-1, 1]", self.rho))
    }
}

/// Forward of the foreign asset paid in domestic currency at a fixed rate:
/// `S_0 e^{uT} e^{-σ1σ2ρT}`.
pub fn quanto_forward(s0: f64, params: &QuantoParams, maturity: f64) -> Result<f64> {
    params.validate()?;
    ensure(s0 > 0.0 && maturity >= 0.0, || "need s0 > 0 and T >= 0".into())?;
    Ok(s0 * ((params.u - params.sigma1 * params.sigma2 * params.rho) * maturity).exp())
}

/// Quanto option: Black on the quanto forward with vol `σ1`, discounted
/// domestically.
pub fn quanto_price(kind: OptionKind, s0: f64, strike: f64, params: &QuantoParams, maturity: f64) -> Result<f64> {
    let forward = quanto_forward(s0, params, maturity)?;
    ensure(strike > 0.0, || "strike must be positive".into())?;
    Ok(black(kind, forward, strike, (-params.r * maturity).exp(), params.sigma1 * maturity.sqrt()))
}

/// Futures position per unit of stock minimizing hedge variance: `ρσ_S/σ_F`.
pub fn optimal_hedge_ratio(rho: f64, sigma_s: f64, sigma_f: f64) -> Result<f64> {
    ensure(sigma_f > 0.0, || "hedge instrument vol must be positive".into())?;
    ensure(rho.abs() <= 1.0, || format!("correlation {rho} outside [-1, 1]"))?;
    Ok(rho * sigma_s / sigma_f)
}

/// Weight on asset 1 in the minimum-variance two-asset portfolio.
pub fn min_variance_weights(sigma1: f64, sigma2: f64, rho: f64) -> Result<f64> {
    let den = sigma1 * sigma1 + sigma2 * sigma2 - 2.0 * rho * sigma1 * sigma2;
    if den.abs() <= 1e-14 * (sigma1 * sigma1 + sigma2 * sigma2).max(f64::MIN_POSITIVE) {
        return domain("assets are perfectly correlated with equal vols; minimum-variance weight undefined");
    }
    Ok((sigma2 * sigma2 - rho * sigma1 * sigma2) / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atm() -> PriceSpec {
        PriceSpec { spot: 100.0, strike: 100.0, rate: 0.05, sigma: 0.2, t: 0.0, maturity: 1.0 }
    }

    #[test]
    fn reference_call() {
        let c = bs_price(OptionKind::Call, &atm()).unwrap();
        assert!((c - 10.450_583_572_185_565).abs() < 1e-9, "{c}");
    }

    #[test]
    fn expiry_is_intrinsic() {
        let spec = PriceSpec { t: 1.0, spot: 90.0, ..atm() };
        assert_eq!(bs_price(OptionKind::Put, &spec).unwrap(), 10.0);
        assert_eq!(bs_price(OptionKind::Binary, &spec).unwrap(), 0.0);
    }

    #[test]
    fn ftse_forward() {
        let spec = PriceSpec { spot: 1.0, strike: 1.0, rate: 0.065, sigma: 0.15, t: 0.0, maturity: 5.0 };
        let f = forward_price(&spec, Some(&DividendSpec::Continuous { yield_rate: 0.04 })).unwrap();
        assert!((f - 0.125f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn min_variance_example() {
        let x = min_variance_weights(0.2, 0.3, 0.5).unwrap();
        assert!((x - 6.0 / 7.0).abs() < 1e-14);
        assert!(min_variance_weights(0.2, 0.2, 1.0).is_err());
    }

    #[test]
    fn spectrum_needs_three_strikes() {
        assert!(binary_from_call_spectrum(&[1.0, 2.0], &[0.5, 0.2]).is_err());
    }
}
