use serde::{Deserialize, Serialize};

use crate::analytic::{black, OptionKind};
use crate::error::{ensure, Result};

use super::curve::DiscountCurve;
use super::short_rate::{bond_option_from_prices, term_variance, ShortRateModel};

/// Payment dates `T_i = T_0 + iδ`, `i = 1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t0: f64,
    pub delta: f64,
    pub n: usize,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        ensure(self.t0 >= 0.0 && self.delta > 0.0 && self.n >= 1, || {
            format!("schedule needs T0 >= 0, delta > 0, n >= 1, got {self:?}")
        })
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.delta * i as f64
    }

    pub fn payment_times(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.time(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.time(self.n)
    }

    /// `δ Σ P(0, T_i)`.
    pub fn annuity(&self, curve: &DiscountCurve) -> f64 {
        self.delta * self.payment_times().iter().map(|&t| curve.discount(t)).sum::<f64>()
    }
}

/// Today's value of principal at `maturity` plus coupons `kδ` on each date.
pub fn coupon_bond_price(curve: &DiscountCurve, schedule: &Schedule, coupon: f64, maturity: f64) -> Result<f64> {
    schedule.validate()?;
    ensure(maturity >= schedule.end(), || "bond maturity must not precede the last coupon".into())?;
    Ok(curve.discount(maturity) + coupon * schedule.annuity(curve))
}

/// Coupon making the bond worth par at `T_0`: `(P(T_0) - P(T)) / (δ Σ P(T_i))`.
pub fn par_coupon_rate(curve: &DiscountCurve, schedule: &Schedule, maturity: f64) -> Result<f64> {
    schedule.validate()?;
    ensure(maturity >= schedule.end(), || "bond maturity must not precede the last coupon".into())?;
    Ok((curve.discount(schedule.t0) - curve.discount(maturity)) / schedule.annuity(curve))
}

/// Value at `T_0`, per unit notional, of a bond paying floating LIBOR on the
/// schedule and principal at `maturity`: `1 + P(T_0,T) - P(T_0,T_n)`.
pub fn floating_bond_value(curve: &DiscountCurve, schedule: &Schedule, maturity: f64) -> Result<f64> {
    schedule.validate()?;
    ensure(maturity >= schedule.end(), || "bond maturity must not precede the last payment".into())?;
    let p0 = curve.discount(schedule.t0);
    Ok(1.0 + (curve.discount(maturity) - curve.discount(schedule.end())) / p0)
}

/// Simple forward rate for `[start, end]`: `(P(start)/P(end) - 1)/(end - start)`.
pub fn forward_libor(curve: &DiscountCurve, start: f64, end: f64) -> f64 {
    (curve.discount(start) / curve.discount(end) - 1.0) / (end - start)
}

/// Fixed rate of a par swap on the schedule.
pub fn swap_rate(curve: &DiscountCurve, schedule: &Schedule) -> Result<f64> {
    schedule.validate()?;
    Ok((curve.discount(schedule.t0) - curve.discount(schedule.end())) / schedule.annuity(curve))
}

/// Par rate seen at `t ≤ T_0` for the forward-starting swap:
/// `(P(t,T_0) - P(t,T_n)) / (δ Σ P(t,T_i))`, with `P(t,·) = P(0,·)/P(0,t)`.
pub fn forward_swap_rate(curve: &DiscountCurve, t: f64, schedule: &Schedule) -> Result<f64> {
    schedule.validate()?;
    ensure(t <= schedule.t0, || "forward swap rate needs t <= T0".into())?;
    let pt = curve.discount(t);
    let num = (curve.discount(schedule.t0) - curve.discount(schedule.end())) / pt;
    let den = schedule.delta * schedule.payment_times().iter().map(|&ti| curve.discount(ti) / pt).sum::<f64>();
    Ok(num / den)
}

/// Today's `(fixed leg, floating leg)` values of a swap paying fixed `k`:
/// the floating leg summed period by period from forward LIBOR.
pub fn swap_legs(curve: &DiscountCurve, schedule: &Schedule, k: f64) -> Result<(f64, f64)> {
    schedule.validate()?;
    let fixed = k * schedule.annuity(curve);
    let floating = (1..=schedule.n)
        .map(|i| {
            let (a, b) = (schedule.time(i - 1), schedule.time(i));
            schedule.delta * forward_libor(curve, a, b) * curve.discount(b)
        })
        .sum();
    Ok((fixed, floating))
}

/// Piecewise-constant lognormal LIBOR volatility: `values[i]` holds one
/// entry per factor on `[breaks[i], breaks[i+1])`; the last interval extends
/// to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseVol {
    pub breaks: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl PiecewiseVol {
    pub fn flat(sigma: f64) -> Self {
        Self { breaks: vec![0.0], values: vec![vec![sigma]] }
    }

    /// `Σ_j ∫_a^b γ_j(s)² ds`.
    pub fn integrated_variance(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let lo = self.breaks[i].max(a);
            let hi = self.breaks.get(i + 1).copied().unwrap_or(f64::INFINITY).min(b);
            if hi > lo {
                total += (hi - lo) * v.iter().map(|g| g * g).sum::<f64>();
            }
        }
        total
    }
}

/// Lognormal-LIBOR caplet on `[T_{i-1}, T_i]` paying `δ(L - k)⁺` at `T_i`,
/// with `L` fixed at `T_{i-1}`.
pub fn caplet_black(curve: &DiscountCurve, start: f64, end: f64, k: f64, vol: &PiecewiseVol) -> Result<f64> {
    libor_option(OptionKind::Call, curve, start, end, k, vol)
}

/// Floorlet counterpart paying `δ(k - L)⁺`.
pub fn floorlet_black(curve: &DiscountCurve, start: f64, end: f64, k: f64, vol: &PiecewiseVol) -> Result<f64> {
    libor_option(OptionKind::Put, curve, start, end, k, vol)
}

fn libor_option(kind: OptionKind, curve: &DiscountCurve, start: f64, end: f64, k: f64, vol: &PiecewiseVol) -> Result<f64> {
    ensure(end > start && start >= 0.0 && k > 0.0, || "need 0 <= T_{i-1} < T_i and k > 0".into())?;
    let delta = end - start;
    let l = forward_libor(curve, start, end);
    let zeta = vol.integrated_variance(0.0, start);
    Ok(delta * black(kind, l, k, curve.discount(end), zeta.sqrt()))
}

/// Caplet as `(1 + δk)` puts, expiring `T_{i-1}`, on the bond maturing at
/// `T_i` with strike `1/(1 + δk)`, in a Gaussian short-rate model fitted to
/// `curve`.
pub fn caplet_via_bond_put(model: &ShortRateModel, curve: &DiscountCurve, start: f64, end: f64, k: f64) -> Result<f64> {
    bond_route(OptionKind::Put, model, curve, start, end, k)
}

/// Floorlet as `(1 + δk)` calls on the same bond.
pub fn floorlet_via_bond_call(model: &ShortRateModel, curve: &DiscountCurve, start: f64, end: f64, k: f64) -> Result<f64> {
    bond_route(OptionKind::Call, model, curve, start, end, k)
}

fn bond_route(kind: OptionKind, model: &ShortRateModel, curve: &DiscountCurve, start: f64, end: f64, k: f64) -> Result<f64> {
    ensure(end > start && start >= 0.0, || "need 0 <= T_{i-1} < T_i".into())?;
    let scale = 1.0 + (end - start) * k;
    let v = term_variance(model, 0.0, start, end)?;
    Ok(scale * bond_option_from_prices(kind, curve.discount(start), curve.discount(end), 1.0 / scale, v)?)
}
