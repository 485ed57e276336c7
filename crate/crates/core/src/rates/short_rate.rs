use std::sync::Arc;

use crate::analytic::{black, OptionKind};
use crate::error::{domain, ensure, Error, Result};
use crate::mathcore::{adaptive_simpson, bracket_scan, find_root, NormalStream};
use crate::processes::{SamplePath, TimeGrid};

use super::products::Schedule;

const QUAD_TOL: f64 = 1e-13;

/// A model parameter as a function of time.
#[derive(Clone)]
pub enum TimeFn {
    Const(f64),
    Func(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TimeFn::Const(c) => write!(f, "Const({c})"),
            TimeFn::Func(_) => write!(f, "Func(..)"),
        }
    }
}

impl TimeFn {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            TimeFn::Const(c) => *c,
            TimeFn::Func(f) => f(t),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            TimeFn::Const(c) => Some(*c),
            TimeFn::Func(_) => None,
        }
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            TimeFn::Const(c) => c * (b - a),
            TimeFn::Func(f) => adaptive_simpson(&|s| f(s), a, b, QUAD_TOL),
        }
    }
}

impl From<f64> for TimeFn {
    fn from(c: f64) -> Self {
        TimeFn::Const(c)
    }
}

/// Short-rate dynamics for `r` with Brownian driver `W`:
///
/// * Ho-Lee: `dr = ρ dW + ν dt`
/// * Vasicek: `dr = ρ dW + (ν - α r) dt`
/// * CIR: `dr = ρ √r dW + (ν - α r) dt`
/// * Black-Karasinski: `d ln r = ρ dW + (ν - α ln r) dt`
#[derive(Debug, Clone)]
pub enum ShortRateModel {
    HoLee { rho: TimeFn, nu: TimeFn },
    Vasicek { rho: TimeFn, nu: TimeFn, alpha: TimeFn },
    Cir { rho: TimeFn, nu: TimeFn, alpha: TimeFn },
    BlackKarasinski { rho: TimeFn, nu: TimeFn, alpha: TimeFn },
}

impl ShortRateModel {
    pub fn ho_lee(rho: f64, nu: f64) -> Self {
        ShortRateModel::HoLee { rho: rho.into(), nu: nu.into() }
    }

    pub fn vasicek(rho: f64, nu: f64, alpha: f64) -> Self {
        ShortRateModel::Vasicek { rho: rho.into(), nu: nu.into(), alpha: alpha.into() }
    }

    pub fn cir(rho: f64, nu: f64, alpha: f64) -> Self {
        ShortRateModel::Cir { rho: rho.into(), nu: nu.into(), alpha: alpha.into() }
    }

    pub fn black_karasinski(rho: f64, nu: f64, alpha: f64) -> Self {
        ShortRateModel::BlackKarasinski { rho: rho.into(), nu: nu.into(), alpha: alpha.into() }
    }

    fn name(&self) -> &'static str {
        match self {
            ShortRateModel::HoLee { .. } => "Ho-Lee",
            ShortRateModel::Vasicek { .. } => "Vasicek",
            ShortRateModel::Cir { .. } => "CIR",
            ShortRateModel::BlackKarasinski { .. } => "Black-Karasinski",
        }
    }
}

/// `β(t,T) = exp(-∫_t^T α)`.
fn vasicek_beta(alpha: &TimeFn, t: f64, maturity: f64) -> f64 {
    (-alpha.integral(t, maturity)).exp()
}

/// `η(t,T) = ∫_t^T β(t,u) du`.
fn vasicek_eta(alpha: &TimeFn, t: f64, maturity: f64) -> f64 {
    match alpha.constant() {
        Some(0.0) => maturity - t,
        Some(a) => -(-a * (maturity - t)).exp_m1() / a,
        None => adaptive_simpson(&|u| vasicek_beta(alpha, t, u), t, maturity, QUAD_TOL),
    }
}

/// `(B(t,T), ∫_t^T ν(s) B(s,T) ds)` from the Riccati equation
/// `∂B/∂t = ½ρ²B² + αB - 1`, `B(T,T) = 0`, by RK4 with step `(T-t)/1000`.
pub(crate) fn cir_riccati(rho: &TimeFn, nu: &TimeFn, alpha: &TimeFn, t: f64, maturity: f64) -> (f64, f64) {
    const STEPS: usize = 1000;
    let h = (maturity - t) / STEPS as f64;
    // state (B, A) in backward time s from T down to t
    let rhs = |s: f64, b: f64| -> (f64, f64) {
        let r = rho.at(s);
        let db_dt = 0.5 * r * r * b * b + alpha.at(s) * b - 1.0;
        let da_dt = -nu.at(s) * b;
        (-db_dt, -da_dt)
    };
    let (mut b, mut a) = (0.0, 0.0);
    let mut s = maturity;
    for _ in 0..STEPS {
        let (k1b, k1a) = rhs(s, b);
        let (k2b, k2a) = rhs(s - 0.5 * h, b + 0.5 * h * k1b);
        let (k3b, k3a) = rhs(s - 0.5 * h, b + 0.5 * h * k2b);
        let (k4b, k4a) = rhs(s - h, b + h * k3b);
        b += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        s -= h;
    }
    (b, a)
}

/// Exponent `g` with `P(t,T) = exp(-g)` given `r_t = x`.
fn bond_exponent(model: &ShortRateModel, x: f64, t: f64, maturity: f64) -> Result<f64> {
    let tau = maturity - t;
    Ok(match model {
        ShortRateModel::HoLee { rho, nu } => match (rho.constant(), nu.constant()) {
            (Some(r), Some(n)) => x * tau - r * r * tau.powi(3) / 6.0 + n * tau * tau / 2.0,
            _ => {
                x * tau - 0.5 * adaptive_simpson(&|s| ((maturity - s) * rho.at(s)).powi(2), t, maturity, QUAD_TOL)
                    + adaptive_simpson(&|s| (maturity - s) * nu.at(s), t, maturity, QUAD_TOL)
            }
        },
        ShortRateModel::Vasicek { rho, nu, alpha } => match (rho.constant(), nu.constant(), alpha.constant()) {
            (Some(r), Some(n), Some(a)) if a != 0.0 => {
                let eta = -(-a * tau).exp_m1() / a;
                let int_eta = (tau - eta) / a;
                let int_eta2 = (tau - 2.0 * eta + -(-2.0 * a * tau).exp_m1() / (2.0 * a)) / (a * a);
                x * eta + n * int_eta - 0.5 * r * r * int_eta2
            }
            _ => {
                let eta = |s: f64| vasicek_eta(alpha, s, maturity);
                x * eta(t) + adaptive_simpson(&|s| eta(s) * nu.at(s), t, maturity, QUAD_TOL)
                    - 0.5 * adaptive_simpson(&|s| (eta(s) * rho.at(s)).powi(2), t, maturity, QUAD_TOL)
            }
        },
        ShortRateModel::Cir { rho, nu, alpha } => {
            let (b, a) = cir_riccati(rho, nu, alpha, t, maturity);
            x * b + a
        }
        ShortRateModel::BlackKarasinski { .. } => {
            return Err(Error::Unsupported("Black-Karasinski has no closed-form bond price".into()))
        }
    })
}

/// Zero-coupon bond price `P(t, T)` given `r_t = x`.
pub fn short_rate_bond_price(model: &ShortRateModel, x: f64, t: f64, maturity: f64) -> Result<f64> {
    ensure(maturity >= t, || format!("need T >= t, got t = {t}, T = {maturity}"))?;
    if let ShortRateModel::Cir { .. } = model {
        ensure(x >= 0.0, || format!("CIR short rate must be >= 0, got {x}"))?;
    }
    Ok((-bond_exponent(model, x, t, maturity)?).exp())
}

/// Variance of `ln[P(τ,T)/P(τ,τ)]` seen from `t`, for the Gaussian models:
/// `∫_t^τ ρ²(s) [η(s,T) - η(s,τ)]² ds`. Closed form for constant parameters.
pub fn term_variance(model: &ShortRateModel, t: f64, expiry: f64, maturity: f64) -> Result<f64> {
    ensure(t <= expiry && expiry <= maturity, || "need t <= tau <= T".into())?;
    match model {
        ShortRateModel::HoLee { rho, .. } => Ok(match rho.constant() {
            Some(r) => r * r * (maturity - expiry).powi(2) * (expiry - t),
            None => (maturity - expiry).powi(2) * adaptive_simpson(&|s| rho.at(s).powi(2), t, expiry, QUAD_TOL),
        }),
        ShortRateModel::Vasicek { rho, alpha, .. } => match (rho.constant(), alpha.constant()) {
            (Some(r), Some(a)) if a != 0.0 => Ok(r * r / (2.0 * a.powi(3))
                * (-a * (maturity - expiry)).exp_m1().powi(2)
                * -(-2.0 * a * (expiry - t)).exp_m1()),
            _ => term_variance_quadrature(model, t, expiry, maturity),
        },
        _ => Err(Error::Unsupported(format!("{} bond options have no lognormal closed form", model.name()))),
    }
}

/// The defining integral of [`term_variance`], always by quadrature.
pub fn term_variance_quadrature(model: &ShortRateModel, t: f64, expiry: f64, maturity: f64) -> Result<f64> {
    let (rho, alpha) = match model {
        ShortRateModel::HoLee { rho, .. } => (rho, TimeFn::Const(0.0)),
        ShortRateModel::Vasicek { rho, alpha, .. } => (rho, alpha.clone()),
        _ => return Err(Error::Unsupported(format!("{} is not a Gaussian model", model.name()))),
    };
    Ok(adaptive_simpson(
        &|s| (rho.at(s) * (vasicek_eta(&alpha, s, maturity) - vasicek_eta(&alpha, s, expiry))).powi(2),
        t,
        expiry,
        QUAD_TOL,
    ))
}

/// Option expiring at `τ` on the bond maturing at `T`, from today's bond
/// prices and the log-variance of the forward bond price:
/// `P(t,τ) · Black(P(t,T)/P(t,τ), k, √v)`.
pub fn bond_option_from_prices(kind: OptionKind, p_expiry: f64, p_maturity: f64, strike: f64, variance: f64) -> Result<f64> {
    ensure(p_expiry > 0.0 && p_maturity > 0.0 && strike > 0.0 && variance >= 0.0, || {
        "bond option needs positive prices and strike, variance >= 0".into()
    })?;
    let forward = p_maturity / p_expiry;
    Ok(match kind {
        OptionKind::Put => {
            let call = black(OptionKind::Call, forward, strike, p_expiry, variance.sqrt());
            call - p_maturity + strike * p_expiry
        }
        _ => black(kind, forward, strike, p_expiry, variance.sqrt()),
    })
}

/// Bond option in a Gaussian short-rate model with `r_t = x`.
#[allow(clippy::too_many_arguments)]
pub fn bond_option(
    model: &ShortRateModel,
    kind: OptionKind,
    x: f64,
    t: f64,
    expiry: f64,
    maturity: f64,
    strike: f64,
) -> Result<f64> {
    let v = term_variance(model, t, expiry, maturity)?;
    let p_expiry = short_rate_bond_price(model, x, t, expiry)?;
    let p_maturity = short_rate_bond_price(model, x, t, maturity)?;
    bond_option_from_prices(kind, p_expiry, p_maturity, strike, v)
}

/// Coupon bond at `t` given `r_t = x`: principal at `maturity` plus coupons
/// `coupon · δ` on every schedule date after `t`.
pub fn short_rate_coupon_bond(
    model: &ShortRateModel,
    x: f64,
    t: f64,
    schedule: &Schedule,
    coupon: f64,
    maturity: f64,
) -> Result<f64> {
    let mut v = short_rate_bond_price(model, x, t, maturity)?;
    for ti in schedule.payment_times().into_iter().filter(|&ti| ti > t && ti <= maturity) {
        v += coupon * schedule.delta * short_rate_bond_price(model, x, t, ti)?;
    }
    Ok(v)
}

/// Critical short rate and the matching zero-coupon strikes.
#[derive(Debug, Clone, PartialEq)]
pub struct JamshidianStrikes {
    pub r_star: f64,
    /// `(payment time, cash flow, strike P(τ, T_i; r*))`.
    pub legs: Vec<(f64, f64, f64)>,
}

/// Rate `r*` at which the coupon bond is worth `strike` at the expiry `τ`,
/// found by scanning `[-0.5, 1.5]` in 100 cells and polishing the bracket.
pub fn jamshidian_strikes(
    model: &ShortRateModel,
    schedule: &Schedule,
    coupon: f64,
    maturity: f64,
    strike: f64,
    expiry: f64,
) -> Result<JamshidianStrikes> {
    let value = |r: f64| short_rate_coupon_bond(model, r, expiry, schedule, coupon, maturity).map(|v| v - strike);
    value(0.0)?;
    let bracket = bracket_scan(|r| value(r).unwrap_or(f64::NAN), -0.5, 1.5, 100);
    let &(lo, hi) = bracket
        .first()
        .ok_or_else(|| Error::Domain(format!("coupon bond never equals strike {strike} for r in [-0.5, 1.5]")))?;
    let r_star = find_root(|r| value(r).unwrap_or(f64::NAN), lo, hi, 1e-14)?;
    let mut legs = Vec::new();
    for ti in schedule.payment_times().into_iter().filter(|&ti| ti > expiry && ti <= maturity) {
        legs.push((ti, coupon * schedule.delta, short_rate_bond_price(model, r_star, expiry, ti)?));
    }
    legs.push((maturity, 1.0, short_rate_bond_price(model, r_star, expiry, maturity)?));
    Ok(JamshidianStrikes { r_star, legs })
}

/// Option expiring at `τ` on a coupon bond, as a portfolio of zero-coupon
/// bond options (requires bond prices decreasing in the short rate).
#[allow(clippy::too_many_arguments)]
pub fn coupon_bond_option(
    model: &ShortRateModel,
    kind: OptionKind,
    x: f64,
    t: f64,
    schedule: &Schedule,
    coupon: f64,
    maturity: f64,
    strike: f64,
    expiry: f64,
) -> Result<f64> {
    if kind == OptionKind::Binary {
        return domain("coupon bond options are calls or puts");
    }
    let js = jamshidian_strikes(model, schedule, coupon, maturity, strike, expiry)?;
    let mut total = 0.0;
    for (ti, cash, k) in js.legs {
        total += cash * bond_option(model, kind, x, t, expiry, ti, k)?;
    }
    Ok(total)
}

/// Right at `T_0` to enter the swap receiving fixed `k` on `schedule`: a call
/// struck at 1 on the coupon bond paying `k`.
pub fn swaption_price(model: &ShortRateModel, x: f64, t: f64, schedule: &Schedule, k: f64) -> Result<f64> {
    coupon_bond_option(model, OptionKind::Call, x, t, schedule, k, schedule.end(), 1.0, schedule.t0)
}

/// Short-rate path on `grid` starting from `x`.
///
/// Constant-parameter Ho-Lee and Vasicek (and Black-Karasinski in `ln r`) use
/// exact Gaussian transitions; CIR uses full-truncation Euler; other
/// time-dependent cases use Euler.
pub fn simulate_short_rate(model: &ShortRateModel, x: f64, grid: &TimeGrid, rng: &mut NormalStream) -> Result<SamplePath> {
    grid.validate()?;
    let dt = grid.dt();
    let sq = dt.sqrt();
    let n = grid.n_steps;
    let gaussian_step = |rho: &TimeFn, nu: &TimeFn, alpha: &TimeFn, y: f64, t: f64, z: f64| -> f64 {
        match (rho.constant(), nu.constant(), alpha.constant()) {
            (Some(r), Some(v), Some(a)) if a != 0.0 => {
                let e = (-a * dt).exp();
                y * e + v * -(-a * dt).exp_m1() / a + r * (-(-2.0 * a * dt).exp_m1() / (2.0 * a)).sqrt() * z
            }
            _ => y + (nu.at(t) - alpha.at(t) * y) * dt + rho.at(t) * sq * z,
        }
    };
    if let ShortRateModel::BlackKarasinski { .. } = model {
        ensure(x > 0.0, || "Black-Karasinski needs a positive short rate".into())?;
    }
    let zero = TimeFn::Const(0.0);
    let mut path = SamplePath { times: Vec::with_capacity(n + 1), brownian: Vec::new(), state: Vec::new(), rn_weight: Vec::new() };
    let mut y = match model {
        ShortRateModel::BlackKarasinski { .. } => x.ln(),
        _ => x,
    };
    let mut w = 0.0;
    for k in 0..=n {
        let t = grid.time(k);
        if k > 0 {
            let z = rng.normal();
            let tp = grid.time(k - 1);
            y = match model {
                ShortRateModel::HoLee { rho, nu } => gaussian_step(rho, nu, &zero, y, tp, z),
                ShortRateModel::Vasicek { rho, nu, alpha } | ShortRateModel::BlackKarasinski { rho, nu, alpha } => {
                    gaussian_step(rho, nu, alpha, y, tp, z)
                }
                ShortRateModel::Cir { rho, nu, alpha } => {
                    let yp = y.max(0.0);
                    y + (nu.at(tp) - alpha.at(tp) * yp) * dt + rho.at(tp) * yp.sqrt() * sq * z
                }
            };
            w += sq * z;
        }
        let r = match model {
            ShortRateModel::BlackKarasinski { .. } => y.exp(),
            ShortRateModel::Cir { .. } => y.max(0.0),
            _ => y,
        };
        path.times.push(t);
        path.brownian.push(w);
        path.state.push(r);
        path.rn_weight.push(1.0);
    }
    Ok(path)
}
