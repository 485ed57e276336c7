//! Sample paths of Brownian motion, geometric Brownian motion and the
//! Ornstein-Uhlenbeck and square-root short-rate processes, with
//! change-of-measure weights and the market price of risk.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure, Error, Result};
use crate::mathcore::{phi, LowerFactor, NormalStream};

/// Uniform grid `t0 < t0 + dt < … < t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        let g = Self { t0, t_end, n_steps };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.t0.is_finite() && self.t_end.is_finite() && self.t_end > self.t0, || {
            format!("time grid needs t_end > t0, got [{}, {}]", self.t0, self.t_end)
        })?;
        ensure(self.n_steps > 0, || "time grid needs at least one step".into())
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t0 + self.dt() * k as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }
}

/// One simulated path. `brownian[0] = 0` and `rn_weight[0] = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub brownian: Vec<f64>,
    pub state: Vec<f64>,
    /// Radon-Nikodym process `ζ_t = dQ/dP` restricted to `F_t`.
    pub rn_weight: Vec<f64>,
}

impl SamplePath {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            brownian: Vec::with_capacity(n),
            state: Vec::with_capacity(n),
            rn_weight: Vec::with_capacity(n),
        }
    }

    pub fn terminal_state(&self) -> f64 {
        *self.state.last().expect("non-empty path")
    }

    pub fn terminal_weight(&self) -> f64 {
        *self.rn_weight.last().expect("non-empty path")
    }

    /// CSV with header `t,W,state,zeta`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "W", "state", "zeta"])?;
        for k in 0..self.times.len() {
            w.write_record(&[
                self.times[k].to_string(),
                self.brownian[k].to_string(),
                self.state[k].to_string(),
                self.rn_weight[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn simulate_brownian(grid: &TimeGrid, rng: &mut NormalStream) -> SamplePath {
    let n = grid.n_steps;
    let sq = grid.dt().sqrt();
    let mut path = SamplePath::with_capacity(n + 1);
    let mut w = 0.0;
    for k in 0..=n {
        if k > 0 {
            w += sq * rng.normal();
        }
        path.times.push(grid.time(k));
        path.brownian.push(w);
        path.state.push(w);
        path.rn_weight.push(1.0);
    }
    path
}

/// `S_t = s0 exp(σ W_t + μ t)`, with `W` a Brownian motion under P.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub s0: f64,
    pub sigma: f64,
    pub mu: f64,
}

impl GbmParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.s0 > 0.0 && self.s0.is_finite(), || format!("s0 = {} must be positive", self.s0))?;
        ensure(self.sigma >= 0.0 && self.sigma.is_finite(), || {
            format!("sigma = {} must be finite and >= 0", self.sigma)
        })?;
        ensure(self.mu.is_finite(), || "mu must be finite".into())
    }

    /// Constant `γ` making `e^{-rt} S_t` a martingale: `(μ - r + σ²/2)/σ`.
    pub fn risk_neutral_gamma(&self, r: f64) -> Result<f64> {
        ensure(self.sigma > 0.0, || "risk-neutral shift needs sigma > 0".into())?;
        Ok((self.mu - r + 0.5 * self.sigma * self.sigma) / self.sigma)
    }
}

/// Change of measure applied while sampling.
///
/// With a per-step drift `γ_k`, `W̃ = W + ∫γ dt` is Brownian under Q and
/// `ζ = exp(-∫γ dW - ½∫γ² dt)` (left-point sums).
#[derive(Debug, Clone, Copy)]
pub enum DriftShift<'a> {
    None,
    /// Draw `W` under P and carry `ζ` as a weight.
    Reweight(&'a [f64]),
    /// Draw `W̃` under Q; the state's drift changes accordingly.
    Resample(&'a [f64]),
}

impl DriftShift<'_> {
    fn gamma(&self) -> Option<&[f64]> {
        match self {
            DriftShift::None => None,
            DriftShift::Reweight(g) | DriftShift::Resample(g) => Some(g),
        }
    }
}

/// Exact GBM sample on `grid`. `brownian` always holds the P-Brownian motion.
pub fn simulate_gbm(
    params: &GbmParams,
    grid: &TimeGrid,
    shift: DriftShift<'_>,
    rng: &mut NormalStream,
) -> Result<SamplePath> {
    params.validate()?;
    if let Some(g) = shift.gamma() {
        if g.len() != grid.n_steps {
            return domain(format!("shift has {} entries, grid has {} steps", g.len(), grid.n_steps));
        }
    }
    let n = grid.n_steps;
    let dt = grid.dt();
    let sq = dt.sqrt();
    let mut path = SamplePath::with_capacity(n + 1);
    let mut w = 0.0;
    let mut log_zeta = 0.0;
    for k in 0..=n {
        if k > 0 {
            let z = sq * rng.normal();
            let dw = match shift {
                DriftShift::Resample(g) => z - g[k - 1] * dt,
                _ => z,
            };
            if let Some(g) = shift.gamma() {
                let gk = g[k - 1];
                log_zeta += -gk * dw - 0.5 * gk * gk * dt;
            }
            w += dw;
        }
        let t = grid.time(k);
        path.times.push(t);
        path.brownian.push(w);
        path.state.push(params.s0 * (params.sigma * w + params.mu * (t - grid.t0)).exp());
        path.rn_weight.push(log_zeta.exp());
    }
    Ok(path)
}

/// Correlated Brownian paths `Λ W`; one vector per grid time.
pub fn simulate_correlated_brownian(
    factor: &LowerFactor,
    grid: &TimeGrid,
    rng: &mut NormalStream,
) -> Vec<Vec<f64>> {
    let d = factor.dim();
    let sq = grid.dt().sqrt();
    let mut w = vec![0.0; d];
    let mut out = Vec::with_capacity(grid.n_steps + 1);
    out.push(w.clone());
    let mut z = vec![0.0; d];
    for _ in 0..grid.n_steps {
        for zi in z.iter_mut() {
            *zi = sq * rng.normal();
        }
        for (wi, dwi) in w.iter_mut().zip(factor.apply(&z)) {
            *wi += dwi;
        }
        out.push(w.clone());
    }
    out
}

/// `dr = ρ dW + (ν - α r) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub r0: f64,
    pub rho: f64,
    pub nu: f64,
    pub alpha: f64,
}

/// Exact Gaussian transitions; `α = 0` uses the Brownian-with-drift limit.
pub fn simulate_ou(params: &OuParams, grid: &TimeGrid, rng: &mut NormalStream) -> SamplePath {
    let OuParams { r0, rho, nu, alpha } = *params;
    let n = grid.n_steps;
    let dt = grid.dt();
    let (decay, drift_gain, sd) = if alpha == 0.0 {
        (1.0, dt, rho * dt.sqrt())
    } else {
        let e = (-alpha * dt).exp();
        let var_gain = -(-2.0 * alpha * dt).exp_m1() / (2.0 * alpha);
        (e, -(-alpha * dt).exp_m1() / alpha, rho * var_gain.sqrt())
    };
    let sq = dt.sqrt();
    let mut path = SamplePath::with_capacity(n + 1);
    let (mut r, mut w) = (r0, 0.0);
    for k in 0..=n {
        if k > 0 {
            let z = rng.normal();
            r = r * decay + nu * drift_gain + sd * z;
            w += sq * z;
        }
        path.times.push(grid.time(k));
        path.brownian.push(w);
        path.state.push(r);
        path.rn_weight.push(1.0);
    }
    path
}

/// Mean and variance of `r_t` given `r_0`.
pub fn ou_moments(params: &OuParams, t: f64) -> Result<(f64, f64)> {
    let OuParams { r0, rho, nu, alpha } = *params;
    if !(alpha > 0.0) {
        return domain(format!("ou_moments needs alpha > 0, got {alpha}"));
    }
    if !(t >= 0.0) {
        return domain(format!("ou_moments needs t >= 0, got {t}"));
    }
    let e = (-alpha * t).exp();
    let mean = e * r0 + nu / alpha * (1.0 - e);
    let var = rho * rho * -(-2.0 * alpha * t).exp_m1() / (2.0 * alpha);
    Ok((mean, var))
}

/// `dr = ρ √r dW + (ν - α r) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirParams {
    pub r0: f64,
    pub rho: f64,
    pub nu: f64,
    pub alpha: f64,
}

impl CirParams {
    /// `2ν ≥ ρ²`: the origin is not attainable.
    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.nu >= self.rho * self.rho
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.r0 >= 0.0, || format!("CIR r0 = {} must be >= 0", self.r0))?;
        ensure(self.rho >= 0.0 && self.nu >= 0.0, || "CIR rho and nu must be >= 0".into())
    }
}

/// Full-truncation Euler: drift and diffusion see `max(x, 0)`, and the
/// reported state is `max(x, 0)`.
pub fn simulate_cir(params: &CirParams, grid: &TimeGrid, rng: &mut NormalStream) -> Result<SamplePath> {
    params.validate()?;
    let n = grid.n_steps;
    let dt = grid.dt();
    let sq = dt.sqrt();
    let mut path = SamplePath::with_capacity(n + 1);
    let (mut x, mut w) = (params.r0, 0.0);
    for k in 0..=n {
        if k > 0 {
            let dw = sq * rng.normal();
            let xp = x.max(0.0);
            x += (params.nu - params.alpha * xp) * dt + params.rho * xp.sqrt() * dw;
            w += dw;
        }
        path.times.push(grid.time(k));
        path.brownian.push(w);
        path.state.push(x.max(0.0));
        path.rn_weight.push(1.0);
    }
    Ok(path)
}

/// Solution `γ` of `σ γ = μ - r` for a square volatility matrix.
pub type MarketPriceOfRisk = Vec<f64>;

pub fn market_price_of_risk(vol: &[Vec<f64>], mu: &[f64], r: f64) -> Result<MarketPriceOfRisk> {
    let n = vol.len();
    if n == 0 || vol.iter().any(|row| row.len() != n) || mu.len() != n {
        return domain(format!("volatility matrix must be {n}x{n} with {n} drifts"));
    }
    let m = DMatrix::from_fn(n, n, |i, j| vol[i][j]);
    let svd = m.clone().svd(true, true);
    let (imin, &smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let smax = svd.singular_values.max();
    if smin <= 1e-12 * smax.max(f64::MIN_POSITIVE) {
        let u = svd.u.expect("left singular vectors");
        return Err(Error::Incomplete { null_direction: u.column(imin).iter().copied().collect() });
    }
    let b = nalgebra::DVector::from_fn(n, |i, _| mu[i] - r);
    let lu = m.lu();
    let x = lu.solve(&b).ok_or_else(|| Error::Incomplete { null_direction: vec![] })?;
    Ok(x.iter().copied().collect())
}

/// `μ^α - r - Σ_β σ^{αβ} γ^β` for an `N × n` volatility matrix with `N > n`,
/// `γ` being solved from the leading `n × n` block. Zero for every row
/// exactly when the extra assets admit no arbitrage.
pub fn degenerate_drift_residual(vol: &[Vec<f64>], mu: &[f64], r: f64) -> Result<Vec<f64>> {
    let big_n = vol.len();
    let n = vol.first().map_or(0, Vec::len);
    if n == 0 || big_n < n || vol.iter().any(|row| row.len() != n) || mu.len() != big_n {
        return domain("degenerate_drift_residual needs an N x n matrix with N >= n and N drifts");
    }
    let top: Vec<Vec<f64>> = vol[..n].to_vec();
    let gamma = market_price_of_risk(&top, &mu[..n], r)?;
    Ok((0..big_n)
        .map(|a| mu[a] - r - vol[a].iter().zip(&gamma).map(|(s, g)| s * g).sum::<f64>())
        .collect())
}

/// Probability that a standard Brownian motion reaches `z_star ≥ 0` by `t`,
/// `2(1 - Φ(z*/√t))`.
pub fn hit_by_time_prob(z_star: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("hit_by_time_prob needs T > 0, got {t}"));
    }
    if !(z_star >= 0.0) {
        return domain(format!("hit_by_time_prob needs z* >= 0, got {z_star}"));
    }
    Ok(2.0 * phi(-z_star / t.sqrt()))
}
