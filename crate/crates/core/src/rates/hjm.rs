use std::sync::Arc;

use crate::error::{ensure, Result};
use crate::mathcore::NormalStream;

use super::curve::DiscountCurve;

/// Volatility `σ(t, T)` of one forward-rate factor.
#[derive(Clone)]
pub enum FactorVol {
    /// `ρ`: the Ho-Lee model.
    Constant(f64),
    /// `ρ e^{-α(T-t)}`: the Vasicek (Hull-White) model.
    Exponential { rho: f64, alpha: f64 },
    Function(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for FactorVol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FactorVol::Constant(r) => write!(f, "Constant({r})"),
            FactorVol::Exponential { rho, alpha } => write!(f, "Exponential {{ rho: {rho}, alpha: {alpha} }}"),
            FactorVol::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl FactorVol {
    pub fn at(&self, t: f64, maturity: f64) -> f64 {
        match self {
            FactorVol::Constant(r) => *r,
            FactorVol::Exponential { rho, alpha } => rho * (-alpha * (maturity - t)).exp(),
            FactorVol::Function(f) => f(t, maturity),
        }
    }
}

/// Initial forward curve with factor volatilities; drifts are never
/// supplied, they follow from the volatilities.
#[derive(Debug, Clone)]
pub struct HjmSurface {
    pub initial: DiscountCurve,
    pub factors: Vec<FactorVol>,
}

/// Simulation times `t_k = k·dt`, `k ≤ n_steps`, and maturities
/// `T_j = j·dt`, `j ≤ n_maturities`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjmGrid {
    pub dt: f64,
    pub n_steps: usize,
    pub n_maturities: usize,
}

impl HjmGrid {
    pub fn new(dt: f64, horizon: f64, last_maturity: f64) -> Result<Self> {
        ensure(dt > 0.0 && horizon >= 0.0 && last_maturity >= horizon, || {
            "HJM grid needs dt > 0 and horizon <= last maturity".into()
        })?;
        let steps = (horizon / dt).round() as usize;
        let mats = (last_maturity / dt).round() as usize;
        Ok(Self { dt, n_steps: steps, n_maturities: mats })
    }

    pub fn time(&self, k: usize) -> f64 {
        self.dt * k as f64
    }

    /// Grid index of a date, which must sit on the grid.
    pub fn index(&self, t: f64) -> Result<usize> {
        let i = (t / self.dt).round();
        ensure((i * self.dt - t).abs() <= 1e-9 * t.abs().max(1.0), || format!("t = {t} is not on the grid"))?;
        Ok(i as usize)
    }
}

/// One forward-curve path. `forwards[k][j - k]` is the forward for
/// `[T_j, T_{j+1})` seen at `t_k`.
#[derive(Debug, Clone)]
pub struct HjmPath {
    pub grid: HjmGrid,
    forwards: Vec<Vec<f64>>,
    log_bank: Vec<f64>,
}

impl HjmPath {
    pub fn forward(&self, k: usize, j: usize) -> f64 {
        self.forwards[k][j - k]
    }

    /// `r_{t_k} = f(t_k, t_k)`.
    pub fn short_rate(&self, k: usize) -> f64 {
        self.forwards[k][0]
    }

    /// `P(t_k, T_m) = exp(-dt Σ_{j=k}^{m-1} f(t_k, T_j))`.
    pub fn bond_price(&self, k: usize, m: usize) -> f64 {
        let h = self.grid.dt;
        (-h * self.forwards[k][..m - k].iter().sum::<f64>()).exp()
    }

    /// Cash account `B_{t_k} = exp(dt Σ_{i<k} r_{t_i})`.
    pub fn bank(&self, k: usize) -> f64 {
        self.log_bank[k].exp()
    }
}

/// Discrete bond volatility `Σ(t_k, T_m) = -dt Σ_{j=k+1}^{m-1} σ(t_k, T_j)`
/// for each factor.
fn discrete_bond_vol(surface: &HjmSurface, grid: &HjmGrid, k: usize, m: usize) -> Vec<f64> {
    let t = grid.time(k);
    surface
        .factors
        .iter()
        .map(|f| -grid.dt * (k + 1..m).map(|j| f.at(t, grid.time(j))).sum::<f64>())
        .collect()
}

/// Brownian drift `Σ(t_k, τ)·dt` per step and factor that turns the
/// risk-neutral driver `W̃` into the `τ`-forward driver `Ŵ = W̃ - ∫Σ(s,τ) ds`.
///
/// For constant `σ = ρ` this is `-ρ(τ - t_{k+1}) dt`, so the forward-rate
/// drift moves by `-ρ²(τ - t) dt`.
pub fn forward_measure_shift(surface: &HjmSurface, grid: &HjmGrid, expiry: f64) -> Result<Vec<Vec<f64>>> {
    let m = grid.index(expiry)?;
    ensure(m <= grid.n_maturities, || "forward measure date beyond the maturity grid".into())?;
    Ok((0..grid.n_steps)
        .map(|k| discrete_bond_vol(surface, grid, k, m).into_iter().map(|s| s * grid.dt).collect())
        .collect())
}

/// Forward curve evolution `df = σ(dW̃ - Σ dt)` under the risk-neutral
/// measure, or under a shifted measure when `shift` (from
/// [`forward_measure_shift`]) is given.
///
/// The drift increment uses the discrete form `½dt²[(Σ_{l≤j} σ_l)² - (Σ_{l<j} σ_l)²]`,
/// which makes `P(t_k, T_m)/B_{t_k}` an exact martingale on the grid.
pub fn hjm_simulate(
    surface: &HjmSurface,
    grid: &HjmGrid,
    rng: &mut NormalStream,
    shift: Option<&[Vec<f64>]>,
) -> Result<HjmPath> {
    ensure(!surface.factors.is_empty(), || "HJM needs at least one factor".into())?;
    ensure(grid.n_maturities > grid.n_steps, || "maturity grid must extend past the horizon".into())?;
    if let Some(s) = shift {
        ensure(s.len() >= grid.n_steps, || "shift must cover every step".into())?;
    }
    let h = grid.dt;
    let sq = h.sqrt();
    let m_max = grid.n_maturities;
    let n_f = surface.factors.len();
    let initial: Vec<f64> = (0..m_max)
        .map(|j| {
            let (a, b) = (grid.time(j), grid.time(j + 1));
            -(surface.initial.discount(b).ln() - surface.initial.discount(a).ln()) / h
        })
        .collect();
    let mut forwards = Vec::with_capacity(grid.n_steps + 1);
    forwards.push(initial);
    let mut log_bank = vec![0.0; grid.n_steps + 1];
    let mut dw = vec![0.0; n_f];
    let mut cum = vec![0.0; n_f];
    for k in 0..grid.n_steps {
        let t = grid.time(k);
        for (i, d) in dw.iter_mut().enumerate() {
            *d = sq * rng.normal() + shift.map_or(0.0, |s| s[k][i]);
        }
        let prev = &forwards[k];
        log_bank[k + 1] = log_bank[k] + h * prev[0];
        cum.iter_mut().for_each(|c| *c = 0.0);
        let mut next = Vec::with_capacity(m_max - k - 1);
        for j in k + 1..m_max {
            let tj = grid.time(j);
            let mut drift = 0.0;
            let mut shock = 0.0;
            for (i, factor) in surface.factors.iter().enumerate() {
                let s = factor.at(t, tj);
                let before = cum[i];
                cum[i] += s;
                drift += 0.5 * h * h * (cum[i] * cum[i] - before * before);
                shock += s * dw[i];
            }
            next.push(prev[j - k] + drift + shock);
        }
        forwards.push(next);
    }
    Ok(HjmPath { grid: *grid, forwards, log_bank })
}
