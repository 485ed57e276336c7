//! Finite differences for the backward diffusion `½ D(y,t) ∂²Y/∂y² + ∂Y/∂t = 0`
//! obtained from the pricing equation by discounting and a change of
//! variables, plus Gauss-Hermite pricing in the quadratic-Brownian model.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure, Error, Result};
use crate::mathcore::{adaptive_simpson, gauss_hermite, GaussHermite};

pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type PayoffFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Short rate as a function of time.
#[derive(Clone)]
pub enum RateFn {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl RateFn {
    /// `∫_a^b r(s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            RateFn::Constant(r) => r * (b - a),
            RateFn::Function(f) => adaptive_simpson(&|s| f(s), a, b, 1e-13),
        }
    }
}

/// Spatial extent (`n_x` intervals) and number of time steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub n_t: usize,
}

impl PdeGrid {
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.x_min + self.dx() * j as f64
    }

    fn validate(&self) -> Result<()> {
        ensure(self.x_max > self.x_min && self.n_x >= 2 && self.n_t >= 1, || {
            format!("grid needs x_max > x_min, n_x >= 2, n_t >= 1, got {self:?}")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ftcs,
    #[serde(alias = "crank-nicolson")]
    Cn,
}

/// Edge treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Hold the terminal payoff at both edges. In price terms this is the
    /// discounted intrinsic value, e.g. `z - k e^{-r(T-t)}` for a deep call.
    Payoff,
    /// Zero curvature at both edges.
    Linear,
}

/// Terminal-value problem on `[t0, T]` for `Y`, with `V = e^{-∫_t^T r} Y` and
/// `z = e^{-∫_t^T r} y`.
#[derive(Clone)]
pub struct DiffusionProblem {
    pub diffusion: SpaceTimeFn,
    pub payoff: PayoffFn,
    pub rate: RateFn,
    pub t0: f64,
    pub maturity: f64,
    pub boundary: Boundary,
}

impl DiffusionProblem {
    pub fn growth(&self, t: f64) -> f64 {
        self.rate.integral(t, self.maturity).exp()
    }
}

/// Rewrites `∂V/∂t + ½σ²z²∂²V/∂z² + r z ∂V/∂z - rV = 0` as a driftless
/// diffusion in `y = e^{∫_t^T r} z` with `D = y² σ²(e^{-∫_t^T r} y, t)`.
pub fn transform_bs_to_diffusion(
    sigma: SpaceTimeFn,
    rate: RateFn,
    payoff: PayoffFn,
    t0: f64,
    maturity: f64,
) -> Result<DiffusionProblem> {
    ensure(maturity > t0, || "need T > t0".into())?;
    let r = rate.clone();
    let diffusion: SpaceTimeFn = Arc::new(move |y: f64, t: f64| {
        let z = y * (-r.integral(t, maturity)).exp();
        let s = sigma(z, t);
        y * y * s * s
    });
    Ok(DiffusionProblem { diffusion, payoff, rate, t0, maturity, boundary: Boundary::Payoff })
}

/// Largest explicit step for `∂u/∂t = d ∂²u/∂x²`: `dx²/(2d)`.
pub fn ftcs_stability_limit(d: f64, dx: f64) -> f64 {
    dx * dx / (2.0 * d)
}

/// Explicit-scheme growth factor of the Fourier mode `e^{ikx}`.
pub fn ftcs_amplification(d: f64, dt: f64, dx: f64, k: f64) -> f64 {
    1.0 - 4.0 * d * dt / (dx * dx) * (0.5 * k * dx).sin().powi(2)
}

/// Kernel of `½ ∂²K/∂y² = ∂K/∂τ`: the centred Gaussian with variance `τ`.
pub fn heat_kernel(y: f64, tau: f64) -> f64 {
    (-y * y / (2.0 * tau)).exp() / (2.0 * std::f64::consts::PI * tau).sqrt()
}

/// `Y` on the whole grid, earliest time first.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub times: Vec<f64>,
    pub nodes: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// `e^{∫_t^T r}` at each time.
    pub growth: Vec<f64>,
}

impl PdeSolution {
    /// `Y(y, t_n)` by linear interpolation.
    pub fn interpolate(&self, n: usize, y: f64) -> Result<f64> {
        let x0 = self.nodes[0];
        let h = self.nodes[1] - x0;
        let last = self.nodes.len() - 1;
        let pos = (y - x0) / h;
        if !(pos >= 0.0 && pos <= last as f64) {
            return domain(format!("y = {y} outside the grid [{x0}, {}]", self.nodes[last]));
        }
        let j = (pos.floor() as usize).min(last - 1);
        let w = pos - j as f64;
        Ok((1.0 - w) * self.values[n][j] + w * self.values[n][j + 1])
    }

    /// Option value `V(z, t_n)` in price coordinates.
    pub fn price_at(&self, n: usize, z: f64) -> Result<f64> {
        let g = self.growth[n];
        Ok(self.interpolate(n, z * g)? / g)
    }

    /// Value at the initial time.
    pub fn price(&self, z: f64) -> Result<f64> {
        self.price_at(0, z)
    }

    /// CSV `t,z,V` for every grid point.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "z", "V"])?;
        for (n, t) in self.times.iter().enumerate() {
            let g = self.growth[n];
            for (j, y) in self.nodes.iter().enumerate() {
                w.write_record(&[t.to_string(), (y / g).to_string(), (self.values[n][j] / g).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Marches `Y` from the payoff at `T` back to `t0`.
///
/// FTCS refuses any grid with `2 (D/2) Δt / Δy² > 1` anywhere on the grid;
/// Crank-Nicolson evaluates `D` at half steps and solves each step with the
/// Thomas algorithm.
pub fn solve_pde(problem: &DiffusionProblem, grid: &PdeGrid, scheme: Scheme) -> Result<PdeSolution> {
    grid.validate()?;
    ensure(problem.maturity > problem.t0, || "need T > t0".into())?;
    let n_x = grid.n_x;
    let dx = grid.dx();
    let dt = (problem.maturity - problem.t0) / grid.n_t as f64;
    let nodes: Vec<f64> = (0..=n_x).map(|j| grid.node(j)).collect();
    let times: Vec<f64> = (0..=grid.n_t)
        .map(|n| if n == grid.n_t { problem.maturity } else { problem.t0 + dt * n as f64 })
        .collect();
    let d = &problem.diffusion;

    if scheme == Scheme::Ftcs {
        let mut d_max = 0.0f64;
        for &t in &times[1..] {
            for &y in &nodes {
                d_max = d_max.max(0.5 * d(y, t));
            }
        }
        let ratio = 2.0 * d_max * dt / (dx * dx);
        if ratio > 1.0 {
            return Err(Error::Unstable { ratio, dt_limit: ftcs_stability_limit(d_max, dx) });
        }
    }

    let mut values = vec![Vec::new(); grid.n_t + 1];
    values[grid.n_t] = nodes.iter().map(|&y| (problem.payoff)(y)).collect();
    let left = values[grid.n_t][0];
    let right = values[grid.n_t][n_x];
    let inv_dx2 = 1.0 / (dx * dx);

    // Thomas workspace
    let m = n_x - 1;
    let (mut a, mut b, mut c, mut rhs) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);

    for n in (0..grid.n_t).rev() {
        let next = &values[n + 1];
        let mut cur = vec![0.0; n_x + 1];
        match scheme {
            Scheme::Ftcs => {
                let t = times[n + 1];
                for j in 1..n_x {
                    let lap = (next[j + 1] - 2.0 * next[j] + next[j - 1]) * inv_dx2;
                    cur[j] = next[j] + dt * 0.5 * d(nodes[j], t) * lap;
                }
            }
            Scheme::Cn => {
                let t_mid = 0.5 * (times[n] + times[n + 1]);
                for j in 1..n_x {
                    let lam = 0.25 * dt * d(nodes[j], t_mid) * inv_dx2;
                    let i = j - 1;
                    a[i] = -lam;
                    b[i] = 1.0 + 2.0 * lam;
                    c[i] = -lam;
                    rhs[i] = lam * next[j - 1] + (1.0 - 2.0 * lam) * next[j] + lam * next[j + 1];
                }
                match problem.boundary {
                    Boundary::Payoff => {
                        rhs[0] -= a[0] * left;
                        rhs[m - 1] -= c[m - 1] * right;
                    }
                    Boundary::Linear => {
                        // Y_0 = 2Y_1 - Y_2 and Y_N = 2Y_{N-1} - Y_{N-2}
                        b[0] += 2.0 * a[0];
                        c[0] -= a[0];
                        b[m - 1] += 2.0 * c[m - 1];
                        a[m - 1] -= c[m - 1];
                    }
                }
                a[0] = 0.0;
                c[m - 1] = 0.0;
                let x = thomas(&a, &b, &c, &rhs);
                cur[1..n_x].copy_from_slice(&x);
            }
        }
        match problem.boundary {
            Boundary::Payoff => {
                cur[0] = left;
                cur[n_x] = right;
            }
            Boundary::Linear => {
                cur[0] = 2.0 * cur[1] - cur[2];
                cur[n_x] = 2.0 * cur[n_x - 1] - cur[n_x - 2];
            }
        }
        values[n] = cur;
    }

    let growth = times.iter().map(|&t| problem.growth(t)).collect();
    Ok(PdeSolution { times, nodes, values, growth })
}

/// Tridiagonal solve; `a[0]` and `c[m-1]` are ignored.
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let m = b.len();
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..m {
        let den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = dp[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Grid in `y` spanning `±width` log-standard-deviations around the forward
/// `spot · e^{∫r}`, with `n_x` intervals and `n_t` steps.
pub fn lognormal_grid(spot: f64, growth: f64, sigma: f64, tau: f64, width: f64, n_x: usize, n_t: usize) -> PdeGrid {
    let centre = spot * growth;
    let spread = width * sigma * tau.sqrt();
    PdeGrid { x_min: centre * (-spread).exp(), x_max: centre * spread.exp(), n_x, n_t }
}

/// Black-Scholes problem with constant coefficients.
pub fn black_scholes_problem(sigma: f64, rate: f64, payoff: PayoffFn, t0: f64, maturity: f64) -> Result<DiffusionProblem> {
    transform_bs_to_diffusion(Arc::new(move |_, _| sigma), RateFn::Constant(rate), payoff, t0, maturity)
}

/// Both sign branches of the quadratic-model expectation and their mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticModelPrice {
    pub value: f64,
    pub plus_branch: f64,
    pub minus_branch: f64,
}

fn hermite_200() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(200))
}

/// Price at `(z, t)` of the claim `f(S_T)` when `S_t = S_0 + α(W_t² - t)`
/// and rates are zero.
///
/// The Brownian level behind `z` is known only up to sign; both signs are
/// integrated, and they agree because the rule is symmetric.
pub fn quadratic_model_price(
    s0: f64,
    alpha: f64,
    z: f64,
    t: f64,
    maturity: f64,
    f: &dyn Fn(f64) -> f64,
) -> Result<QuadraticModelPrice> {
    ensure(alpha > 0.0, || format!("alpha = {alpha} must be positive"))?;
    ensure(t >= 0.0 && t <= maturity, || format!("need 0 <= t <= T, got t = {t}, T = {maturity}"))?;
    ensure(maturity < s0 / alpha, || format!("need T < S0/alpha = {}", s0 / alpha))?;
    let level = z - s0 + alpha * t;
    ensure(level >= 0.0, || format!("z = {z} is unreachable at t = {t}: z - S0 + alpha t < 0"))?;
    let tau = maturity - t;
    if tau == 0.0 {
        let v = f(z);
        return Ok(QuadraticModelPrice { value: v, plus_branch: v, minus_branch: v });
    }
    let c = (level / (alpha * tau)).sqrt();
    let rule = hermite_200();
    let branch = |eps: f64| rule.expectation(|y| f(z + alpha * tau * (y * y + 2.0 * eps * y * c - 1.0)));
    let plus = branch(1.0);
    let minus = branch(-1.0);
    Ok(QuadraticModelPrice { value: 0.5 * (plus + minus), plus_branch: plus, minus_branch: minus })
}

/// The same model as a diffusion problem in `z` with zero rates:
/// `2α[z - S_0 + αt] ∂²V/∂z² + ∂V/∂t = 0`.
pub fn quadratic_model_problem(s0: f64, alpha: f64, t0: f64, maturity: f64, payoff: PayoffFn) -> DiffusionProblem {
    DiffusionProblem {
        diffusion: Arc::new(move |z, t| (4.0 * alpha * (z - s0 + alpha * t)).max(0.0)),
        payoff,
        rate: RateFn::Constant(0.0),
        t0,
        maturity,
        boundary: Boundary::Linear,
    }
}
