//! Discrete delta hedging of Black-Scholes claims: the self-financing
//! ledger, replication error statistics, the binary-option pathology near
//! expiry, early exercise against the issuer, and rolling payments forward.

use serde::{Deserialize, Serialize};

use crate::analytic::{bs_greeks, bs_price, OptionKind, PriceSpec};
use crate::error::{domain, ensure, Result};
use crate::mathcore::{monte_carlo, McEstimate, NormalStream};
use crate::processes::{simulate_gbm, DriftShift, GbmParams, TimeGrid};
use crate::rates::DiscountCurve;

/// Hedge ratios are clipped to this magnitude.
pub const PHI_CLIP: f64 = 1e6;
/// Binary paths are checked for near-strike divergence over this many final rebalances.
pub const PATHOLOGY_WINDOW: usize = 5;

/// One hedged path: holdings chosen at each rebalance time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeLedger {
    pub times: Vec<f64>,
    pub spot: Vec<f64>,
    /// Stock held over `[t_k, t_{k+1})`.
    pub phi: Vec<f64>,
    /// Cash bonds held over `[t_k, t_{k+1})`.
    pub psi: Vec<f64>,
    /// Portfolio value at `t_k` before rebalancing (the option premium at 0).
    pub value: Vec<f64>,
    /// External cash injected at each rebalance; zero when self-financing.
    pub cash_flow: Vec<f64>,
    /// Terminal portfolio value minus the claim payoff.
    pub replication_error: f64,
    pub clipped: bool,
    pub pathology: bool,
}

/// Replication error statistics over many paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeSummary {
    pub kind: OptionKind,
    pub n_rebalances: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub premium: f64,
    pub error: McEstimate,
    pub max_abs_phi: f64,
    pub clipped_paths: usize,
    pub pathology_paths: usize,
}

/// Rebalances the delta hedge along a given spot path on a uniform grid
/// from `spec.t` to `spec.maturity`. The path starts at `spots[0]`, which
/// takes the place of `spec.spot`.
///
/// A binary path is flagged when, within the last [`PATHOLOGY_WINDOW`]
/// rebalances, the spot lies within one local standard deviation of the
/// strike (`|d₋| ≤ 1`): there the hedge ratio grows like `1/√(T - t)`.
pub fn hedge_along(kind: OptionKind, spec: &PriceSpec, spots: &[f64]) -> Result<HedgeLedger> {
    spec.validate()?;
    ensure(spec.tau() > 0.0, || "hedging needs T > t".into())?;
    let n = spots.len().checked_sub(1).filter(|&n| n >= 1).ok_or_else(|| {
        crate::Error::Domain("hedge path needs at least two spot values".into())
    })?;
    let dt = spec.tau() / n as f64;
    let bond = |t: f64| (spec.rate * (t - spec.t)).exp();
    let mut ledger = HedgeLedger {
        times: Vec::with_capacity(n + 1),
        spot: spots.to_vec(),
        phi: Vec::with_capacity(n),
        psi: Vec::with_capacity(n),
        value: Vec::with_capacity(n + 1),
        cash_flow: Vec::with_capacity(n),
        replication_error: 0.0,
        clipped: false,
        pathology: false,
    };
    let premium = bs_price(kind, &PriceSpec { spot: spots[0], ..*spec })?;
    let (mut phi, mut psi) = (0.0, 0.0);
    for k in 0..n {
        let t = spec.t + dt * k as f64;
        let s = spots[k];
        let value = if k == 0 { premium } else { phi * s + psi * bond(t) };
        let local = PriceSpec { spot: s, t, ..*spec };
        let mut delta = bs_greeks(kind, &local)?.delta;
        if delta.abs() > PHI_CLIP {
            delta = delta.signum() * PHI_CLIP;
            ledger.clipped = true;
        }
        if kind == OptionKind::Binary && k + PATHOLOGY_WINDOW >= n {
            let v = spec.sigma * (spec.maturity - t).sqrt();
            let d_minus = ((s / spec.strike).ln() + spec.rate * (spec.maturity - t)) / v - 0.5 * v;
            if d_minus.abs() <= 1.0 {
                ledger.pathology = true;
            }
        }
        let new_psi = (value - delta * s) / bond(t);
        let after = delta * s + new_psi * bond(t);
        ledger.times.push(t);
        ledger.value.push(value);
        ledger.cash_flow.push(after - value);
        ledger.phi.push(delta);
        ledger.psi.push(new_psi);
        phi = delta;
        psi = new_psi;
    }
    let s_end = spots[n];
    let terminal = phi * s_end + psi * bond(spec.maturity);
    ledger.times.push(spec.maturity);
    ledger.value.push(terminal);
    ledger.replication_error = terminal - kind.payoff(s_end, spec.strike);
    ledger.pathology |= ledger.clipped;
    Ok(ledger)
}

fn gbm_spots(spec: &PriceSpec, drift: f64, n: usize, rng: &mut NormalStream) -> Result<Vec<f64>> {
    let params = GbmParams { s0: spec.spot, sigma: spec.sigma, mu: drift - 0.5 * spec.sigma * spec.sigma };
    let grid = TimeGrid::new(spec.t, spec.maturity, n)?;
    Ok(simulate_gbm(&params, &grid, DriftShift::None, rng)?.state)
}

fn hedge_stream(kind: OptionKind, spec: &PriceSpec, drift: f64, n: usize, rng: &mut NormalStream) -> Result<HedgeLedger> {
    let spots = gbm_spots(spec, drift, n, rng)?;
    hedge_along(kind, spec, &spots)
}

/// Ledger of path `path` from [`run_delta_hedge_with_drift`] with the same
/// arguments.
pub fn hedge_path(
    kind: OptionKind,
    spec: &PriceSpec,
    drift: f64,
    n_rebalances: usize,
    seed: u64,
    path: u64,
) -> Result<HedgeLedger> {
    hedge_stream(kind, spec, drift, n_rebalances, &mut NormalStream::new(seed, path))
}

/// Delta-hedges `n_paths` risk-neutral GBM paths with `n_rebalances` equal
/// rebalancing intervals.
pub fn run_delta_hedge(
    kind: OptionKind,
    spec: &PriceSpec,
    n_rebalances: usize,
    seed: u64,
    n_paths: usize,
) -> Result<HedgeSummary> {
    run_delta_hedge_with_drift(kind, spec, spec.rate, n_rebalances, seed, n_paths)
}

/// As [`run_delta_hedge`] with the stock growing at `drift` instead of `r`.
pub fn run_delta_hedge_with_drift(
    kind: OptionKind,
    spec: &PriceSpec,
    drift: f64,
    n_rebalances: usize,
    seed: u64,
    n_paths: usize,
) -> Result<HedgeSummary> {
    ensure(n_rebalances >= 1 && n_paths >= 2, || "need n_rebalances >= 1 and n_paths >= 2".into())?;
    let ledgers = monte_carlo(seed, n_paths, |rng, _| {
        let l = hedge_stream(kind, spec, drift, n_rebalances, rng)?;
        Ok((l.replication_error, l.phi.iter().fold(0.0f64, |m, p| m.max(p.abs())), l.clipped, l.pathology))
    });
    let rows = ledgers.into_iter().collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = rows.iter().map(|r| r.0).collect();
    Ok(HedgeSummary {
        kind,
        n_rebalances,
        n_paths,
        seed,
        premium: bs_price(kind, spec)?,
        error: McEstimate::from_samples(&errors),
        max_abs_phi: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        clipped_paths: rows.iter().filter(|r| r.2).count(),
        pathology_paths: rows.iter().filter(|r| r.3).count(),
    })
}

/// Risk-neutral GBM path from `spec.spot` at `spec.t` conditioned to end at
/// `terminal` at `T` (a Brownian bridge in log-price).
pub fn pinned_spot_path(spec: &PriceSpec, terminal: f64, n: usize, rng: &mut NormalStream) -> Result<Vec<f64>> {
    spec.validate()?;
    ensure(terminal > 0.0 && spec.sigma > 0.0, || "pinned path needs terminal > 0 and sigma > 0".into())?;
    let grid = TimeGrid::new(spec.t, spec.maturity, n)?;
    let tau = spec.tau();
    let nu = spec.rate - 0.5 * spec.sigma * spec.sigma;
    let target = ((terminal / spec.spot).ln() - nu * tau) / spec.sigma;
    let sq = grid.dt().sqrt();
    let mut w = vec![0.0; n + 1];
    for k in 1..=n {
        w[k] = w[k - 1] + sq * rng.normal();
    }
    let w_end = w[n];
    Ok((0..=n)
        .map(|k| {
            if k == n {
                return terminal;
            }
            let t = grid.time(k) - spec.t;
            let bridge = w[k] - t / tau * (w_end - target);
            spec.spot * (spec.sigma * bridge + nu * t).exp()
        })
        .collect())
}

/// Issuer's position when the holder of an American call exercises at
/// `exercise_time` whenever the call is in the money there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExerciseSurplus {
    pub exercised_paths: usize,
    pub n_paths: usize,
    /// Smallest hedge value minus intrinsic payout over exercised paths.
    pub min_surplus: f64,
    pub mean_surplus: f64,
}

/// The issuer delta-hedges the European call (which has the same value as
/// the American call without dividends) and pays `S - k` on early exercise.
pub fn early_exercise_surplus(
    spec: &PriceSpec,
    exercise_time: f64,
    n_rebalances: usize,
    seed: u64,
    n_paths: usize,
) -> Result<ExerciseSurplus> {
    spec.validate()?;
    ensure(exercise_time > spec.t && exercise_time < spec.maturity, || "exercise must fall inside (t, T)".into())?;
    let stop = ((exercise_time - spec.t) / spec.tau() * n_rebalances as f64).round() as usize;
    ensure(stop >= 1 && stop < n_rebalances, || "exercise time too close to the ends of the grid".into())?;
    let rows = monte_carlo(seed, n_paths, |rng, _| -> Result<Option<f64>> {
        let spots = gbm_spots(spec, spec.rate, n_rebalances, rng)?;
        let s = spots[stop];
        if s <= spec.strike {
            return Ok(None);
        }
        let l = hedge_along(OptionKind::Call, spec, &spots)?;
        Ok(Some(l.value[stop] - (s - spec.strike)))
    });
    let surpluses: Vec<f64> = rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    if surpluses.is_empty() {
        return domain("no path was in the money at the exercise time");
    }
    Ok(ExerciseSurplus {
        exercised_paths: surpluses.len(),
        n_paths,
        min_surplus: surpluses.iter().copied().fold(f64::INFINITY, f64::min),
        mean_surplus: surpluses.iter().sum::<f64>() / surpluses.len() as f64,
    })
}

/// Single amount at `horizon` equivalent to payments `(T_i, X_i)`:
/// `Σ X_i / P(T_i, horizon)` with forward bond prices from `curve`.
pub fn rollup_payments(payments: &[(f64, f64)], curve: &DiscountCurve, horizon: f64) -> Result<f64> {
    let p_end = curve.discount(horizon);
    let mut total = 0.0;
    for (i, &(t, x)) in payments.iter().enumerate() {
        if t > horizon {
            return domain(format!("payment {i} at {t} falls after the horizon {horizon}"));
        }
        total += x * curve.discount(t) / p_end;
    }
    Ok(total)
}
