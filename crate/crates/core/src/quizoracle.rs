//! Exact answers to a handful of probability puzzles, each paired with an
//! independent verifier (enumeration, a second recursion, or Monte Carlo).

use nalgebra::{Matrix3, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::mathcore::{monte_carlo, McEstimate};

/// A closed form next to its verifier.
///
/// `statistical` verifiers pass within three standard errors; deterministic
/// ones report a numerical tolerance in `verifier_error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizResult {
    pub name: String,
    pub closed_form: f64,
    /// Exact value as `p/q` when the answer is rational.
    pub exact: Option<String>,
    pub verifier_estimate: f64,
    pub verifier_error: f64,
    pub statistical: bool,
}

impl QuizResult {
    pub fn passes(&self) -> bool {
        let gap = (self.closed_form - self.verifier_estimate).abs();
        if self.statistical {
            gap <= 3.0 * self.verifier_error
        } else {
            gap <= self.verifier_error
        }
    }
}

fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `P(two-child family has a girl | it has a boy)` by enumeration.
pub fn boy_girl_conditional() -> BigRational {
    let families = [(true, true), (true, false), (false, true), (false, false)];
    let with_boy: Vec<_> = families.iter().filter(|(a, b)| *a || *b).collect();
    let with_girl = with_boy.iter().filter(|(a, b)| !*a || !*b).count();
    ratio(with_girl as i64, with_boy.len() as i64)
}

/// `P(two-child family has a girl)` with no conditioning.
pub fn girl_presence() -> BigRational {
    ratio(3, 4)
}

pub fn boy_girl_quiz(seed: u64, n_families: usize) -> QuizResult {
    let draws = monte_carlo(seed, n_families, |rng, _| {
        let (a, b) = (rng.bit(), rng.bit());
        (a || b).then_some(if !a || !b { 1.0 } else { 0.0 })
    });
    let hits: Vec<f64> = draws.into_iter().flatten().collect();
    let est = McEstimate::from_samples(&hits);
    let exact = boy_girl_conditional();
    QuizResult {
        name: "girl given a boy".into(),
        closed_form: to_f64(&exact),
        exact: Some(exact.to_string()),
        verifier_estimate: est.mean,
        verifier_error: est.std_error,
        statistical: true,
    }
}

/// Expected fair-coin tosses until `k` heads in a row, from the absorbing
/// chain on the current run length.
pub fn expected_tosses_for_run(k: u32) -> Result<BigRational> {
    ensure(k >= 1, || format!("run length k = {k} must be at least 1"))?;
    // E_i = alpha_i + beta_i * E_0, with E_k = 0.
    let half = ratio(1, 2);
    let (mut alpha, mut beta) = (BigRational::zero(), BigRational::zero());
    for _ in 0..k {
        alpha = BigRational::one() + &half * &alpha;
        beta = &half * &beta + &half;
    }
    Ok(alpha / (BigRational::one() - beta))
}

/// Sums the survival probabilities `Q(n) = P(no run of k by toss n)` using
/// `Q(n) = Q(n-1) - Q(n-k-1) / 2^{k+1}`.
pub fn expected_tosses_by_survival(k: u32) -> Result<f64> {
    ensure((1..=24).contains(&k), || format!("survival sum supports 1 <= k <= 24, got {k}"))?;
    let k = k as usize;
    let scale = 0.5f64.powi(k as i32 + 1);
    let mut q: Vec<f64> = vec![1.0; k];
    q.push(1.0 - 0.5f64.powi(k as i32));
    let mut total: f64 = q.iter().sum();
    let mut n = k + 1;
    loop {
        let next = q[n - 1] - q[n - k - 1] * scale;
        q.push(next);
        total += next;
        n += 1;
        if next < 1e-18 * total {
            return Ok(total);
        }
    }
}

pub fn tosses_quiz(k: u32) -> Result<QuizResult> {
    let exact = expected_tosses_for_run(k)?;
    let closed = to_f64(&exact);
    Ok(QuizResult {
        name: format!("tosses for {k} heads in a row"),
        closed_form: closed,
        exact: Some(exact.to_string()),
        verifier_estimate: expected_tosses_by_survival(k)?,
        verifier_error: 1e-9 * closed,
        statistical: false,
    })
}

/// Both routes for the probability that Brownian motion with drift `m`
/// from 0 hits `+a` before `-b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitProbability {
    pub closed_form: f64,
    /// Present when `a / b` is a ratio of small integers.
    pub recursive: Option<f64>,
    pub commensurate: bool,
}

/// Scale-function closed form, with the driftless limit `b / (a + b)`.
pub fn hit_closed_form(a: f64, b: f64, m: f64) -> Result<f64> {
    ensure(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(), || {
        format!("levels must be positive, got a = {a}, b = {b}")
    })?;
    ensure(m.is_finite(), || "drift must be finite".into())?;
    if m == 0.0 {
        return Ok(b / (a + b));
    }
    // Scaled by the larger exponential so neither side overflows.
    let s = 2.0 * m;
    Ok(if m > 0.0 {
        (-s * b).exp_m1() / (-s * (a + b)).exp_m1()
    } else {
        (s * a).exp() * (s * b).exp_m1() / (s * (a + b)).exp_m1()
    })
}

/// Probability of reaching `+x` before `-x`.
fn symmetric_exit(x: f64, m: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * m * x).exp())
}

/// Recursive route for levels `p * unit` and `q * unit`.
///
/// From a symmetric exit at the nearer level, the process either finishes or
/// restarts with shifted levels of the same total, so the states `(p, q)`
/// form a finite chain of affine maps `H = c + d * H(next)`; a revisited
/// state is resolved at its fixed point.
pub fn hit_recursive(p: u64, q: u64, unit: f64, m: f64) -> Result<f64> {
    ensure(p > 0 && q > 0 && unit > 0.0, || "recursive route needs positive integer levels".into())?;
    let mut chain: Vec<((u64, u64), f64, f64)> = Vec::new();
    let (mut p, mut q) = (p, q);
    let tail = loop {
        if p == q {
            break symmetric_exit(p as f64 * unit, m);
        }
        if let Some(j) = chain.iter().position(|(s, _, _)| *s == (p, q)) {
            let (c, d) = chain[j..].iter().rev().fold((0.0, 1.0), |(c, d), &(_, ci, di)| (ci + di * c, di * d));
            let fixed = c / (1.0 - d);
            chain.truncate(j);
            break fixed;
        }
        if p < q {
            let s = symmetric_exit(p as f64 * unit, m);
            chain.push(((p, q), s, 1.0 - s));
            (p, q) = (2 * p, q - p);
        } else {
            let s = symmetric_exit(q as f64 * unit, m);
            chain.push(((p, q), 0.0, s));
            (p, q) = (p - q, 2 * q);
        }
    };
    Ok(chain.iter().rev().fold(tail, |h, &(_, c, d)| c + d * h))
}

/// Integers `(p, q)` with `a / b = p / q` to relative precision `1e-12` and
/// `p + q <= max_total`, found from the continued fraction of `a / b`.
fn commensurate(a: f64, b: f64, max_total: u64) -> Option<(u64, u64)> {
    let target = a / b;
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut x = target;
    for _ in 0..64 {
        let ai = x.floor();
        if ai > max_total as f64 {
            return None;
        }
        let ai = ai as u64;
        (h0, h1) = (h1, ai.checked_mul(h1)?.checked_add(h0)?);
        (k0, k1) = (k1, ai.checked_mul(k1)?.checked_add(k0)?);
        if h1 + k1 > max_total {
            return None;
        }
        if ((h1 as f64 / k1 as f64) - target).abs() <= 1e-12 * target {
            return Some((h1, k1));
        }
        let frac = x - ai as f64;
        if frac == 0.0 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

/// Probability of hitting `+a` before `-b` under drift `m`.
pub fn hit_a_before_b(a: f64, b: f64, m: f64) -> Result<HitProbability> {
    let closed_form = hit_closed_form(a, b, m)?;
    let recursive = match commensurate(a, b, 10_000) {
        Some((p, q)) => Some(hit_recursive(p, q, a / p as f64, m)?),
        None => None,
    };
    Ok(HitProbability { closed_form, recursive, commensurate: recursive.is_some() })
}

pub fn hit_quiz(a: f64, b: f64, m: f64) -> Result<QuizResult> {
    let h = hit_a_before_b(a, b, m)?;
    let exact = (m == 0.0 && a.fract() == 0.0 && b.fract() == 0.0)
        .then(|| ratio(b as i64, (a + b) as i64).to_string());
    Ok(QuizResult {
        name: format!("hit {a} before -{b} with drift {m}"),
        closed_form: h.closed_form,
        exact,
        verifier_estimate: h.recursive.unwrap_or(f64::NAN),
        verifier_error: 1e-12,
        statistical: false,
    })
}

/// Range of `corr(X, Z)` consistent with `corr(X, Y) = rho12` and
/// `corr(Y, Z) = rho23`.
pub fn correlation_bounds(rho12: f64, rho23: f64) -> Result<(f64, f64)> {
    ensure((-1.0..=1.0).contains(&rho12) && (-1.0..=1.0).contains(&rho23), || {
        format!("correlations must lie in [-1, 1], got {rho12}, {rho23}")
    })?;
    let centre = rho12 * rho23;
    let half = ((1.0 - rho12 * rho12) * (1.0 - rho23 * rho23)).max(0.0).sqrt();
    Ok((centre - half, centre + half))
}

/// Smallest and largest `rho13` on a grid of step `step` whose correlation
/// matrix has no eigenvalue below `-1e-12`.
pub fn correlation_bounds_scan(rho12: f64, rho23: f64, step: f64) -> Option<(f64, f64)> {
    let n = (2.0 / step).round() as i64;
    let feasible = (0..=n).map(|i| -1.0 + i as f64 * step).filter(|&r13| {
        let m = Matrix3::new(1.0, rho12, r13, rho12, 1.0, rho23, r13, rho23, 1.0);
        SymmetricEigen::new(m).eigenvalues.min() >= -1e-12
    });
    feasible.fold(None, |acc, r| match acc {
        None => Some((r, r)),
        Some((lo, hi)) => Some((lo.min(r), hi.max(r))),
    })
}

/// `E[min(U_1..U_N)]` from `I_{N+1} = I_N (N+1)/(N+2)`, `I_1 = 1/2`.
pub fn expected_min_uniform(n: u64) -> Result<BigRational> {
    ensure(n >= 1, || "N must be at least 1".into())?;
    let mut i = ratio(1, 2);
    for j in 1..n {
        i *= BigRational::new(BigInt::from(j + 1), BigInt::from(j + 2));
    }
    Ok(i)
}

/// Expected number of clusters among `N` cars on a one-lane road, from
/// `E_{N+1} = E_N + 1/(N+1)`, `E_1 = 1`.
pub fn expected_clusters(n: u64) -> Result<BigRational> {
    ensure(n >= 1, || "N must be at least 1".into())?;
    let mut e = BigRational::one();
    for j in 2..=n {
        e += BigRational::new(BigInt::one(), BigInt::from(j));
    }
    Ok(e)
}

fn mc_quiz(name: String, exact: BigRational, samples: Vec<f64>) -> QuizResult {
    let est = McEstimate::from_samples(&samples);
    QuizResult {
        name,
        closed_form: to_f64(&exact),
        exact: Some(exact.to_string()),
        verifier_estimate: est.mean,
        verifier_error: est.std_error,
        statistical: true,
    }
}

pub fn min_uniform_quiz(n: u64, seed: u64, n_draws: usize) -> Result<QuizResult> {
    let exact = expected_min_uniform(n)?;
    let samples = monte_carlo(seed, n_draws, |rng, _| {
        (0..n).map(|_| rng.uniform()).fold(1.0, f64::min)
    });
    Ok(mc_quiz(format!("expected minimum of {n} uniforms"), exact, samples))
}

/// Cars enter in sequence at uniform speeds; a car heads a new cluster when
/// it is slower than every car ahead of it.
pub fn clusters_quiz(n: u64, seed: u64, n_draws: usize) -> Result<QuizResult> {
    let exact = expected_clusters(n)?;
    let samples = monte_carlo(seed, n_draws, |rng, _| {
        let mut slowest = f64::INFINITY;
        let mut clusters = 0u64;
        for _ in 0..n {
            let v: f64 = rng.rng().gen();
            if v < slowest {
                slowest = v;
                clusters += 1;
            }
        }
        clusters as f64
    });
    Ok(mc_quiz(format!("expected clusters of {n} cars"), exact, samples))
}

pub fn correlation_quiz(rho12: f64, rho23: f64) -> Result<[QuizResult; 2]> {
    let (lo, hi) = correlation_bounds(rho12, rho23)?;
    let step = 1e-4;
    let (scan_lo, scan_hi) = correlation_bounds_scan(rho12, rho23, step).unwrap_or((f64::NAN, f64::NAN));
    let make = |label: &str, closed: f64, scanned: f64| QuizResult {
        name: format!("{label} corr(X,Z) given {rho12}, {rho23}"),
        closed_form: closed,
        exact: None,
        verifier_estimate: scanned,
        verifier_error: step,
        statistical: false,
    };
    Ok([make("min", lo, scan_lo), make("max", hi, scan_hi)])
}

/// Every puzzle with its verifier, in a fixed order.
pub fn quiz_suite(seed: u64) -> Result<Vec<QuizResult>> {
    let mut out = vec![boy_girl_quiz(seed, 1_000_000), tosses_quiz(3)?];
    out.push(hit_quiz(3.0, 5.0, 0.0)?);
    out.push(hit_quiz(3.0, 5.0, 0.5)?);
    out.extend(correlation_quiz(0.9, 0.8)?);
    out.push(min_uniform_quiz(3, seed, 1_000_000)?);
    out.push(clusters_quiz(3, seed, 1_000_000)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(boy_girl_conditional(), ratio(2, 3));
        assert_eq!(expected_tosses_for_run(1).unwrap(), ratio(2, 1));
        assert_eq!(expected_tosses_for_run(3).unwrap(), ratio(14, 1));
        assert_eq!(expected_min_uniform(3).unwrap(), ratio(1, 4));
        assert_eq!(expected_clusters(3).unwrap(), ratio(11, 6));
        assert!(expected_tosses_for_run(0).is_err());
    }

    #[test]
    fn recursion_matches_closed_form() {
        for (a, b) in [(3.0, 5.0), (5.0, 3.0), (1.0, 4.0), (2.0, 2.0), (0.7, 2.1)] {
            for m in [-0.5, -0.1, 0.0, 0.1, 0.5] {
                let h = hit_a_before_b(a, b, m).unwrap();
                let r = h.recursive.unwrap();
                assert!((h.closed_form - r).abs() < 1e-12, "{a} {b} {m}: {} {r}", h.closed_form);
            }
        }
    }

    #[test]
    fn irrational_ratio_is_flagged() {
        let h = hit_a_before_b(1.0, std::f64::consts::PI, 0.2).unwrap();
        assert!(!h.commensurate && h.recursive.is_none());
    }
}
