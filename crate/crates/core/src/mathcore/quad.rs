use nalgebra::{DMatrix, SymmetricEigen};

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Gauss-Hermite rule for the weight `exp(-x²)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Nodes and weights of the `n`-point Gauss-Hermite rule.
///
/// Eigenvalues of the Jacobi matrix give starting points; each node is then
/// polished by Newton iteration on the orthonormal Hermite recurrence, which
/// also yields the weight with full relative precision.
pub fn gauss_hermite(n: usize) -> GaussHermite {
    assert!(n >= 1, "gauss_hermite needs at least one node");
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (0.5 * i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    guesses.sort_by(|a, b| b.total_cmp(a));
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for mut z in guesses {
        let mut pp = 0.0;
        for _ in 0..50 {
            let (p_n, p_prev) = hermite_orthonormal(n, z);
            pp = (2.0 * n as f64).sqrt() * p_prev;
            let step = p_n / pp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, p_prev) = hermite_orthonormal(n, z);
        pp = if p_prev != 0.0 { (2.0 * n as f64).sqrt() * p_prev } else { pp };
        nodes.push(z);
        weights.push(2.0 / (pp * pp));
    }
    GaussHermite { nodes, weights }
}

/// `(h_n(z), h_{n-1}(z))` for Hermite polynomials normalized against `exp(-x²)`.
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = std::f64::consts::PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

impl GaussHermite {
    /// `E[g(Z)]` for `Z ~ N(0, 1)`.
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> f64 {
        let s = std::f64::consts::SQRT_2;
        let sum: f64 = self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(s * x)).sum();
        sum / std::f64::consts::PI.sqrt()
    }
}

/// `E[g(Z)]` for standard normal `Z` with an `n`-point rule.
pub fn gaussian_expectation(n: usize, g: impl Fn(f64) -> f64) -> f64 {
    gauss_hermite(n).expectation(g)
}
