use crate::error::{domain, Error, Result};

/// Root of `f` on `[lo, hi]` by bisection with secant acceleration.
///
/// Secant steps are taken while they land inside the bracket and shrink it by
/// at least half; otherwise the step falls back to bisection.
pub fn find_root(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) || !(tol > 0.0) {
        return domain(format!("find_root needs lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}"));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoSignChange { lo, hi, f_lo: fa, f_hi: fb });
    }
    let mut force_bisect = false;
    for _ in 0..400 {
        let width = b - a;
        if width <= tol {
            break;
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let x = if !force_bisect && secant > a && secant < b {
            secant
        } else {
            0.5 * (a + b)
        };
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        force_bisect = (b - a) > 0.5 * width;
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Sub-intervals of `[lo, hi]` (split into `cells` equal cells) on which `f`
/// changes sign.
pub fn bracket_scan(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, cells: usize) -> Vec<(f64, f64)> {
    let h = (hi - lo) / cells as f64;
    let mut out = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=cells {
        let x1 = lo + h * i as f64;
        let f1 = f(x1);
        if f0 == 0.0 || f0.signum() != f1.signum() {
            out.push((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}
