//! Root finding and small numerical helpers.

use crate::error::{ModelError, Result};

/// Absolute tolerance for beliefs and prices found by bisection.
pub const ROOT_TOL: f64 = 1e-12;

/// Clamp applied to log-odds arguments.
pub const LOGIT_GUARD: f64 = 1e-15;

/// Log-odds `log(mu / (1 - mu))`, with the argument clamped away from 0 and 1.
pub fn logit(mu: f64) -> f64 {
    let m = mu.clamp(LOGIT_GUARD, 1.0 - LOGIT_GUARD);
    (m / (1.0 - m)).ln()
}

/// Bracketed bisection for a continuous `f` with a sign change on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `tol` or cannot shrink further
/// in floating point. Returns the midpoint of the final bracket.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(ModelError::NoSolution(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the minimiser of a unimodal `f` on `[lo, hi]`.
pub fn golden_min<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
        if x1 >= x2 {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Neumaier-compensated sum. Deterministic for a fixed input order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
