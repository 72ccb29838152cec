//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use refund_core::ModelParams;

pub fn canonical() -> ModelParams {
    ModelParams::new(1.0, 0.1, 1.0).unwrap()
}

pub fn log_odds(mu: f64) -> f64 {
    (mu / (1.0 - mu)).ln()
}

/// Right-hand side of the learning ODE solved for the slope:
/// `V' = (mu lambda (v - t) - k - mu lambda V) / ((1 - mu) mu lambda)`.
pub fn ode_slope(mu: f64, value: f64, t_b: f64, p: &ModelParams) -> f64 {
    let ml = mu * p.lambda;
    (ml * (p.v - t_b) - p.k - ml * value) / ((1.0 - mu) * ml)
}

/// Classical RK4 from `(mu_start, value_start)`, recording the value at each
/// of `points` (which must be increasing and above `mu_start`).
pub fn rk4_values(
    mu_start: f64,
    value_start: f64,
    points: &[f64],
    t_b: f64,
    p: &ModelParams,
    max_step: f64,
) -> Vec<f64> {
    let f = |mu: f64, y: f64| ode_slope(mu, y, t_b, p);
    let mut out = Vec::with_capacity(points.len());
    let (mut x, mut y) = (mu_start, value_start);
    for &target in points {
        while x < target {
            let h = (target - x).min(max_step);
            let k1 = f(x, y);
            let k2 = f(x + h / 2.0, y + h / 2.0 * k1);
            let k3 = f(x + h / 2.0, y + h / 2.0 * k2);
            let k4 = f(x + h, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            x += h;
            if target - x < 1e-15 {
                x = target;
            }
        }
        out.push(y);
    }
    out
}

/// Adaptive Simpson quadrature.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(
        f: &F,
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
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Plain bisection, kept separate from the library's root finder.
pub fn bisect_plain<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let lo_sign = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Learning value written out by hand from the closed form.
pub fn hand_value(mu: f64, t_b: f64, p: &ModelParams) -> f64 {
    let c = p.k / p.lambda;
    let q = c / (p.v - t_b);
    mu * (p.v - t_b) - c - (1.0 - mu) * c * (log_odds(mu) - log_odds(q))
}

/// Learning-deterrence price at `mu0`, by bisection on the price for
/// `V(mu0; t) = mu0 v - t`.
pub fn deterrence_price(mu0: f64, p: &ModelParams) -> f64 {
    let c = p.k / p.lambda;
    let lo = p.v * 0.5 * (1.0 - (1.0 - 4.0 * c / p.v).sqrt()) + 1e-12;
    let hi = p.v - c / mu0;
    bisect_plain(|t| hand_value(mu0, t, p) - (mu0 * p.v - t), lo, hi)
}

/// Central difference.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central difference with one Richardson extrapolation step.
pub fn richardson_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d1 = central_diff(&f, x, h);
    let d2 = central_diff(&f, x, h / 2.0);
    (4.0 * d2 - d1) / 3.0
}
