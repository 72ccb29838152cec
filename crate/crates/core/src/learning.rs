//! Belief dynamics and the buyer's value of learning before purchase.
//!
//! In the good-news model a conclusive signal arrives at rate `lambda` only
//! when the valuation is high. Without news the belief drifts down along
//! `mu' = -lambda mu (1 - mu)`. Everything here is a closed form except the
//! trial belief and its inverse, which are found by bracketed bisection on
//! single-crossing functions.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::numeric::{bisect, logit, ROOT_TOL};
use crate::params::{check_belief, check_interior, ModelParams};

/// Belief after `tau` units of learning without news, starting at `mu0`.
///
/// Beliefs of exactly 0 or 1 are absorbing and returned unchanged.
pub fn belief_path(mu0: f64, tau: f64, rate: f64) -> Result<f64> {
    check_belief("mu0", mu0)?;
    if !(tau >= 0.0) {
        return Err(ModelError::Domain(format!(
            "elapsed time {tau} is negative"
        )));
    }
    if !(rate > 0.0) {
        return Err(ModelError::Domain(format!("rate {rate} is not positive")));
    }
    if mu0 == 0.0 || mu0 == 1.0 {
        return Ok(mu0);
    }
    let odds_low = (1.0 - mu0) / mu0 * (rate * tau).exp();
    Ok(1.0 / (1.0 + odds_low))
}

/// Time without news needed to move the belief from `mu0` down to `beta`.
pub fn time_to_belief(mu0: f64, beta: f64, rate: f64) -> Result<f64> {
    check_interior("mu0", mu0)?;
    if !(beta > 0.0 && beta <= mu0) {
        return Err(ModelError::Domain(format!(
            "target belief {beta} must lie in (0, mu0 = {mu0}]"
        )));
    }
    Ok((logit(mu0) - logit(beta)) / rate)
}

/// Marginal cost of information `k / (lambda mu (1 - mu))`.
pub fn marginal_cost(mu: f64, params: &ModelParams) -> Result<f64> {
    marginal_cost_at_rate(mu, params.k, params.lambda)
}

pub fn marginal_cost_at_rate(mu: f64, k: f64, rate: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(ModelError::Domain(format!(
            "marginal cost diverges at belief {mu}"
        )));
    }
    Ok(k / (rate * mu * (1.0 - mu)))
}

/// Integral of the marginal cost over `[from, to]` at learning rate `rate`.
pub fn information_cost(from: f64, to: f64, k: f64, rate: f64) -> f64 {
    k / rate * (logit(to) - logit(from))
}

/// Quitting belief `q(t_b) = k / (lambda (v - t_b))`.
pub fn quitting_belief(t_b: f64, params: &ModelParams) -> Result<f64> {
    quitting_belief_at_rate(t_b, params.v, params.k, params.lambda)
}

pub(crate) fn quitting_belief_at_rate(t_b: f64, v: f64, k: f64, rate: f64) -> Result<f64> {
    if !(t_b < v - k / rate) {
        return Err(ModelError::Domain(format!(
            "price {t_b} >= v - k/lambda = {}: learning never pays",
            v - k / rate
        )));
    }
    Ok(k / (rate * (v - t_b)))
}

/// Price at which the quitting belief equals `mu`: `v - k / (lambda mu)`.
pub fn quitting_belief_inverse(mu: f64, params: &ModelParams) -> Result<f64> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(ModelError::Domain(format!("belief {mu} is not in (0, 1]")));
    }
    Ok(params.v - params.k / (params.lambda * mu))
}

/// Beliefs and prices bounding the region where learning can be optimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRegion {
    pub mu_low: f64,
    pub mu_high: f64,
    /// Lowest price with a learning region, `mu_low * v`.
    pub price_low: f64,
    /// Highest price with a learning region, `mu_high * v`.
    pub price_high: f64,
}

impl LearningRegion {
    pub fn contains(&self, mu: f64) -> bool {
        mu >= self.mu_low && mu <= self.mu_high
    }

    pub fn contains_price(&self, t_b: f64) -> bool {
        t_b >= self.price_low && t_b <= self.price_high
    }
}

/// Roots of `mu (1 - mu) = k / (lambda v)`.
pub fn learning_region(params: &ModelParams) -> Result<LearningRegion> {
    let (mu_low, mu_high) = symmetric_roots(params.k / (params.lambda * params.v))?;
    Ok(LearningRegion {
        mu_low,
        mu_high,
        price_low: mu_low * params.v,
        price_high: mu_high * params.v,
    })
}

/// Roots of `mu (1 - mu) = a` for `0 < a < 1/4`.
pub(crate) fn symmetric_roots(a: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a < 0.25) {
        return Err(ModelError::Infeasible(format!(
            "no learning region: mu(1-mu) = {a} has no interior roots"
        )));
    }
    let disc = (1.0 - 4.0 * a).sqrt();
    // Small root via the product of roots for accuracy when `a` is tiny.
    let mu_high = 0.5 * (1.0 + disc);
    Ok((a / mu_high, mu_high))
}

/// Closed-form solution of the learning ODE with boundary `(q(t_b), 0)`:
/// the buyer's value from learning until the belief falls to `q(t_b)`.
///
/// Returns `(value, slope)`. No piecewise guard is applied.
pub fn learning_value(mu: f64, t_b: f64, params: &ModelParams) -> Result<(f64, f64)> {
    let q = quitting_belief(t_b, params)?;
    let c = params.cost_ratio();
    let gap = logit(mu) - logit(q);
    let value = mu * (params.v - t_b) - c - (1.0 - mu) * c * gap;
    let slope = (params.v - t_b) + c * gap - c / mu;
    Ok((value, slope))
}

/// Value `V0(mu; t_b)` of a buyer facing a no-return price, and its slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuePoint {
    pub value: f64,
    pub slope: f64,
}

/// Piecewise option value for a fixed price, with its cutoffs cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueProfile {
    pub price: f64,
    /// `Some((q, Q))` when the price admits a learning region.
    pub cutoffs: Option<(f64, f64)>,
    params: ModelParams,
}

impl ValueProfile {
    pub fn new(t_b: f64, params: &ModelParams) -> Result<Self> {
        let region = learning_region(params)?;
        let cutoffs = if region.contains_price(t_b) {
            let q = quitting_belief(t_b, params)?;
            Some((q, trial_belief(t_b, params)?))
        } else {
            None
        };
        Ok(Self {
            price: t_b,
            cutoffs,
            params: *params,
        })
    }

    pub fn quitting(&self) -> Option<f64> {
        self.cutoffs.map(|(q, _)| q)
    }

    pub fn trial(&self) -> Option<f64> {
        self.cutoffs.map(|(_, big_q)| big_q)
    }

    pub fn eval(&self, mu: f64) -> ValuePoint {
        let p = &self.params;
        let consume = mu * p.v - self.price;
        match self.cutoffs {
            None => {
                if consume > 0.0 {
                    ValuePoint {
                        value: consume,
                        slope: p.v,
                    }
                } else {
                    ValuePoint {
                        value: 0.0,
                        slope: 0.0,
                    }
                }
            }
            Some((q, big_q)) => {
                if mu < q {
                    ValuePoint {
                        value: 0.0,
                        slope: 0.0,
                    }
                } else if mu >= big_q {
                    ValuePoint {
                        value: consume,
                        slope: p.v,
                    }
                } else {
                    let (value, slope) = learning_value(mu, self.price, p)
                        .expect("price inside the learning region");
                    ValuePoint { value, slope }
                }
            }
        }
    }
}

/// `V0(mu; t_b)` and its slope.
pub fn value_v0(mu: f64, t_b: f64, params: &ModelParams) -> Result<ValuePoint> {
    check_belief("mu", mu)?;
    Ok(ValueProfile::new(t_b, params)?.eval(mu))
}

/// Trial belief `Q(t_b)`: above it, buying now beats further learning.
pub fn trial_belief(t_b: f64, params: &ModelParams) -> Result<f64> {
    let region = learning_region(params)?;
    let slack = 1e-12 * params.v.max(1.0);
    if t_b < region.price_low - slack || t_b > region.price_high + slack {
        return Err(ModelError::NoSolution(format!(
            "price {t_b} outside [{}, {}]: no trial belief",
            region.price_low, region.price_high
        )));
    }
    let q = quitting_belief(t_b.clamp(region.price_low, region.price_high), params)?;
    let c = params.cost_ratio();
    // Learning value minus consumption value; convex with one sign change.
    let excess = |mu: f64| (1.0 - mu) * (t_b - c * (logit(mu) - logit(q))) - c;
    if excess(q) <= 0.0 {
        return Ok(q);
    }
    bisect(excess, q, 1.0 - 1e-12, ROOT_TOL)
}

/// Learning-deterrence price `Q^{-1}(mu)` for `mu` in the learning region.
///
/// Solved through the quitting belief `x = q(Q^{-1}(mu))`, which satisfies
/// `-1/x + logit(x) = 1/(1-mu) + logit(mu) - lambda v / k`.
pub fn trial_belief_inverse(mu: f64, params: &ModelParams) -> Result<f64> {
    let x = deterrence_quitting_belief(mu, params)?;
    Ok(params.v - params.cost_ratio() / x)
}

/// Lowest implementable stopping belief `beta_0 = q(Q^{-1}(mu0))`.
pub fn deterrence_quitting_belief(mu0: f64, params: &ModelParams) -> Result<f64> {
    let region = learning_region(params)?;
    if !region.contains(mu0) {
        return Err(ModelError::Domain(format!(
            "prior {mu0} outside the learning region [{}, {}]",
            region.mu_low, region.mu_high
        )));
    }
    let rhs = trial_curve_rhs(mu0, params);
    let lhs = |x: f64| -1.0 / x + logit(x) - rhs;
    if lhs(mu0) <= 0.0 {
        return Ok(mu0);
    }
    bisect(lhs, 1e-14, mu0, ROOT_TOL * 1e-3)
}

/// Right-hand side `1/(1-mu) + logit(mu) - v/c` of the trial-curve identity.
pub(crate) fn trial_curve_rhs(mu: f64, params: &ModelParams) -> f64 {
    1.0 / (1.0 - mu) + logit(mu) - params.v / params.cost_ratio()
}

/// Buyer's ex-ante value from learning until the belief reaches `beta`
/// (or good news arrives), buying on good news and leaving empty-handed
/// otherwise.
pub fn ex_ante_utility(beta: f64, mu0: f64, t_b: f64, params: &ModelParams) -> Result<f64> {
    check_interior("mu0", mu0)?;
    if !(beta > 0.0 && beta <= mu0) {
        return Err(ModelError::Domain(format!(
            "stopping belief {beta} must lie in (0, mu0 = {mu0}]"
        )));
    }
    let lambda = params.lambda;
    let t0 = time_to_belief(mu0, beta, lambda)?;
    let expected_t1 = (mu0 - beta) / (lambda * mu0 * (1.0 - beta));
    Ok(mu0 * (1.0 - (-lambda * t0).exp()) * (params.v - t_b)
        - mu0 * params.k * expected_t1
        - (1.0 - mu0) * params.k * t0)
}
