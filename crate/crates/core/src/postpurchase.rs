//! Faster learning after purchase (`lambda_post > lambda`) and cancellation fees.
//!
//! After buying under free return with fee `t_c`, the buyer learns at rate
//! `lambda_post` and returns at `q_P = k / (lambda_post (v - t_b + t_c))`.
//! His value is the pre-purchase learning value at price `t_b - t_c` and rate
//! `lambda_post`, shifted down by `t_c`. The fee is set so that this value
//! equals what the buyer could get by learning before purchase.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::learning::{
    information_cost, learning_region, quitting_belief_at_rate, quitting_belief_inverse,
    trial_belief_inverse, value_v0,
};
use crate::mechanism::{return_rate, RefundMechanism};
use crate::numeric::{bisect, linspace, logit};
use crate::optimizer::{foc_root, full_price_solution, Candidate, MechanismForm, Solution};
use crate::params::{check_interior, ModelParams};

/// Post-purchase quitting belief `k / (lambda_post (v - t_b + t_c))`.
pub fn q_post(t_b: f64, t_c: f64, params: &ModelParams) -> Result<f64> {
    quitting_belief_at_rate(t_b - t_c, params.v, params.k, params.lambda_post)
}

/// Value of buying at `t_b` with fee `t_c` and then learning until `q_P`,
/// or `None` when `q_P` is not below the prior.
fn learn_after_purchase(mu0: f64, t_b: f64, t_c: f64, params: &ModelParams) -> Option<f64> {
    let q = q_post(t_b, t_c, params).ok().filter(|&q| q < mu0)?;
    let c = params.k / params.lambda_post;
    Some(mu0 * (params.v - t_b) - c - (1.0 - mu0) * c * (logit(mu0) - logit(q)) - (1.0 - mu0) * t_c)
}

/// Buyer's value at `mu0` after buying at `t_b` with a free return that
/// costs `t_c`, learning at rate `lambda_post`.
pub fn post_purchase_value(mu0: f64, t_b: f64, t_c: f64, params: &ModelParams) -> Result<f64> {
    check_interior("mu0", mu0)?;
    let keep = mu0 * params.v - t_b;
    Ok(match learn_after_purchase(mu0, t_b, t_c, params) {
        Some(learn) => learn.max(keep),
        None => keep.max(-t_c),
    })
}

/// Fee that makes the buyer indifferent between buying under free return
/// and learning before purchase. Zero when both learning rates agree.
///
/// The indifference is solved on the learning branch, which falls strictly
/// in the fee. At the no-return price `Q^{-1}(mu0)` this picks the smallest
/// fee at which learning after purchase stops paying.
pub fn cancellation_fee(t_b: f64, mu0: f64, params: &ModelParams) -> Result<f64> {
    check_interior("mu0", mu0)?;
    if params.lambda_post == params.lambda {
        return Ok(0.0);
    }
    let outside = value_v0(mu0, t_b, params)?.value;
    let excess = |t_c: f64| learn_after_purchase(mu0, t_b, t_c, params).map(|x| x - outside);
    match excess(0.0) {
        Some(e) if e > 0.0 => {}
        _ => return Ok(0.0),
    }
    let mut hi = params.v;
    while excess(hi).is_some_and(|e| e > 0.0) {
        hi *= 2.0;
        if hi > 1e6 * params.v {
            return Err(ModelError::NoSolution(format!(
                "no cancellation fee restores indifference at price {t_b}"
            )));
        }
    }
    bisect(|t_c| excess(t_c).unwrap_or(f64::NAN), 0.0, hi, 1e-15)
}

/// Fee in the instant post-purchase learning limit:
/// `(mu0 (v - t_b) - V0(mu0; t_b)) / (1 - mu0)`.
pub fn limit_fee(t_b: f64, mu0: f64, params: &ModelParams) -> Result<f64> {
    check_interior("mu0", mu0)?;
    let outside = value_v0(mu0, t_b, params)?.value;
    Ok((mu0 * (params.v - t_b) - outside) / (1.0 - mu0))
}

/// Revenue-maximizing mechanism when post-purchase learning is instant.
///
/// Inside the learning region the seller charges `q^{-1}(mu0)` with fee
/// `c / (1 - mu0)` and extracts the full surplus `mu0 v`.
pub fn optimal_mechanism_limit(mu0: f64, params: &ModelParams) -> Result<Solution> {
    check_interior("mu0", mu0)?;
    if !learning_region(params)?.contains(mu0) {
        return full_price_solution(mu0, params);
    }
    let price = quitting_belief_inverse(mu0, params)?;
    let fee = params.cost_ratio() / (1.0 - mu0);
    // Every buyer learns the state: the high type keeps, the low type returns.
    let revenue = mu0 * price + (1.0 - mu0) * fee;
    Ok(Solution {
        form: MechanismForm::CancellationFee,
        mechanism: RefundMechanism::with_fee(price, fee),
        beta_star: 0.0,
        revenue,
        buyer_surplus: value_v0(mu0, price, params)?.value,
        candidates: vec![Candidate {
            form: MechanismForm::CancellationFee,
            price,
            revenue,
        }],
    })
}

/// Seller's revenue at one price with the fee-augmented transfer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeeRevenue {
    pub t_b: f64,
    pub t_c: f64,
    pub q_post: f64,
    /// Stopping belief chosen among the attained candidates.
    pub beta: f64,
    /// Return transfer net of the fee at `beta`.
    pub t_r: f64,
    pub revenue: f64,
}

/// Best attained revenue at price `t_b` for finite `lambda_post`.
///
/// The candidates are full learning (`beta = q_P`) and the interior root of
/// `c_P / beta = t_b - t_c - t_r^P(beta)` when it lies below the prior.
pub fn finite_lambda_revenue(t_b: f64, mu0: f64, params: &ModelParams) -> Result<FeeRevenue> {
    check_interior("mu0", mu0)?;
    let t_c = cancellation_fee(t_b, mu0, params)?;
    let q = q_post(t_b, t_c, params)?;
    if q >= mu0 {
        return Err(ModelError::Domain(format!(
            "post-purchase quitting belief {q} is not below the prior {mu0}"
        )));
    }
    let c_post = params.k / params.lambda_post;
    let at = |beta: f64| {
        let t_r = information_cost(q, beta, params.k, params.lambda_post);
        let gamma = return_rate(mu0, beta);
        (t_r, gamma * (t_r + t_c) + (1.0 - gamma) * t_b)
    };
    let mut best = (q, at(q));
    if q <= 0.5 {
        if let Ok(beta) = foc_root(c_post, t_b - t_c, q) {
            if beta < mu0 {
                let cand = at(beta);
                if cand.1 > best.1 .1 {
                    best = (beta, cand);
                }
            }
        }
    }
    let (beta, (t_r, revenue)) = best;
    Ok(FeeRevenue {
        t_b,
        t_c,
        q_post: q,
        beta,
        t_r,
        revenue,
    })
}

/// Best revenue over a price grid from `Q^{-1}(mu0)` to the post-purchase
/// quitting price, with learning deterrence as a fallback candidate.
pub fn best_fee_revenue(mu0: f64, params: &ModelParams, n: usize) -> Result<f64> {
    let lo = trial_belief_inverse(mu0, params)?;
    let hi = params.v - params.k / (params.lambda_post * mu0);
    let mut best = lo;
    for t in linspace(lo, hi, n) {
        if let Ok(r) = finite_lambda_revenue(t, mu0, params) {
            best = best.max(r.revenue);
        }
    }
    Ok(best)
}
