//! Revenue-maximizing stopping beliefs, prices and mechanism forms.
//!
//! For a fixed price the seller picks the stopping belief that maximizes
//! `gamma(beta) t_r(beta) + (1 - gamma(beta)) t_b`; the first-order
//! condition reduces to `c / beta = t_b - t_r(beta, t_b)` with `c = k/lambda`.
//! Over prices only two forms survive: learning deterrence (a no-return
//! price at `Q^{-1}(mu0)`) and free return at the price `t^F`.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::exec::Execution;
use crate::learning::{
    learning_region, quitting_belief, quitting_belief_inverse, trial_belief_inverse,
    trial_curve_rhs, value_v0,
};
use crate::mechanism::{implementing_mechanism, return_rate, return_transfer, RefundMechanism};
use crate::numeric::{bisect, golden_min, linspace, logit, ROOT_TOL};
use crate::params::{check_interior, ModelParams};

/// Prices bounding the interior-learning branch: `t_star = Q^{-1}(1/2)` and
/// `t_2star = v / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceThresholds {
    pub t_star: f64,
    pub t_2star: f64,
}

pub fn price_thresholds(params: &ModelParams) -> Result<PriceThresholds> {
    Ok(PriceThresholds {
        t_star: trial_belief_inverse(0.5, params)?,
        t_2star: 0.5 * params.v,
    })
}

/// Root on `[q_floor, 1/2]` of `c / beta = net_price - c (logit(beta) - logit(q_floor))`.
///
/// The left side minus the right is decreasing in `beta` there, so the root
/// is unique when it exists. Endpoint residuals within `1e-12` count as roots.
pub fn foc_root(c: f64, net_price: f64, q_floor: f64) -> Result<f64> {
    let gap = |beta: f64| c / beta - net_price + c * (logit(beta) - logit(q_floor));
    let (lo, hi) = (q_floor, 0.5);
    if !(lo > 0.0 && lo <= hi) {
        return Err(ModelError::NoSolution(format!(
            "quitting belief {q_floor} is not in (0, 1/2]"
        )));
    }
    let (g_lo, g_hi) = (gap(lo), gap(hi));
    let slack = 1e-12;
    if g_lo.abs() <= slack {
        return Ok(lo);
    }
    if g_hi.abs() <= slack {
        return Ok(hi);
    }
    if g_lo < 0.0 || g_hi > 0.0 {
        return Err(ModelError::NoSolution(format!(
            "no interior stopping belief for net price {net_price}: residuals {g_lo} at {lo}, {g_hi} at 1/2"
        )));
    }
    bisect(gap, lo, hi, ROOT_TOL)
}

/// Interior revenue-maximizing stopping belief `beta^o(t_b)` for prices in
/// `[t_star, t_2star]`. Does not depend on the prior.
pub fn interior_beta(t_b: f64, params: &ModelParams) -> Result<f64> {
    let q = quitting_belief(t_b, params)?;
    if q > 0.5 {
        return Err(ModelError::NoSolution(format!(
            "price {t_b} above v/2: quitting belief {q} exceeds 1/2"
        )));
    }
    foc_root(params.cost_ratio(), t_b, q)
}

/// Slope of `beta^o` in the price, from implicit differentiation of the
/// first-order condition.
pub fn interior_beta_slope(t_b: f64, params: &ModelParams) -> Result<f64> {
    let beta = interior_beta(t_b, params)?;
    let q = quitting_belief(t_b, params)?;
    let denom = (2.0 * beta - 1.0) * (1.0 - q) * params.cost_ratio();
    if (2.0 * beta - 1.0).abs() < 1e-9 {
        return Err(ModelError::Singular(format!(
            "stopping belief {beta} at 1/2: slope diverges at price {t_b}"
        )));
    }
    Ok(beta * beta * (1.0 - beta) / denom)
}

/// Revenue-maximizing stopping belief for a fixed price and prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "beta")]
pub enum OptimalBeta {
    /// Buyer buys at once; attained by the no-return price.
    NoLearning,
    /// Revenue increases as `beta` rises to the prior, but the supremum is
    /// only approached, never attained, with learning.
    LimitToPrior,
    Interior(f64),
    FullLearning(f64),
}

impl OptimalBeta {
    /// Stopping belief, with the prior standing in for the two no-learning kinds.
    pub fn belief(&self, mu0: f64) -> f64 {
        match *self {
            OptimalBeta::NoLearning | OptimalBeta::LimitToPrior => mu0,
            OptimalBeta::Interior(b) | OptimalBeta::FullLearning(b) => b,
        }
    }

    pub fn is_attained(&self) -> bool {
        !matches!(self, OptimalBeta::LimitToPrior)
    }
}

/// Optimal stopping belief at price `t_b`, for `t_b` in `[Q^{-1}(mu0), q^{-1}(mu0)]`.
pub fn optimal_beta_for_price(t_b: f64, mu0: f64, params: &ModelParams) -> Result<OptimalBeta> {
    check_interior("mu0", mu0)?;
    let lo = trial_belief_inverse(mu0, params)?;
    let hi = quitting_belief_inverse(mu0, params)?;
    let slack = 1e-12 * params.v.max(1.0);
    if t_b < lo - slack || t_b > hi + slack {
        return Err(ModelError::Domain(format!(
            "price {t_b} outside the learning bracket [{lo}, {hi}] for prior {mu0}"
        )));
    }
    // The no-return price attains the supremum at the lower end.
    if t_b <= lo + slack {
        return Ok(OptimalBeta::NoLearning);
    }
    let th = price_thresholds(params)?;
    let q = quitting_belief(t_b, params)?;
    let q_at_half_price = 2.0 * params.cost_ratio() / params.v;
    if mu0 <= q_at_half_price {
        return Ok(OptimalBeta::LimitToPrior);
    }
    if t_b >= th.t_2star {
        return Ok(OptimalBeta::FullLearning(q));
    }
    if mu0 < 0.5 {
        if t_b <= th.t_star {
            return Ok(OptimalBeta::LimitToPrior);
        }
        let beta = interior_beta(t_b, params)?;
        return Ok(if beta >= mu0 {
            OptimalBeta::LimitToPrior
        } else {
            OptimalBeta::Interior(beta.max(q))
        });
    }
    // mu0 >= 1/2: the interior branch is feasible on (Q^{-1}(mu0), t_2star).
    let beta = interior_beta(t_b, params)?;
    Ok(if beta >= mu0 {
        OptimalBeta::LimitToPrior
    } else {
        OptimalBeta::Interior(beta.max(q))
    })
}

/// Price elasticities of the return rate along `beta^o` and along `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticityReport {
    pub price: f64,
    pub beta: f64,
    pub quitting: f64,
    pub along_interior: f64,
    pub along_quitting: f64,
    /// `-along_interior / along_quitting`.
    pub ratio: f64,
    /// `beta^2 / (q^2 (1 - 2 beta))`.
    pub ratio_closed_form: f64,
}

pub fn elasticity_report(t_b: f64, params: &ModelParams) -> Result<ElasticityReport> {
    let beta = interior_beta(t_b, params)?;
    let slope = interior_beta_slope(t_b, params)?;
    let q = quitting_belief(t_b, params)?;
    let q_slope = q * q / params.cost_ratio();
    let along_interior = t_b * slope / (1.0 - beta);
    let along_quitting = t_b * q_slope / (1.0 - q);
    Ok(ElasticityReport {
        price: t_b,
        beta,
        quitting: q,
        along_interior,
        along_quitting,
        ratio: -along_interior / along_quitting,
        ratio_closed_form: beta * beta / (q * q * (1.0 - 2.0 * beta)),
    })
}

/// Sign-determining factor of marginal revenue along `beta^o`:
/// `(1 - gamma) / gamma - q / (1 - q)`.
pub fn marginal_revenue_sign(t_b: f64, mu0: f64, params: &ModelParams) -> Result<f64> {
    check_interior("mu0", mu0)?;
    let beta = interior_beta(t_b, params)?;
    let q = quitting_belief(t_b, params)?;
    let gamma = return_rate(mu0, beta);
    Ok((1.0 - gamma) / gamma - q / (1.0 - q))
}

/// Expected revenue when the buyer is made to stop at `beta^o(t_b)`.
pub fn interior_branch_revenue(t_b: f64, mu0: f64, params: &ModelParams) -> Result<f64> {
    check_interior("mu0", mu0)?;
    let beta = interior_beta(t_b, params)?;
    if beta >= mu0 {
        return Err(ModelError::Domain(format!(
            "interior stopping belief {beta} is not below the prior {mu0}"
        )));
    }
    let gamma = return_rate(mu0, beta);
    Ok(gamma * return_transfer(beta, t_b, params)? + (1.0 - gamma) * t_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MechanismForm {
    FullPriceNoReturn,
    LearningDeterrence,
    StochasticReturn,
    FreeReturn,
    CancellationFee,
}

impl MechanismForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            MechanismForm::FullPriceNoReturn => "FullPriceNoReturn",
            MechanismForm::LearningDeterrence => "LearningDeterrence",
            MechanismForm::StochasticReturn => "StochasticReturn",
            MechanismForm::FreeReturn => "FreeReturn",
            MechanismForm::CancellationFee => "CancellationFee",
        }
    }
}

/// A candidate form and the revenue it earns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub form: MechanismForm,
    pub price: f64,
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub form: MechanismForm,
    pub mechanism: RefundMechanism,
    pub beta_star: f64,
    pub revenue: f64,
    pub buyer_surplus: f64,
    /// Every form that was compared, including the winner.
    pub candidates: Vec<Candidate>,
}

impl Solution {
    fn single(
        form: MechanismForm,
        mechanism: RefundMechanism,
        beta_star: f64,
        revenue: f64,
        buyer_surplus: f64,
    ) -> Self {
        Self {
            form,
            mechanism,
            beta_star,
            revenue,
            buyer_surplus,
            candidates: vec![Candidate {
                form,
                price: mechanism.t_b,
                revenue,
            }],
        }
    }
}

/// No-return price `mu0 v` for priors where learning never pays.
pub fn full_price_solution(mu0: f64, params: &ModelParams) -> Result<Solution> {
    check_interior("mu0", mu0)?;
    let price = mu0 * params.v;
    Ok(Solution::single(
        MechanismForm::FullPriceNoReturn,
        RefundMechanism::no_return(price),
        mu0,
        price,
        0.0,
    ))
}

/// No-return price `Q^{-1}(mu0)`: the highest price at which the buyer
/// buys without learning.
pub fn learning_deterrence_solution(mu0: f64, params: &ModelParams) -> Result<Solution> {
    check_interior("mu0", mu0)?;
    let price = trial_belief_inverse(mu0, params)?;
    Ok(Solution::single(
        MechanismForm::LearningDeterrence,
        RefundMechanism::no_return(price),
        mu0,
        price,
        mu0 * params.v - price,
    ))
}

/// Unconstrained revenue-maximizing free-return price
/// `v - c - sqrt(c (v - c) (1 - mu0) / mu0)`.
pub fn free_return_price(mu0: f64, params: &ModelParams) -> f64 {
    let (v, c) = (params.v, params.cost_ratio());
    v - c - (c * (v - c) * (1.0 - mu0) / mu0).sqrt()
}

/// Revenue `(mu0 - q) / (1 - q) t_b` of a free-return mechanism at price `t_b`.
pub fn free_return_revenue(t_b: f64, mu0: f64, params: &ModelParams) -> Result<f64> {
    let q = quitting_belief(t_b, params)?;
    if q >= mu0 {
        return Ok(0.0);
    }
    Ok((mu0 - q) / (1.0 - q) * t_b)
}

pub fn free_return_solution(mu0: f64, params: &ModelParams) -> Result<Solution> {
    check_interior("mu0", mu0)?;
    let c = params.cost_ratio();
    if mu0 <= c / params.v {
        return Err(ModelError::Infeasible(format!(
            "prior {mu0} <= k/(lambda v): free return earns nothing"
        )));
    }
    let upper = quitting_belief_inverse(mu0, params)?;
    let mut price = free_return_price(mu0, params).min(upper);
    if learning_region(params)?.contains(mu0) {
        price = price.max(trial_belief_inverse(mu0, params)?);
    }
    let q = quitting_belief(price, params)?;
    let revenue = free_return_revenue(price, mu0, params)?;
    if !(revenue > 0.0) {
        return Err(ModelError::Infeasible(format!(
            "free return earns {revenue} at prior {mu0}"
        )));
    }
    Ok(Solution::single(
        MechanismForm::FreeReturn,
        RefundMechanism::free_return(price),
        q,
        revenue,
        value_v0(mu0, price, params)?.value,
    ))
}

/// Stochastic-return mechanism stopping the buyer at `beta`, as a solution.
pub fn stochastic_return_solution(
    beta: f64,
    t_b: f64,
    mu0: f64,
    params: &ModelParams,
) -> Result<Solution> {
    let mechanism = implementing_mechanism(beta, t_b, params)?;
    let gamma = return_rate(mu0, beta);
    let revenue = gamma * mechanism.t_r + (1.0 - gamma) * t_b;
    Ok(Solution::single(
        MechanismForm::StochasticReturn,
        mechanism,
        beta,
        revenue,
        value_v0(mu0, t_b, params)?.value,
    ))
}

/// Revenue-maximizing refund mechanism. Ties go to learning deterrence.
pub fn optimal_mechanism(mu0: f64, params: &ModelParams) -> Result<Solution> {
    check_interior("mu0", mu0)?;
    if !learning_region(params)?.contains(mu0) {
        return full_price_solution(mu0, params);
    }
    let deter = learning_deterrence_solution(mu0, params)?;
    let free = free_return_solution(mu0, params)?;
    let candidates = vec![deter.candidates[0], free.candidates[0]];
    let mut best = if free.revenue > deter.revenue {
        free
    } else {
        deter
    };
    best.candidates = candidates;
    Ok(best)
}

/// What the seller earns and the buyer does at one price on the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceResponse {
    pub t_b: f64,
    pub beta: OptimalBeta,
    pub beta_star: f64,
    /// Supremum revenue; approached but not attained for `LimitToPrior`.
    pub revenue: f64,
    pub x_r: f64,
    pub t_r: f64,
    pub gamma: f64,
}

pub fn price_response(t_b: f64, mu0: f64, params: &ModelParams) -> Result<PriceResponse> {
    let beta = optimal_beta_for_price(t_b, mu0, params)?;
    let row = |beta_star: f64, x_r: f64, t_r: f64, gamma: f64| PriceResponse {
        t_b,
        beta,
        beta_star,
        revenue: gamma * t_r + (1.0 - gamma) * t_b,
        x_r,
        t_r,
        gamma,
    };
    Ok(match beta {
        OptimalBeta::NoLearning => row(mu0, 1.0, t_b, 0.0),
        OptimalBeta::LimitToPrior => {
            // As beta rises to the prior every buyer returns and pays t_r(mu0).
            let t_r = return_transfer(mu0, t_b, params)?;
            let x_r = crate::learning::learning_value(mu0, t_b, params)?.1 / params.v;
            row(mu0, x_r.clamp(0.0, 1.0), t_r, 1.0)
        }
        OptimalBeta::Interior(b) | OptimalBeta::FullLearning(b) => {
            let m = implementing_mechanism(b, t_b, params)?;
            row(b, m.x_r, m.t_r, return_rate(mu0, b))
        }
    })
}

/// Priors where free return beats learning deterrence, and the cost ratio
/// above which there are none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub mu_low: f64,
    pub mu_high: f64,
    /// Closed interval of priors where free return is optimal.
    pub free_return: Option<(f64, f64)>,
    /// Largest `k / lambda` (at this `v`) for which the interval is nonempty.
    pub c_star: f64,
    /// Width of the interval at `c_star`.
    pub width_at_c_star: f64,
    /// Sign changes of the boundary function seen on the scan grid.
    pub sign_changes: usize,
}

/// Positive where learning deterrence beats free return, nonpositive on the
/// free-return interval. Depends on `v` and `c = k / lambda` only.
pub fn region_boundary(mu0: f64, params: &ModelParams) -> f64 {
    let (v, c) = (params.v, params.cost_ratio());
    let price = free_return_price(mu0, params);
    let q = c / (v - price);
    let revenue = (mu0 - q) / (1.0 - q) * price;
    let q_rev = c / (v - revenue);
    trial_curve_rhs(mu0, params) - (-1.0 / q_rev + logit(q_rev))
}

/// Smallest value of the boundary function over the learning region and
/// where it is reached.
fn boundary_minimum(params: &ModelParams, grid: &[f64]) -> (f64, f64) {
    let vals: Vec<f64> = grid.iter().map(|&m| region_boundary(m, params)).collect();
    let i = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let (x, fx) = golden_min(|m| region_boundary(m, params), lo, hi, 1e-13);
    if fx <= vals[i] {
        (x, fx)
    } else {
        (grid[i], vals[i])
    }
}

fn interior_grid(params: &ModelParams, n: usize) -> Result<Vec<f64>> {
    let r = learning_region(params)?;
    let pad = 1e-12;
    Ok(linspace(r.mu_low + pad, r.mu_high - pad, n.max(3)))
}

fn free_return_interval(params: &ModelParams, grid_size: usize) -> Result<Option<(f64, f64)>> {
    let grid = interior_grid(params, grid_size)?;
    let (m, s_min) = boundary_minimum(params, &grid);
    if s_min > 0.0 {
        return Ok(None);
    }
    let r = learning_region(params)?;
    let s = |x: f64| region_boundary(x, params);
    let lo = bisect(s, r.mu_low, m, 1e-14)?;
    let hi = bisect(s, m, r.mu_high, 1e-14)?;
    Ok(Some((lo, hi)))
}

/// Largest cost ratio with a nonempty free-return interval at valuation `v`.
///
/// Returns the cost ratio and the interval width there.
pub fn critical_cost_ratio(v: f64, grid_size: usize) -> Result<(f64, f64)> {
    let at = |c: f64| ModelParams::new(v, c, 1.0);
    let nonempty = |c: f64| -> Result<bool> {
        let p = at(c)?;
        let grid = interior_grid(&p, grid_size)?;
        Ok(boundary_minimum(&p, &grid).1 <= 0.0)
    };
    let (mut lo, mut hi) = (1e-6 * v, 0.25 * v * (1.0 - 1e-9));
    if !nonempty(lo)? {
        return Err(ModelError::NoSolution(
            "free return never optimal even for tiny learning costs".into(),
        ));
    }
    if nonempty(hi)? {
        return Ok((hi, 0.0));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if nonempty(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let width = free_return_interval(&at(lo)?, grid_size)?
        .map(|(a, b)| b - a)
        .unwrap_or(0.0);
    Ok((lo, width))
}

pub fn region_map(params: &ModelParams, grid_size: usize) -> Result<RegionMap> {
    let r = learning_region(params)?;
    let grid = interior_grid(params, grid_size)?;
    let signs: Vec<bool> = grid
        .iter()
        .map(|&m| region_boundary(m, params) > 0.0)
        .collect();
    let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if sign_changes > 2 {
        return Err(ModelError::NoSolution(format!(
            "boundary function changes sign {sign_changes} times; expected at most two"
        )));
    }
    let free_return = free_return_interval(params, grid_size)?;
    let (c_star, width_at_c_star) = critical_cost_ratio(params.v, grid_size)?;
    Ok(RegionMap {
        mu_low: r.mu_low,
        mu_high: r.mu_high,
        free_return,
        c_star,
        width_at_c_star,
        sign_changes,
    })
}

/// Optimal mechanism at each prior, in grid order.
pub fn form_map(priors: &[f64], params: &ModelParams, exec: Execution) -> Vec<Result<Solution>> {
    exec.map_slice(priors, |&mu0| optimal_mechanism(mu0, params))
}
