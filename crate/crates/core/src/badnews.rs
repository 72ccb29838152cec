//! The bad-news model: a conclusive signal arrives at rate `rho` only when
//! the valuation is low, so without news the belief drifts up.
//!
//! A buyer who has bought keeps learning until news arrives (and returns)
//! or the belief reaches the consumption belief `Q_N(t_b) = 1 - k/(rho t_b)`.
//! Implementable distributions put mass `1 - mu0/alpha` on 0 and `mu0/alpha`
//! on some `alpha` in `(mu0, alpha_0]`.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::learning::symmetric_roots;
use crate::mechanism::RefundMechanism;
use crate::numeric::{bisect, logit, ROOT_TOL};
use crate::optimizer::{full_price_solution, Candidate, MechanismForm, Solution};
use crate::params::{check_interior, ModelParams};

fn bad_news_cost(params: &ModelParams) -> f64 {
    params.k / params.rho
}

/// Priors with learning and the interval where free return is optimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadNewsRegion {
    pub mu_low: f64,
    pub mu_high: f64,
    /// `[mu_cross, mu_high]`, where `alpha_0(mu_cross) = 1 - mu_cross`.
    pub free_return: (f64, f64),
}

/// Roots of `mu (1 - mu) = k / (rho v)`.
pub fn bad_news_learning_region(params: &ModelParams) -> Result<(f64, f64)> {
    params.validate_bad_news()?;
    symmetric_roots(params.k / (params.rho * params.v))
}

/// Consumption belief `Q_N(t_b) = 1 - k / (rho t_b)`.
pub fn consumption_belief(t_b: f64, params: &ModelParams) -> Result<f64> {
    let c = bad_news_cost(params);
    if !(t_b > c) {
        return Err(ModelError::Domain(format!(
            "price {t_b} <= k/rho = {c}: no consumption belief"
        )));
    }
    Ok(1.0 - c / t_b)
}

/// Price at which the consumption belief is `alpha`: `k / (rho (1 - alpha))`.
pub fn consumption_belief_inverse(alpha: f64, params: &ModelParams) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(ModelError::Domain(format!(
            "belief {alpha} is not in [0, 1)"
        )));
    }
    Ok(bad_news_cost(params) / (1.0 - alpha))
}

/// Buyer's surplus from buying at `Q_N^{-1}(alpha)` with free return and
/// learning until the belief reaches `alpha`. Decreasing in `alpha`.
pub fn free_return_surplus(alpha: f64, mu0: f64, params: &ModelParams) -> f64 {
    let c = bad_news_cost(params);
    -c - mu0 * c / (1.0 - alpha) + mu0 * params.v - mu0 * c * (logit(alpha) - logit(mu0))
}

/// Highest implementable upper stopping belief `alpha_0(mu0)`: the `alpha`
/// at which the free-return surplus falls to zero.
pub fn alpha_max(mu0: f64, params: &ModelParams) -> Result<f64> {
    check_interior("mu0", mu0)?;
    let (lo_n, hi_n) = bad_news_learning_region(params)?;
    let slack = 1e-12;
    if mu0 < lo_n - slack || mu0 > hi_n + slack {
        return Err(ModelError::NoSolution(format!(
            "prior {mu0} outside the bad-news learning region [{lo_n}, {hi_n}]"
        )));
    }
    let f = |a: f64| free_return_surplus(a, mu0, params);
    let (lo, hi) = (mu0 + 1e-12, 1.0 - 1e-9);
    if f(lo) <= 0.0 {
        return Ok(mu0);
    }
    bisect(f, lo, hi, ROOT_TOL)
}

/// `d alpha_0 / d mu0 = alpha (1 - alpha)^2 / (mu0^2 (1 - mu0))`.
pub fn alpha_max_slope(mu0: f64, params: &ModelParams) -> Result<f64> {
    let a = alpha_max(mu0, params)?;
    Ok(a * (1.0 - a) * (1.0 - a) / (mu0 * mu0 * (1.0 - mu0)))
}

/// Two-atom distribution with support `{0, alpha}` and mean `mu0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadNewsDistribution {
    pub mu0: f64,
    pub alpha: f64,
}

impl BadNewsDistribution {
    pub fn new(mu0: f64, alpha: f64) -> Result<Self> {
        check_interior("mu0", mu0)?;
        if !(alpha >= mu0 && alpha < 1.0) {
            return Err(ModelError::Domain(format!(
                "upper support point {alpha} must lie in [mu0 = {mu0}, 1)"
            )));
        }
        Ok(Self { mu0, alpha })
    }

    pub fn atoms(&self) -> [(f64, f64); 2] {
        let upper = self.mu0 / self.alpha;
        [(0.0, 1.0 - upper), (self.alpha, upper)]
    }

    pub fn mean(&self) -> f64 {
        self.atoms().iter().map(|(m, w)| m * w).sum()
    }
}

/// Transfer at stopping belief `mu`: zero below the prior and above
/// `alpha_0`, `Q_N^{-1}(mu)` in between.
pub fn transfer_at(mu: f64, mu0: f64, params: &ModelParams) -> Result<f64> {
    if mu < mu0 {
        return Ok(0.0);
    }
    let a0 = alpha_max(mu0, params)?;
    if mu > a0 {
        return Ok(0.0);
    }
    consumption_belief_inverse(mu, params)
}

/// Expected transfer `(mu0 / alpha) Q_N^{-1}(alpha)` under the two-atom distribution.
pub fn expected_transfer(dist: &BadNewsDistribution, params: &ModelParams) -> Result<f64> {
    Ok(dist.mu0 / dist.alpha * consumption_belief_inverse(dist.alpha, params)?)
}

/// Revenue-maximizing mechanism in the bad-news model. Ties go to
/// learning deterrence.
pub fn optimal_mechanism(mu0: f64, params: &ModelParams) -> Result<Solution> {
    check_interior("mu0", mu0)?;
    let (lo, hi) = bad_news_learning_region(params)?;
    if mu0 < lo || mu0 > hi {
        return full_price_solution(mu0, params);
    }
    let deter_price = consumption_belief_inverse(mu0, params)?;
    let alpha = alpha_max(mu0, params)?;
    let free_price = consumption_belief_inverse(alpha, params)?;
    let free_revenue = expected_transfer(&BadNewsDistribution::new(mu0, alpha)?, params)?;
    let candidates = vec![
        Candidate {
            form: MechanismForm::LearningDeterrence,
            price: deter_price,
            revenue: deter_price,
        },
        Candidate {
            form: MechanismForm::FreeReturn,
            price: free_price,
            revenue: free_revenue,
        },
    ];
    let solution = if alpha * (1.0 - alpha) < mu0 * (1.0 - mu0) {
        Solution {
            form: MechanismForm::FreeReturn,
            mechanism: RefundMechanism::free_return(free_price),
            beta_star: alpha,
            revenue: free_revenue,
            buyer_surplus: free_return_surplus(alpha, mu0, params),
            candidates,
        }
    } else {
        Solution {
            form: MechanismForm::LearningDeterrence,
            mechanism: RefundMechanism::no_return(deter_price),
            beta_star: mu0,
            revenue: deter_price,
            buyer_surplus: mu0 * params.v - deter_price,
            candidates,
        }
    };
    Ok(solution)
}

/// Learning region and the free-return interval of the bad-news model.
pub fn bad_news_region(params: &ModelParams) -> Result<BadNewsRegion> {
    let (lo, hi) = bad_news_learning_region(params)?;
    let crossing = |m: f64| {
        alpha_max(m, params)
            .map(|a| a - (1.0 - m))
            .unwrap_or(f64::NAN)
    };
    let cross = bisect(crossing, lo, 0.5, ROOT_TOL)?;
    Ok(BadNewsRegion {
        mu_low: lo,
        mu_high: hi,
        free_return: (cross, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> ModelParams {
        ModelParams::new(1.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn consumption_belief_examples() {
        let p = canonical();
        assert!((consumption_belief(0.5, &p).unwrap() - 0.8).abs() < 1e-15);
        let t = consumption_belief_inverse(consumption_belief(0.37, &p).unwrap(), &p).unwrap();
        assert!((t - 0.37).abs() < 1e-14);
        assert!(consumption_belief(0.1, &p).is_err());
    }

    #[test]
    fn alpha_max_at_region_edges() {
        let p = canonical();
        let (lo, hi) = bad_news_learning_region(&p).unwrap();
        assert!((alpha_max(lo, &p).unwrap() - lo).abs() < 1e-6);
        assert!((alpha_max(hi, &p).unwrap() - hi).abs() < 1e-6);
        assert!(alpha_max(0.05, &p).is_err());
    }

    #[test]
    fn alpha_max_surplus_zero() {
        let p = canonical();
        for mu0 in [0.2, 0.5, 0.8] {
            let a = alpha_max(mu0, &p).unwrap();
            assert!(a > mu0);
            assert!(free_return_surplus(a, mu0, &p).abs() < 1e-9);
        }
    }

    #[test]
    fn distribution_is_bayes_plausible() {
        let d = BadNewsDistribution::new(0.3, 0.7).unwrap();
        assert!((d.mean() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn prior_near_top_is_free_return() {
        let p = canonical();
        let (_, hi) = bad_news_learning_region(&p).unwrap();
        let s = optimal_mechanism(hi - 1e-3, &p).unwrap();
        assert_eq!(s.form, MechanismForm::FreeReturn);
        assert!(s.buyer_surplus.abs() < 1e-8);
        let s = optimal_mechanism(0.05, &p).unwrap();
        assert_eq!(s.form, MechanismForm::FullPriceNoReturn);
    }

    #[test]
    fn region_crossing() {
        let p = canonical();
        let r = bad_news_region(&p).unwrap();
        let (a, b) = r.free_return;
        assert!(r.mu_low < a && a < 0.5 && b == r.mu_high);
        assert!((alpha_max(a, &p).unwrap() - (1.0 - a)).abs() < 1e-9);
    }

    #[test]
    fn transfer_branches() {
        let p = canonical();
        let a0 = alpha_max(0.4, &p).unwrap();
        assert_eq!(transfer_at(0.3, 0.4, &p).unwrap(), 0.0);
        assert_eq!(
            transfer_at(a0, 0.4, &p).unwrap(),
            consumption_belief_inverse(a0, &p).unwrap()
        );
        assert_eq!(transfer_at((a0 + 1.0) / 2.0, 0.4, &p).unwrap(), 0.0);
    }
}
