//! Refund mechanisms, implementable return policies and expected revenue.
//!
//! A mechanism is a price `t_b` plus a return policy `(x_r, t_r)`: on a
//! return request the buyer keeps the product with probability `x_r` and
//! pays `t_r` net of the refund. To make the buyer stop learning at
//! `beta`, the policy must paste smoothly onto the no-return option value
//! at `beta` (slope `v x_r`) and match its level there.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::learning::{
    deterrence_quitting_belief, ex_ante_utility, information_cost, learning_value, quitting_belief,
    trial_belief, value_v0,
};
use crate::params::{check_interior, ModelParams};

/// Price, keep-probability on return, return transfer and cancellation fee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefundMechanism {
    pub t_b: f64,
    pub x_r: f64,
    pub t_r: f64,
    #[serde(default)]
    pub t_c: f64,
}

impl RefundMechanism {
    /// `(1, t_b)`: a return request changes nothing.
    pub fn no_return(t_b: f64) -> Self {
        Self {
            t_b,
            x_r: 1.0,
            t_r: t_b,
            t_c: 0.0,
        }
    }

    /// `(0, 0)`: full refund, product returned.
    pub fn free_return(t_b: f64) -> Self {
        Self {
            t_b,
            x_r: 0.0,
            t_r: 0.0,
            t_c: 0.0,
        }
    }

    /// Free return with a cancellation fee `t_c`.
    pub fn with_fee(t_b: f64, t_c: f64) -> Self {
        Self {
            t_b,
            x_r: 0.0,
            t_r: 0.0,
            t_c,
        }
    }

    /// Total charge on a return, `t_r + t_c`.
    pub fn return_charge(&self) -> f64 {
        self.t_r + self.t_c
    }

    /// Buyer's payoff from requesting a return at belief `mu`.
    pub fn return_payoff(&self, mu: f64, v: f64) -> f64 {
        mu * v * self.x_r - self.t_r - self.t_c
    }

    pub fn keep_payoff(&self, mu: f64, v: f64) -> f64 {
        mu * v - self.t_b
    }

    /// True when a return request is payoff-equivalent to keeping.
    pub fn is_no_return(&self) -> bool {
        self.x_r == 1.0 && self.return_charge() == self.t_b
    }

    pub fn validate(&self, v: f64) -> Result<()> {
        if !(self.t_b >= 0.0) {
            return Err(ModelError::Domain(format!(
                "price {} is negative",
                self.t_b
            )));
        }
        if !(0.0..=1.0).contains(&self.x_r) {
            return Err(ModelError::Domain(format!(
                "x_r = {} not in [0, 1]",
                self.x_r
            )));
        }
        if !(self.t_r >= 0.0 && self.t_r <= self.t_b) {
            return Err(ModelError::Domain(format!(
                "t_r = {} not in [0, t_b = {}]",
                self.t_r, self.t_b
            )));
        }
        if !(self.t_c >= 0.0) {
            return Err(ModelError::Domain(format!(
                "fee t_c = {} is negative",
                self.t_c
            )));
        }
        if !self.is_no_return() && !(v - self.t_b > v * self.x_r - self.return_charge()) {
            return Err(ModelError::Domain(
                "a high-type buyer would prefer to return".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionKind {
    /// Support `{beta, 1}`.
    GoodNews,
    /// Point mass at the prior.
    Dirac,
}

/// Distribution of the buyer's stopping belief.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingDistribution {
    pub mu0: f64,
    pub beta: f64,
    pub kind: DistributionKind,
}

impl StoppingDistribution {
    pub fn good_news(mu0: f64, beta: f64) -> Result<Self> {
        check_interior("mu0", mu0)?;
        if !(beta >= 0.0 && beta < mu0) {
            return Err(ModelError::Domain(format!(
                "lower support point {beta} must lie in [0, mu0 = {mu0})"
            )));
        }
        Ok(Self {
            mu0,
            beta,
            kind: DistributionKind::GoodNews,
        })
    }

    pub fn dirac(mu0: f64) -> Result<Self> {
        check_interior("mu0", mu0)?;
        Ok(Self {
            mu0,
            beta: mu0,
            kind: DistributionKind::Dirac,
        })
    }

    /// Mass at the lower support point: the return rate.
    pub fn return_rate(&self) -> f64 {
        match self.kind {
            DistributionKind::GoodNews => return_rate(self.mu0, self.beta),
            DistributionKind::Dirac => 0.0,
        }
    }

    /// `(belief, mass)` pairs of the support.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self.kind {
            DistributionKind::GoodNews => {
                let g = self.return_rate();
                vec![(self.beta, g), (1.0, 1.0 - g)]
            }
            DistributionKind::Dirac => vec![(self.mu0, 1.0)],
        }
    }

    pub fn mean(&self) -> f64 {
        self.atoms().iter().map(|(mu, w)| mu * w).sum()
    }

    /// Whether `beta` lies in the implementable set `[beta_0, mu0]`.
    pub fn is_implementable(&self, params: &ModelParams) -> Result<bool> {
        match self.kind {
            DistributionKind::Dirac => Ok(true),
            DistributionKind::GoodNews => {
                let floor = deterrence_quitting_belief(self.mu0, params)?;
                Ok(self.beta >= floor - 1e-12 && self.beta < self.mu0)
            }
        }
    }
}

/// Return rate `(1 - mu0) / (1 - beta)`.
pub fn return_rate(mu0: f64, beta: f64) -> f64 {
    (1.0 - mu0) / (1.0 - beta)
}

/// Allocation rule on return that implements stopping belief `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnPolicy {
    pub x_r: f64,
    pub t_r: f64,
}

/// Return transfer `t_r(beta, t_b)`: the learning cost saved by stopping at
/// `beta` instead of `q(t_b)`.
pub fn return_transfer(beta: f64, t_b: f64, params: &ModelParams) -> Result<f64> {
    let q = quitting_belief(t_b, params)?;
    if beta < q - 1e-12 {
        return Err(ModelError::Domain(format!(
            "stopping belief {beta} below the quitting belief {q} is not implementable"
        )));
    }
    Ok(information_cost(q, beta.max(q), params.k, params.lambda))
}

/// Return policy that makes the buyer stop learning at `beta` under price `t_b`.
pub fn return_policy_for(beta: f64, t_b: f64, params: &ModelParams) -> Result<ReturnPolicy> {
    let q = quitting_belief(t_b, params)?;
    if beta < q - 1e-12 {
        return Err(ModelError::Domain(format!(
            "stopping belief {beta} below the quitting belief {q} is not implementable"
        )));
    }
    let beta = beta.max(q);
    let big_q = trial_belief(t_b, params)?;
    if beta > big_q {
        return Err(ModelError::Domain(format!(
            "stopping belief {beta} above the trial belief {big_q}"
        )));
    }
    let (_, slope) = learning_value(beta, t_b, params)?;
    Ok(ReturnPolicy {
        x_r: (slope / params.v).clamp(0.0, 1.0),
        t_r: return_transfer(beta, t_b, params)?,
    })
}

/// Full mechanism implementing stopping belief `beta` at price `t_b`.
pub fn implementing_mechanism(
    beta: f64,
    t_b: f64,
    params: &ModelParams,
) -> Result<RefundMechanism> {
    let policy = return_policy_for(beta, t_b, params)?;
    Ok(RefundMechanism {
        t_b,
        x_r: policy.x_r,
        t_r: policy.t_r,
        t_c: 0.0,
    })
}

/// Seller's transfer when the buyer reports stopping belief `mu`.
pub fn transfer_at(mu: f64, t_b: f64, mu0: f64, params: &ModelParams) -> Result<f64> {
    if mu >= mu0 {
        return Ok(t_b);
    }
    let q = quitting_belief(t_b, params)?;
    if mu < q {
        Ok(0.0)
    } else {
        Ok(information_cost(q, mu, params.k, params.lambda))
    }
}

/// Expected transfer when the buyer's stopping belief follows `dist`.
pub fn expected_revenue(
    dist: &StoppingDistribution,
    t_b: f64,
    params: &ModelParams,
) -> Result<f64> {
    match dist.kind {
        DistributionKind::Dirac => Ok(t_b),
        DistributionKind::GoodNews => {
            let t_r = return_transfer(dist.beta, t_b, params)?;
            let g = dist.return_rate();
            Ok(g * t_r + (1.0 - g) * t_b)
        }
    }
}

/// Buyer's ex-ante value from buying under `m` and learning until `beta`.
pub fn value_following(
    m: &RefundMechanism,
    beta: f64,
    mu0: f64,
    params: &ModelParams,
) -> Result<f64> {
    if beta >= mu0 {
        return Ok(m
            .keep_payoff(mu0, params.v)
            .max(m.return_payoff(mu0, params.v)));
    }
    let learn = ex_ante_utility(beta, mu0, m.t_b, params)?;
    Ok(learn + return_rate(mu0, beta) * m.return_payoff(beta, params.v))
}

/// Outcome of one implementability condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub pass: bool,
    /// Worst residual; the sign convention is documented per condition.
    pub residual: f64,
}

impl ConditionCheck {
    fn at_least(margin: f64, tol: f64) -> Self {
        Self {
            pass: margin >= -tol,
            residual: margin,
        }
    }

    fn near_zero(residual: f64, tol: f64) -> Self {
        Self {
            pass: residual.abs() <= tol,
            residual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImplementabilityReport {
    /// `V_P(mu0; m) - V0(mu0; t_b)`, must be `>= 0`.
    pub ir: ConditionCheck,
    /// Largest of the value-matching and smooth-pasting residuals at `beta`.
    pub ob: ConditionCheck,
    /// Smaller of the two truth-telling margins, must be `> 0`.
    pub ic: ConditionCheck,
}

impl ImplementabilityReport {
    pub fn all_pass(&self) -> bool {
        self.ir.pass && self.ob.pass && self.ic.pass
    }
}

/// Checks whether `m` implements the stopping belief `beta` at prior `mu0`.
///
/// `beta >= mu0` asks for the no-learning (point mass) distribution.
pub fn check_implementable(
    m: &RefundMechanism,
    beta: f64,
    mu0: f64,
    params: &ModelParams,
    tol: f64,
) -> Result<ImplementabilityReport> {
    check_interior("mu0", mu0)?;
    let v = params.v;
    let benchmark = value_v0(mu0, m.t_b, params)?.value;
    if beta >= mu0 {
        let buy_now = m.keep_payoff(mu0, v).max(m.return_payoff(mu0, v));
        let margin = buy_now - benchmark;
        return Ok(ImplementabilityReport {
            ir: ConditionCheck::at_least(margin, tol),
            ob: ConditionCheck::at_least(margin, tol),
            ic: ConditionCheck {
                pass: true,
                residual: 0.0,
            },
        });
    }

    let ir_margin = value_following(m, beta, mu0, params)? - benchmark;

    let ob = match learning_value(beta, m.t_b, params) {
        Ok((value, slope)) => {
            let level = m.return_payoff(beta, v) - value;
            let pasting = v * m.x_r - slope;
            let worst = if level.abs() >= pasting.abs() {
                level
            } else {
                pasting
            };
            // The buyer must also prefer learning to stopping at the prior.
            let at_prior = value_v0(mu0, m.t_b, params)?.value
                - m.keep_payoff(mu0, v).max(m.return_payoff(mu0, v));
            let learns = at_prior >= -tol && beta >= quitting_belief(m.t_b, params)? - tol;
            ConditionCheck {
                pass: worst.abs() <= tol && learns,
                residual: worst,
            }
        }
        Err(_) => ConditionCheck::near_zero(f64::INFINITY, tol),
    };

    let low_margin = m.return_payoff(beta, v) - m.keep_payoff(beta, v);
    let high_margin = m.keep_payoff(1.0, v) - m.return_payoff(1.0, v);
    let ic_margin = low_margin.min(high_margin);

    Ok(ImplementabilityReport {
        ir: ConditionCheck::at_least(ir_margin, tol),
        ob,
        ic: ConditionCheck {
            pass: ic_margin > -tol,
            residual: ic_margin,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::trial_belief_inverse;

    fn canonical() -> ModelParams {
        ModelParams::new(1.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn policy_at_quitting_belief_is_free_return() {
        let p = canonical();
        for t_b in [0.3, 0.5, 0.7] {
            let q = quitting_belief(t_b, &p).unwrap();
            let pol = return_policy_for(q, t_b, &p).unwrap();
            assert!(pol.x_r.abs() < 1e-12 && pol.t_r.abs() < 1e-15);
        }
    }

    #[test]
    fn return_transfer_example() {
        let p = canonical();
        let pol = return_policy_for(0.3, 0.5, &p).unwrap();
        let hand = 0.1 * ((3.0f64 / 7.0).ln() - 0.25f64.ln());
        assert!((pol.t_r - hand).abs() < 1e-15);
        assert!((pol.t_r - 0.0538997).abs() < 1e-6);
        let (value, slope) = learning_value(0.3, 0.5, &p).unwrap();
        assert!((pol.t_r - (0.3 * slope - value)).abs() < 1e-14);
    }

    #[test]
    fn policy_below_quitting_belief_rejected() {
        let p = canonical();
        assert!(matches!(
            return_policy_for(0.15, 0.5, &p),
            Err(ModelError::Domain(_))
        ));
    }

    #[test]
    fn transfer_function_branches() {
        let p = canonical();
        assert_eq!(transfer_at(0.05, 0.5, 0.5, &p).unwrap(), 0.0);
        assert_eq!(transfer_at(1.0, 0.5, 0.5, &p).unwrap(), 0.5);
        let mid = transfer_at(0.3, 0.5, 0.5, &p).unwrap();
        assert!((mid - return_transfer(0.3, 0.5, &p).unwrap()).abs() < 1e-15);
        let below = transfer_at(0.5 - 1e-9, 0.5, 0.5, &p).unwrap();
        assert!(below < 0.5, "transfer jumps up at the prior");
    }

    #[test]
    fn expected_revenue_examples() {
        let p = canonical();
        let deter = trial_belief_inverse(0.5, &p).unwrap();
        let dirac = StoppingDistribution::dirac(0.5).unwrap();
        assert_eq!(expected_revenue(&dirac, deter, &p).unwrap(), deter);

        let q = quitting_belief(0.6, &p).unwrap();
        assert!((q - 0.25).abs() < 1e-15);
        let free = StoppingDistribution::good_news(0.5, q).unwrap();
        let rev = expected_revenue(&free, 0.6, &p).unwrap();
        assert!((rev - 0.2).abs() < 1e-15);
        assert!((rev - (0.5 - q) / (1.0 - q) * 0.6).abs() < 1e-15);
    }

    #[test]
    fn stopping_distribution_is_bayes_plausible() {
        let d = StoppingDistribution::good_news(0.6, 0.2).unwrap();
        assert!((d.mean() - 0.6).abs() < 1e-15);
        assert!((d.return_rate() - 0.5).abs() < 1e-15);
        assert!(StoppingDistribution::good_news(0.6, 0.7).is_err());
    }

    #[test]
    fn constructed_mechanism_is_implementable() {
        let p = canonical();
        let m = implementing_mechanism(0.3, 0.5, &p).unwrap();
        let report = check_implementable(&m, 0.3, 0.5, &p, 1e-9).unwrap();
        assert!(report.all_pass(), "{report:?}");
        assert!(report.ir.residual.abs() < 1e-12);
    }

    #[test]
    fn perturbed_allocation_breaks_obedience() {
        let p = canonical();
        let mut m = implementing_mechanism(0.3, 0.5, &p).unwrap();
        m.x_r += 0.05;
        let report = check_implementable(&m, 0.3, 0.5, &p, 1e-9).unwrap();
        assert!(!report.ob.pass);
    }

    #[test]
    fn no_return_below_deterrence_price_is_dirac_implementable() {
        let p = canonical();
        let deter = trial_belief_inverse(0.5, &p).unwrap();
        for t_b in [deter, deter - 0.05] {
            let m = RefundMechanism::no_return(t_b);
            assert!(check_implementable(&m, 0.5, 0.5, &p, 1e-9)
                .unwrap()
                .all_pass());
        }
        let m = RefundMechanism::no_return(deter + 0.05);
        assert!(!check_implementable(&m, 0.5, 0.5, &p, 1e-9)
            .unwrap()
            .all_pass());
    }
}
