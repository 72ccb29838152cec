//! Independent checks of the closed forms: a discrete-time dynamic program
//! for the buyer's best response to a mechanism, and a seeded Monte-Carlo
//! simulation of learning paths.
//!
//! The DP walks a uniform belief grid. Each step of length `dt` brings news
//! with probability `mu * rate * dt`; otherwise the belief moves by Bayes'
//! rule and the continuation value is linearly interpolated. When the new
//! belief falls in the cell just below (or above) the node, the
//! interpolation involves the node itself and is solved implicitly.
//!
//! Under a mechanism that allows returns the DP models a buyer who has
//! already bought and learns at `lambda_post`. Under a no-return price it
//! models a buyer who learns before buying and may walk away.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::exec::Execution;
use crate::learning::{quitting_belief_at_rate, time_to_belief};
use crate::mechanism::RefundMechanism;
use crate::numeric::compensated_sum;
use crate::params::{check_interior, ModelParams};

/// Ties within this margin are resolved in favour of stopping.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub grid_n: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            n_paths: 100_000,
            seed: 0,
            grid_n: 10_000,
        }
    }
}

impl SimConfig {
    /// Checks `rate * dt < 0.1` and `grid_n >= 1000`.
    pub fn validate(&self, rate: f64) -> Result<()> {
        if !(self.dt > 0.0 && rate * self.dt < 0.1) {
            return Err(ModelError::InvalidParams(format!(
                "rate*dt < 0.1 violated: rate = {rate}, dt = {}",
                self.dt
            )));
        }
        if self.grid_n < 1000 {
            return Err(ModelError::InvalidParams(format!(
                "grid_n >= 1000 violated: grid_n = {}",
                self.grid_n
            )));
        }
        if self.n_paths == 0 {
            return Err(ModelError::InvalidParams("n_paths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Keep,
    Return,
    Walk,
    Continue,
}

/// DP best response of the buyer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpReport {
    /// First stopping node reached from the prior without news; the prior
    /// itself when the buyer stops at once.
    pub stop_belief: f64,
    pub stop_action: Action,
    pub action_at_prior: Action,
    pub value_at_prior: f64,
    /// Belief-grid spacing.
    pub cell: f64,
    /// Learning rate the DP used.
    pub rate: f64,
}

/// Learning rate of the buyer facing `m`: post-purchase when returns are
/// possible, pre-purchase otherwise.
pub fn learning_rate_for(m: &RefundMechanism, params: &ModelParams) -> f64 {
    if m.is_no_return() {
        params.lambda
    } else {
        params.lambda_post
    }
}

struct StopRule {
    no_return: bool,
    m: RefundMechanism,
    v: f64,
}

impl StopRule {
    fn best(&self, mu: f64) -> (f64, Action) {
        let keep = self.m.keep_payoff(mu, self.v);
        let (alt, alt_action) = if self.no_return {
            (0.0, Action::Walk)
        } else {
            (self.m.return_payoff(mu, self.v), Action::Return)
        };
        if keep >= alt {
            (keep, Action::Keep)
        } else {
            (alt, alt_action)
        }
    }
}

/// Buyer's DP best response to `m` in the good-news model, starting at `mu0`.
pub fn dp_best_response(
    m: &RefundMechanism,
    mu0: f64,
    params: &ModelParams,
    cfg: &SimConfig,
) -> Result<DpReport> {
    check_interior("mu0", mu0)?;
    let rate = learning_rate_for(m, params);
    cfg.validate(rate)?;
    let rule = StopRule {
        no_return: m.is_no_return(),
        m: *m,
        v: params.v,
    };
    let news = rule.best(1.0).0;
    let q = quitting_belief_at_rate(m.t_b - m.t_c, params.v, params.k, rate).unwrap_or(0.0);
    let floor = (q / 4.0).max(1e-4).min(mu0 / 2.0);
    let n = cfg.grid_n;
    let h = (mu0 - floor) / (n - 1) as f64;
    let node = |i: usize| {
        if i == n - 1 {
            mu0
        } else {
            floor + h * i as f64
        }
    };
    let (dt, k) = (cfg.dt, params.k);

    let mut value = vec![0.0; n];
    let mut action = vec![Action::Continue; n];
    for i in 0..n {
        let mu = node(i);
        let (stop, stop_action) = rule.best(mu);
        let hazard = mu * rate * dt;
        let next = mu * (1.0 - rate * dt) / (1.0 - hazard);
        let a = -k * dt + hazard * news;
        let b = 1.0 - hazard;
        let cont = if next < floor || i == 0 {
            a + b * rule.best(next).0
        } else {
            let pos = (next - floor) / h;
            let j = (pos.floor() as usize).min(i - 1);
            let w = pos - j as f64;
            if j + 1 == i {
                (a + b * (1.0 - w) * value[j]) / (1.0 - b * w)
            } else {
                a + b * ((1.0 - w) * value[j] + w * value[j + 1])
            }
        };
        if stop >= cont - TIE_TOL {
            value[i] = stop;
            action[i] = stop_action;
        } else {
            value[i] = cont;
        }
    }

    let action_at_prior = action[n - 1];
    let (stop_belief, stop_action) = if action_at_prior != Action::Continue {
        (mu0, action_at_prior)
    } else {
        (0..n - 1)
            .rev()
            .find(|&i| action[i] != Action::Continue)
            .map(|i| (node(i), action[i]))
            .unwrap_or((floor, rule.best(floor).1))
    };
    Ok(DpReport {
        stop_belief,
        stop_action,
        action_at_prior,
        value_at_prior: value[n - 1],
        cell: h,
        rate,
    })
}

/// Buyer's DP best response in the bad-news model. The belief drifts up
/// without news; `stop_belief` is the first node above the prior where the
/// buyer stops learning (the consumption belief when keeping).
pub fn dp_best_response_badnews(
    m: &RefundMechanism,
    mu0: f64,
    params: &ModelParams,
    cfg: &SimConfig,
) -> Result<DpReport> {
    check_interior("mu0", mu0)?;
    params.validate_bad_news()?;
    let rate = params.rho;
    cfg.validate(rate)?;
    let rule = StopRule {
        no_return: false,
        m: *m,
        v: params.v,
    };
    let bad_news = rule.best(0.0).0;
    let top = 1.0 - 1e-4;
    if mu0 >= top {
        return Err(ModelError::Domain(format!("prior {mu0} too close to 1")));
    }
    let n = cfg.grid_n;
    let h = (top - mu0) / (n - 1) as f64;
    let node = |i: usize| mu0 + h * i as f64;
    let (dt, k) = (cfg.dt, params.k);

    let mut value = vec![0.0; n];
    let mut action = vec![Action::Continue; n];
    for i in (0..n).rev() {
        let mu = node(i);
        let (stop, stop_action) = rule.best(mu);
        let hazard = (1.0 - mu) * rate * dt;
        let next = mu / (1.0 - hazard);
        let a = -k * dt + hazard * bad_news;
        let b = 1.0 - hazard;
        let cont = if i == n - 1 || next >= top {
            a + b * rule.best(next.min(1.0)).0
        } else {
            let pos = (next - mu0) / h;
            let j = (pos.floor() as usize).max(i).min(n - 2);
            let w = pos - j as f64;
            if j == i {
                (a + b * w * value[j + 1]) / (1.0 - b * (1.0 - w))
            } else {
                a + b * ((1.0 - w) * value[j] + w * value[j + 1])
            }
        };
        if stop >= cont - TIE_TOL {
            value[i] = stop;
            action[i] = stop_action;
        } else {
            value[i] = cont;
        }
    }

    let action_at_prior = action[0];
    let (stop_belief, stop_action) = if action_at_prior != Action::Continue {
        (mu0, action_at_prior)
    } else {
        (1..n)
            .find(|&i| action[i] != Action::Continue)
            .map(|i| (node(i), action[i]))
            .unwrap_or((top, rule.best(top).1))
    };
    Ok(DpReport {
        stop_belief,
        stop_action,
        action_at_prior,
        value_at_prior: value[0],
        cell: h,
        rate,
    })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = compensated_sum(xs.iter().copied()) / n;
        let var = if xs.len() > 1 {
            compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / n).sqrt(),
        }
    }

    /// Whether `target` lies within `width` standard errors of the mean.
    pub fn covers(&self, target: f64, width: f64) -> bool {
        // A zero-variance estimate must hit the target to rounding.
        let band = (width * self.se).max(1e-12 * target.abs().max(1.0));
        (self.mean - target).abs() <= band
    }
}

/// Monte-Carlo summary of simulated learning paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub n_paths: usize,
    pub revenue: Estimate,
    pub return_rate: Estimate,
    pub learning_cost: Estimate,
    /// Buyer's realized payoff net of learning cost.
    pub buyer_value: Estimate,
}

#[derive(Debug, Clone, Copy)]
struct PathOutcome {
    revenue: f64,
    returned: f64,
    cost: f64,
    buyer: f64,
}

/// Simulates `cfg.n_paths` buyers who learn until news arrives or their
/// belief reaches `policy_stop`.
///
/// Path `i` draws from a ChaCha8 stream keyed by `(seed, i)`, so the result
/// does not depend on how paths are scheduled across threads.
pub fn simulate_paths(
    m: &RefundMechanism,
    policy_stop: f64,
    mu0: f64,
    params: &ModelParams,
    cfg: &SimConfig,
    exec: Execution,
) -> Result<PathReport> {
    check_interior("mu0", mu0)?;
    if policy_stop > mu0 {
        return Err(ModelError::Domain(format!(
            "stopping belief {policy_stop} above the prior {mu0}"
        )));
    }
    let rate = learning_rate_for(m, params);
    cfg.validate(rate)?;
    let learns = policy_stop < mu0;
    let horizon = if learns {
        time_to_belief(mu0, policy_stop, rate)?
    } else {
        0.0
    };
    // A buyer facing a no-return price walks away instead of returning.
    let stop_revenue = if m.is_no_return() {
        0.0
    } else {
        m.return_charge()
    };
    let arrival = Exp::new(rate).map_err(|e| ModelError::InvalidParams(e.to_string()))?;
    let (k, v, seed) = (params.k, params.v, cfg.seed);

    let outcomes = exec.map_range(cfg.n_paths, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let high = rng.gen::<f64>() < mu0;
        let worth = if high { v } else { 0.0 };
        if !learns {
            return PathOutcome {
                revenue: m.t_b,
                returned: 0.0,
                cost: 0.0,
                buyer: worth - m.t_b,
            };
        }
        let news_at: f64 = arrival.sample(&mut rng);
        if high && news_at < horizon {
            PathOutcome {
                revenue: m.t_b,
                returned: 0.0,
                cost: k * news_at,
                buyer: v - m.t_b - k * news_at,
            }
        } else {
            let settle = if m.is_no_return() {
                0.0
            } else {
                worth * m.x_r - m.return_charge()
            };
            PathOutcome {
                revenue: stop_revenue,
                returned: 1.0,
                cost: k * horizon,
                buyer: settle - k * horizon,
            }
        }
    });

    let column = |f: fn(&PathOutcome) -> f64| outcomes.iter().map(f).collect::<Vec<_>>();
    Ok(PathReport {
        n_paths: cfg.n_paths,
        revenue: Estimate::from_samples(&column(|o| o.revenue)),
        return_rate: Estimate::from_samples(&column(|o| o.returned)),
        learning_cost: Estimate::from_samples(&column(|o| o.cost)),
        buyer_value: Estimate::from_samples(&column(|o| o.buyer)),
    })
}

/// Closed-form counterparts of the Monte-Carlo estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathExpectations {
    pub revenue: f64,
    pub return_rate: f64,
    pub learning_cost: f64,
    pub buyer_value: f64,
}

pub fn path_expectations(
    m: &RefundMechanism,
    policy_stop: f64,
    mu0: f64,
    params: &ModelParams,
) -> Result<PathExpectations> {
    check_interior("mu0", mu0)?;
    if policy_stop >= mu0 {
        return Ok(PathExpectations {
            revenue: m.t_b,
            return_rate: 0.0,
            learning_cost: 0.0,
            buyer_value: mu0 * params.v - m.t_b,
        });
    }
    let rate = learning_rate_for(m, params);
    let horizon = time_to_belief(mu0, policy_stop, rate)?;
    let gamma = (1.0 - mu0) / (1.0 - policy_stop);
    let stop_revenue = if m.is_no_return() {
        0.0
    } else {
        m.return_charge()
    };
    let high_time = (mu0 - policy_stop) / (rate * mu0 * (1.0 - policy_stop));
    let learning_cost = params.k * (mu0 * high_time + (1.0 - mu0) * horizon);
    let settle = if m.is_no_return() {
        0.0
    } else {
        m.return_payoff(policy_stop, params.v)
    };
    Ok(PathExpectations {
        revenue: gamma * stop_revenue + (1.0 - gamma) * m.t_b,
        return_rate: gamma,
        learning_cost,
        buyer_value: (1.0 - gamma) * (params.v - m.t_b) + gamma * settle - learning_cost,
    })
}

/// DP best response and simulated paths for one mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub dp: DpReport,
    pub paths: PathReport,
    pub expected: PathExpectations,
}

pub fn run_oracle(
    m: &RefundMechanism,
    policy_stop: f64,
    mu0: f64,
    params: &ModelParams,
    cfg: &SimConfig,
    exec: Execution,
) -> Result<OracleReport> {
    Ok(OracleReport {
        dp: dp_best_response(m, mu0, params, cfg)?,
        paths: simulate_paths(m, policy_stop, mu0, params, cfg, exec)?,
        expected: path_expectations(m, policy_stop, mu0, params)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub dt: f64,
    pub value: f64,
    pub error: f64,
}

/// DP value at the prior for `steps` successive halvings of `cfg.dt`,
/// with its error against `reference`. The belief grid is refined in step
/// so interpolation error does not mask the time-step error.
pub fn dp_convergence(
    m: &RefundMechanism,
    mu0: f64,
    params: &ModelParams,
    cfg: &SimConfig,
    reference: f64,
    steps: usize,
    exec: Execution,
) -> Result<Vec<ConvergencePoint>> {
    exec.map_range(steps, |i| {
        let scale = 1usize << i.min(30);
        let run = SimConfig {
            dt: cfg.dt / scale as f64,
            grid_n: cfg.grid_n * scale,
            ..*cfg
        };
        let value = dp_best_response(m, mu0, params, &run)?.value_at_prior;
        Ok(ConvergencePoint {
            dt: run.dt,
            value,
            error: value - reference,
        })
    })
    .into_iter()
    .collect()
}
