//! Model primitives.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Primitives of the buyer-seller model.
///
/// `lambda` is the pre-purchase good-news rate, `lambda_post` the
/// post-purchase rate and `rho` the bad-news rate (only read by
/// [`crate::badnews`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub v: f64,
    pub k: f64,
    pub lambda: f64,
    pub lambda_post: f64,
    pub rho: f64,
}

impl ModelParams {
    /// Good-news model with equal pre- and post-purchase rates; `rho`
    /// defaults to `lambda`.
    pub fn new(v: f64, k: f64, lambda: f64) -> Result<Self> {
        let p = Self {
            v,
            k,
            lambda,
            lambda_post: lambda,
            rho: lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_lambda_post(mut self, lambda_post: f64) -> Result<Self> {
        self.lambda_post = lambda_post;
        self.validate()?;
        Ok(self)
    }

    /// Sets the bad-news rate. `4k < rho v` is checked here.
    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        self.rho = rho;
        self.validate()?;
        self.validate_bad_news()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("v", self.v),
            ("k", self.k),
            ("lambda", self.lambda),
            ("lambda_post", self.lambda_post),
            ("rho", self.rho),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(ModelError::InvalidParams(format!(
                    "{name} must be positive and finite, got {x}"
                )));
            }
        }
        if 4.0 * self.k >= self.lambda * self.v {
            return Err(ModelError::InvalidParams(format!(
                "4k < lambda*v violated: 4k = {}, lambda*v = {}",
                4.0 * self.k,
                self.lambda * self.v
            )));
        }
        if self.lambda_post < self.lambda {
            return Err(ModelError::InvalidParams(format!(
                "lambda_post >= lambda violated: lambda_post = {}, lambda = {}",
                self.lambda_post, self.lambda
            )));
        }
        Ok(())
    }

    pub fn validate_bad_news(&self) -> Result<()> {
        if 4.0 * self.k >= self.rho * self.v {
            return Err(ModelError::InvalidParams(format!(
                "4k < rho*v violated: 4k = {}, rho*v = {}",
                4.0 * self.k,
                self.rho * self.v
            )));
        }
        Ok(())
    }

    /// Effective learning cost `k / lambda`.
    pub fn cost_ratio(&self) -> f64 {
        self.k / self.lambda
    }

    /// Same model with `k` rescaled so that `k / lambda = c`.
    pub fn with_cost_ratio(&self, c: f64) -> Result<Self> {
        let mut p = *self;
        p.k = c * self.lambda;
        p.validate()?;
        Ok(p)
    }
}

pub(crate) fn check_belief(name: &str, mu: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(ModelError::Domain(format!(
            "{name} = {mu} is not in [0, 1]"
        )));
    }
    Ok(())
}

pub(crate) fn check_interior(name: &str, mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(ModelError::Domain(format!(
            "{name} = {mu} is not in (0, 1)"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_expensive_learning() {
        let err = ModelParams::new(1.0, 0.25, 1.0).unwrap_err();
        assert!(matches!(err, ModelError::InvalidParams(ref m) if m.contains("4k < lambda*v")));
    }

    #[test]
    fn rejects_slow_post_purchase_learning() {
        let p = ModelParams::new(1.0, 0.1, 2.0).unwrap();
        assert!(p.with_lambda_post(1.0).is_err());
        assert!(p.with_lambda_post(2.0).is_ok());
    }

    #[test]
    fn bad_news_rate_checked() {
        let p = ModelParams::new(1.0, 0.1, 1.0).unwrap();
        assert!(p.with_rho(0.3).is_err());
        assert!(p.with_rho(0.5).is_ok());
    }
}
