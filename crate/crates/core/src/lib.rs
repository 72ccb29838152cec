//! Revenue-maximizing refund mechanisms for a buyer who learns their
//! valuation through Poisson experimentation.
//!
//! The closed forms live in [`learning`], [`mechanism`] and [`optimizer`];
//! [`postpurchase`] and [`badnews`] cover faster post-purchase learning and
//! the bad-news model. [`oracle`] re-derives the buyer's behaviour by
//! dynamic programming and Monte-Carlo so the closed forms can be checked.

// Parameter checks are written `!(x > 0.0)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod badnews;
pub mod error;
pub mod exec;
pub mod learning;
pub mod mechanism;
pub mod numeric;
pub mod optimizer;
pub mod oracle;
pub mod params;
pub mod postpurchase;

pub use error::{ModelError, Result};
pub use exec::Execution;
pub use mechanism::{RefundMechanism, StoppingDistribution};
pub use optimizer::{MechanismForm, Solution};
pub use oracle::{OracleReport, SimConfig};
pub use params::ModelParams;
