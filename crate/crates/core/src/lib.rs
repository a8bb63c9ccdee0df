//! Explicit implied volatility through the inverse Gaussian quantile.
//!
//! The normalized Black–Scholes call price at log-moneyness `k > 0` and total
//! volatility `v` equals the probability that an `IG(2/k, 1)` variable exceeds
//! `4/v²`. Inverting that survival function gives `v` directly, without any
//! root search on the pricing formula.

// `!(x > 0.0)` is used on purpose so that NaN takes the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bench;
pub mod black_scholes;
pub mod cli;
pub mod error;
pub mod implied_vol;
pub mod inverse_gaussian;
pub mod montecarlo;
pub mod rng;
pub mod special_fn;

pub use error::{Bound, Error, Result};
