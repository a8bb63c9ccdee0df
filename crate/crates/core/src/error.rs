use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Which no-arbitrage bound a quote violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Price below the intrinsic value `max(0, 1 - e^k)` (calls) or `max(0, e^k - 1)` (puts).
    Intrinsic,
    /// Price at or above `D*F` (calls) or `D*K` (puts).
    Upper,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Intrinsic => f.write_str("lower (intrinsic value) bound"),
            Bound::Upper => f.write_str("upper bound"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no-arbitrage violation: price {price} breaches the {bound} {limit}")]
    Arbitrage { bound: Bound, price: f64, limit: f64 },

    #[error("no convergence after {iterations} iterations (last bracket [{lo}, {hi}])")]
    NoConvergence { iterations: u32, lo: f64, hi: f64 },

    #[error("root not bracketed: target {target} outside [{lo}, {hi}]")]
    Bracket { target: f64, lo: f64, hi: f64 },

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of an iterative solver, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::Bracket { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
