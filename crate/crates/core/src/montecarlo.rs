//! Monte Carlo checks of the first-passage reading of the call price.
//!
//! With `Y_k` the first time `B_t + (k/2) t` reaches 1, `Y_k ~ IG(2/k, 1)` and
//! the normalized call is `c(k, v) = P(Y_k > 4/v²)`. Two estimators of that
//! probability are provided: exact inverse Gaussian draws, and Euler paths
//! monitored on a grid (biased upwards, since crossings between grid points go
//! unseen).
//!
//! Paths are split into fixed-size blocks, block `b` drawing from
//! `Stream::substream(seed, b)`, so the estimate depends on the seed and the
//! path count only, never on the number of worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inverse_gaussian::{ig_sample, IGParams};
use crate::rng::Stream;

const EXACT_BLOCK: u64 = 1 << 16;
const PATH_BLOCK: u64 = 1 << 10;
/// Smallest number of Euler steps accepted over the horizon `4/v²`.
pub const MIN_PATH_STEPS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: u64,
    /// Euler step, used by the path estimator only.
    pub dt: f64,
}

impl McConfig {
    pub fn new(n_paths: u64, seed: u64, dt: f64) -> Result<Self> {
        let cfg = Self { n_paths, seed, dt };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::domain("need at least one path"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain(format!("time step must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Sample fraction and its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: u64,
}

impl Estimate {
    fn from_count(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            estimate: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n_paths: n,
        }
    }

    /// Standardized distance to a reference value.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.estimate - reference) / self.std_error
    }
}

fn check_point(k: f64, v: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(format!("log-moneyness must be positive, got {k}")));
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::domain(format!("total volatility must be positive, got {v}")));
    }
    Ok(())
}

/// Counts over blocks of `block` paths in parallel; `run(stream, m)` returns
/// the number of hits among `m` paths drawn from `stream`.
fn count_blocks<F>(cfg: &McConfig, block: u64, run: F) -> Result<u64>
where
    F: Fn(&mut Stream, u64) -> Result<u64> + Sync,
{
    let blocks = cfg.n_paths.div_ceil(block);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let m = block.min(cfg.n_paths - b * block);
            run(&mut Stream::substream(cfg.seed, b), m)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// `P(Y_k > 4/v²)` from exact draws of `Y_k ~ IG(2/k, 1)`.
pub fn survival_estimate_exact(k: f64, v: f64, cfg: &McConfig) -> Result<Estimate> {
    check_point(k, v)?;
    cfg.validate()?;
    let params = IGParams::for_log_moneyness(k)?;
    let horizon = 4.0 / (v * v);
    let hits = count_blocks(cfg, EXACT_BLOCK, |stream, m| {
        let mut hits = 0;
        for _ in 0..m {
            if ig_sample(&params, stream)? > horizon {
                hits += 1;
            }
        }
        Ok(hits)
    })?;
    Ok(Estimate::from_count(hits, cfg.n_paths))
}

/// Fraction of Euler paths of `B_t + (k/2) t` that stay below 1 on
/// `[0, 4/v²]`. The horizon is cut into `⌈(4/v²)/dt⌉` equal steps.
pub fn survival_estimate_path(k: f64, v: f64, cfg: &McConfig) -> Result<Estimate> {
    check_point(k, v)?;
    cfg.validate()?;
    let horizon = 4.0 / (v * v);
    if cfg.dt > horizon / MIN_PATH_STEPS {
        return Err(Error::domain(format!(
            "time step {} too coarse for horizon {horizon}: need at most {}",
            cfg.dt,
            horizon / MIN_PATH_STEPS
        )));
    }
    let steps = (horizon / cfg.dt).ceil() as u64;
    let h = horizon / steps as f64;
    let drift = 0.5 * k * h;
    let scale = h.sqrt();
    let hits = count_blocks(cfg, PATH_BLOCK, |stream, m| {
        let mut hits = 0;
        for _ in 0..m {
            let mut x = 0.0;
            let mut alive = true;
            for _ in 0..steps {
                x += drift + scale * stream.normal();
                if x >= 1.0 {
                    alive = false;
                    break;
                }
            }
            hits += alive as u64;
        }
        Ok(hits)
    })?;
    Ok(Estimate::from_count(hits, cfg.n_paths))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(McConfig::new(0, 1, 1e-3).is_err());
        assert!(McConfig::new(1, 1, 0.0).is_err());
        assert!(McConfig::new(1, 1, f64::NAN).is_err());
        let cfg = McConfig::new(10, 1, 1e-3).unwrap();
        assert!(survival_estimate_exact(0.0, 0.5, &cfg).is_err());
        assert!(survival_estimate_exact(0.2, -1.0, &cfg).is_err());
    }

    #[test]
    fn path_rejects_coarse_steps() {
        // horizon 4, so dt may be at most 0.04
        let cfg = McConfig::new(10, 1, 0.05).unwrap();
        assert!(survival_estimate_path(0.5, 1.0, &cfg).is_err());
        let cfg = McConfig::new(10, 1, 0.04).unwrap();
        assert!(survival_estimate_path(0.5, 1.0, &cfg).is_ok());
    }

    #[test]
    fn blocks_cover_every_path() {
        let cfg = McConfig::new(EXACT_BLOCK + 3, 9, 1.0).unwrap();
        let total = count_blocks(&cfg, EXACT_BLOCK, |_, m| Ok(m)).unwrap();
        assert_eq!(total, EXACT_BLOCK + 3);
    }
}
