//! Inverse Gaussian distribution in drift form.
//!
//! `IG(μ, λ)` is stored as `(λ, θ)` with `θ = λ/μ`, so the infinite-mean
//! (Lévy) limit is simply `θ = 0` and nothing diverges as `μ → ∞`.
//!
//! All probabilities are evaluated on the *normal-score* coordinates
//!
//! ```text
//! a = √(λ/x),   b = θ √(x/λ),   ζ = b - a,   a·b = θ,   a + b = √(ζ² + 4θ)
//! ```
//!
//! in which the two-term closed form reads
//!
//! ```text
//! F(x) = e^{-ζ²/2} [Φs(ζ)  + Φs(-(a+b))]
//! S(x) = e^{-ζ²/2} [Φs(-ζ) - Φs(-(a+b))]        (S = 1 - F)
//! ```
//!
//! with `Φs` the scaled normal distribution from [`crate::special_fn`]. The
//! exponential factor `e^{2θ}` of the textbook form has been absorbed, so no
//! intermediate overflows, and the difference in `S` goes through the
//! cancellation-free [`norm_cdf_scaled_diff`].
//!
//! The quantile is found by a bracketed Newton iteration on the log tail
//! probability as a function of `ζ`. In that variable the log probability is
//! `-ζ²/2` plus a slowly varying term, so Newton converges in a handful of
//! steps from a starting point read off `Φ⁻¹`, in both tails.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::special_fn::{
    exp_neg_half_sq, lower_quantile, norm_cdf, norm_cdf_scaled, norm_cdf_scaled_diff,
    norm_mass_symmetric, norm_mass_symmetric_inverse, norm_pdf, INV_SQRT_2PI,
};

/// Hard cap on quantile iterations.
pub const MAX_QUANTILE_ITERATIONS: u32 = 100;

/// Below this drift the survival function near the mode is assembled from
/// `erf` values, which keeps relative accuracy in the Lévy-like regime.
const SMALL_DRIFT: f64 = 0.25;

/// `Φ⁻¹(1/4)`: every upper-tail quantile with level `<= 1/2` has `ζ` above it.
const UPPER_BRACKET_FLOOR: f64 = -0.674_489_750_196_081_7;

/// Inverse Gaussian parameters `(λ, θ = λ/μ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IGParams {
    lambda: f64,
    theta: f64,
}

impl IGParams {
    /// From mean `μ` (may be `+∞`) and shape `λ`.
    pub fn new(mean: f64, shape: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::domain(format!("inverse Gaussian mean must be positive, got {mean}")));
        }
        Self::from_drift(shape, shape / mean)
    }

    /// From shape `λ` and drift `θ = λ/μ`.
    pub fn from_drift(shape: f64, theta: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::domain(format!(
                "inverse Gaussian shape must be positive and finite, got {shape}"
            )));
        }
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::domain(format!(
                "inverse Gaussian drift must be finite and non-negative, got {theta}"
            )));
        }
        Ok(Self { lambda: shape, theta })
    }

    /// `IG(2/|k|, 1)`: the law whose survival function at `4/v²` is the
    /// normalized Black–Scholes price of the out-of-the-money call at `|k|`.
    pub fn for_log_moneyness(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::domain(format!("log-moneyness must be finite, got {k}")));
        }
        Self::from_drift(1.0, 0.5 * k.abs())
    }

    pub fn shape(&self) -> f64 {
        self.lambda
    }

    pub fn drift(&self) -> f64 {
        self.theta
    }

    /// `μ = λ/θ`; infinite when `θ = 0`.
    pub fn mean(&self) -> f64 {
        self.lambda / self.theta
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        mu * mu * mu / self.lambda
    }
}

/// `GIG(p, a, b)` in the `(p, a, b)` convention with density `∝ x^{p-1} e^{-(a x + b/x)/2}`.
/// Only the member `GIG(1/2, 1/4, k²)`, the law of `4/Y` for `Y ~ IG(2/|k|, 1)`, is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GIGParams {
    pub p_order: f64,
    pub a: f64,
    pub b: f64,
}

impl GIGParams {
    pub fn for_log_moneyness(k: f64) -> Self {
        Self {
            p_order: 0.5,
            a: 0.25,
            b: k * k,
        }
    }
}

/// Which tail a probability level refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `F(x) = level`
    Lower,
    /// `S(x) = 1 - F(x) = level`
    Upper,
}

/// A point of the distribution in normal-score coordinates (standardized to `λ = 1`).
///
/// `zeta_lo` is a small correction, `ζ = zeta + zeta_lo`, kept only for the
/// Gaussian factor `e^{-ζ²/2}`: deep in a tail that factor turns an absolute
/// error in `ζ` into a relative error `|ζ|` times larger.
#[derive(Debug, Clone, Copy)]
struct Score {
    zeta: f64,
    zeta_lo: f64,
    a: f64,
    b: f64,
}

impl Score {
    fn from_x(x: f64, p: &IGParams) -> Self {
        let u = x / p.lambda;
        let root = u.sqrt();
        let a = 1.0 / root;
        let b = p.theta * root;
        // ζ = (θu - 1)/√u, with numerator and 1/√u each carried as hi + lo
        let prod = p.theta * u;
        let prod_err = p.theta.mul_add(u, -prod);
        let num = prod - 1.0;
        let t = num - prod;
        let num_lo = ((prod - (num - t)) + (-1.0 - t)) + prod_err;
        let a_lo = a * ((-a).mul_add(root, 1.0) - 0.5 * (-root).mul_add(root, u) / u);
        let zeta = num * a;
        let zeta_lo = num.mul_add(a, -zeta) + num * a_lo + num_lo * a;
        Self { zeta, zeta_lo, a, b }
    }

    /// Invert `ζ = θ s - 1/s` for `s = √u > 0`, picking the cancellation-free form.
    fn from_zeta(zeta: f64, theta: f64) -> Self {
        let width = zeta.hypot(2.0 * theta.sqrt());
        if zeta < 0.0 {
            let a = 0.5 * (width - zeta);
            Self { zeta, zeta_lo: 0.0, a, b: 2.0 * theta / (width - zeta) }
        } else {
            let b = 0.5 * (zeta + width);
            Self { zeta, zeta_lo: 0.0, a: 2.0 * theta / (zeta + width), b }
        }
    }

    /// `e^{-ζ²/2}` including the low part of `ζ` to first order.
    fn gauss(&self) -> f64 {
        let g = exp_neg_half_sq(self.zeta);
        g - g * (self.zeta * self.zeta_lo)
    }

    fn width(&self) -> f64 {
        self.a + self.b
    }

    /// Lower tail divided by `e^{-ζ²/2}`.
    fn lower_scaled(&self) -> f64 {
        norm_cdf_scaled(self.zeta) + norm_cdf_scaled(-self.width())
    }

    /// Upper tail divided by `e^{-ζ²/2}`, for `ζ >= 0`.
    fn upper_scaled(&self) -> f64 {
        norm_cdf_scaled_diff(-self.zeta, 2.0 * self.a)
    }

    /// Upper tail for `ζ < 0`, where it is at least moderately large.
    fn upper_near_mode(&self, theta: f64) -> f64 {
        let width = self.width();
        if theta <= SMALL_DRIFT {
            0.5 * (norm_mass_symmetric(-self.zeta) + norm_mass_symmetric(width))
                - (2.0 * theta).exp_m1() * norm_cdf(-width)
        } else {
            norm_cdf(-self.zeta) - self.gauss() * norm_cdf_scaled(-width)
        }
    }

    /// `(F, S)`: the smaller tail in a form accurate when it is small, the
    /// larger one as its complement.
    fn tails(&self, theta: f64) -> (f64, f64) {
        if self.zeta <= 0.0 {
            let lower = self.gauss() * self.lower_scaled();
            if lower <= 0.5 {
                (lower, 1.0 - lower)
            } else {
                let upper = self.upper_near_mode(theta);
                (1.0 - upper, upper)
            }
        } else {
            let upper = self.gauss() * self.upper_scaled();
            (1.0 - upper, upper)
        }
    }

    /// `(ln P, d ln P / dζ)` for the requested tail.
    fn log_tail(&self, tail: Tail, theta: f64) -> (f64, f64) {
        // dF/dζ = φ(ζ) · 2a/(a+b)
        let slope = 2.0 * self.a / self.width();
        let half_sq = 0.5 * self.zeta * self.zeta;
        match tail {
            Tail::Lower if self.zeta <= 0.0 => {
                let scaled = self.lower_scaled();
                (scaled.ln() - half_sq, INV_SQRT_2PI * slope / scaled)
            }
            Tail::Lower => {
                let lower = 1.0 - exp_neg_half_sq(self.zeta) * self.upper_scaled();
                (lower.ln(), norm_pdf(self.zeta) * slope / lower)
            }
            Tail::Upper if self.zeta >= 0.0 => {
                let scaled = self.upper_scaled();
                (scaled.ln() - half_sq, -INV_SQRT_2PI * slope / scaled)
            }
            Tail::Upper => {
                let upper = self.upper_near_mode(theta);
                (upper.ln(), -norm_pdf(self.zeta) * slope / upper)
            }
        }
    }
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("inverse Gaussian argument must be positive, got {x}")))
    }
}

fn tails(x: f64, params: &IGParams) -> Result<(f64, f64)> {
    check_x(x)?;
    if x == f64::INFINITY {
        return Ok((1.0, 0.0));
    }
    Ok(Score::from_x(x, params).tails(params.theta))
}

/// Distribution function `F(x)`.
pub fn ig_cdf(x: f64, params: &IGParams) -> Result<f64> {
    tails(x, params).map(|(lower, _)| lower)
}

/// Survival function `1 - F(x)`, evaluated directly so small values keep
/// their relative precision.
pub fn ig_survival(x: f64, params: &IGParams) -> Result<f64> {
    tails(x, params).map(|(_, upper)| upper)
}

/// Density `√(λ/(2πx³)) exp(-λ(x-μ)²/(2μ²x))`, written as `φ(ζ) a³ / λ`.
pub fn ig_pdf(x: f64, params: &IGParams) -> Result<f64> {
    check_x(x)?;
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    let s = Score::from_x(x, params);
    Ok(INV_SQRT_2PI * s.gauss() * s.a * s.a * s.a / params.lambda)
}

/// Result of a quantile solve with its diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct QuantileSolution {
    score: Score,
    lambda: f64,
    /// Tail probability evaluations performed.
    pub iterations: u32,
    /// `|P(x) - level|` at the last evaluated iterate.
    pub residual: f64,
}

impl QuantileSolution {
    pub fn x(&self) -> f64 {
        self.lambda / (self.score.a * self.score.a)
    }

    /// `x^{-1/2}`, obtained without rounding through `x`.
    pub fn inv_sqrt_x(&self) -> f64 {
        self.score.a / self.lambda.sqrt()
    }

    /// Normal score `ζ = θ√(x/λ) - √(λ/x)` of the solution.
    pub fn zeta(&self) -> f64 {
        self.score.zeta
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("quantile probability must lie in (0, 1), got {level}")))
    }
}

/// Solve `P(x) = level` where `P` is the chosen tail.
///
/// Levels above 1/2 are mapped to the opposite tail first (`1 - level` is
/// exact there), so the iteration always works on a probability `<= 1/2`.
pub fn ig_quantile_solve(level: f64, tail: Tail, params: &IGParams) -> Result<QuantileSolution> {
    check_level(level)?;
    let (tail, level) = if level > 0.5 {
        let other = match tail {
            Tail::Lower => Tail::Upper,
            Tail::Upper => Tail::Lower,
        };
        (other, 1.0 - level)
    } else {
        (tail, level)
    };
    let theta = params.theta;
    let lambda = params.lambda;

    if theta == 0.0 {
        // Lévy limit: F = 2Φ(-a), S = Φ(a) - Φ(-a).
        let a = match tail {
            Tail::Lower => -lower_quantile(0.5 * level),
            Tail::Upper => norm_mass_symmetric_inverse(level)?,
        };
        let score = Score { zeta: -a, zeta_lo: 0.0, a, b: 0.0 };
        let (lower, upper) = score.tails(0.0);
        let model = if tail == Tail::Lower { lower } else { upper };
        return Ok(QuantileSolution {
            score,
            lambda,
            iterations: 0,
            residual: (model - level).abs(),
        });
    }

    // F lies between Φ(ζ) and 2Φ(ζ), and S <= Φ(-ζ); both give brackets. A
    // drift only shortens the passage time, so the drift-free (Lévy)
    // quantile bounds the root from above as well, and is the closer bound
    // when θ is small.
    let z = lower_quantile(level);
    let (mut lo, mut hi, mut zeta) = match tail {
        Tail::Lower => (z - 1.0, z, z),
        Tail::Upper => {
            // 2Φ(a) - 1 >= 0.737 a for a <= 0.675, which caps the Lévy a;
            // skip it when even that cap cannot beat the Gaussian bound
            let a_cap = (1.357 * level).min(-UPPER_BRACKET_FLOOR);
            let hi = if theta < a_cap * (a_cap - z) {
                let a = norm_mass_symmetric_inverse(level)?;
                (theta / a - a).min(-z)
            } else {
                -z
            };
            (UPPER_BRACKET_FLOOR, hi, hi)
        }
    };
    let increasing = tail == Tail::Lower;
    let target = level.ln();

    for iteration in 1..=MAX_QUANTILE_ITERATIONS {
        let score = Score::from_zeta(zeta, theta);
        let (log_p, slope) = score.log_tail(tail, theta);
        let gap = log_p - target;
        let residual = level * gap.exp_m1().abs();
        if gap == 0.0 {
            return Ok(QuantileSolution { score, lambda, iterations: iteration, residual });
        }
        if (gap > 0.0) == increasing {
            hi = zeta;
        } else {
            lo = zeta;
        }
        let step = gap / slope;
        let tolerance = 2.0 * f64::EPSILON * score.width();
        let mut next = zeta - step;
        let converged = step.abs() <= tolerance;
        if !converged && !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if converged || hi - lo <= tolerance {
            return Ok(QuantileSolution {
                score: Score::from_zeta(next, theta),
                lambda,
                iterations: iteration,
                residual,
            });
        }
        zeta = next;
    }
    let to_x = |z: f64| {
        let s = Score::from_zeta(z, theta);
        lambda / (s.a * s.a)
    };
    Err(Error::NoConvergence {
        iterations: MAX_QUANTILE_ITERATIONS,
        lo: to_x(lo),
        hi: to_x(hi),
    })
}

/// Quantile function `F⁻¹(p)`.
pub fn ig_quantile(p: f64, params: &IGParams) -> Result<f64> {
    ig_quantile_solve(p, Tail::Lower, params).map(|s| s.x())
}

/// Inverse survival function: the `x` with `1 - F(x) = q`.
pub fn ig_quantile_upper(q: f64, params: &IGParams) -> Result<f64> {
    ig_quantile_solve(q, Tail::Upper, params).map(|s| s.x())
}

/// Total implied variance as the `c`-quantile of `Z = 4/Y`,
/// `Z ~ GIG(1/2, 1/4, k²)`, `Y ~ IG(2/|k|, 1)`.
///
/// Because `P(Z < v²) = P(Y > 4/v²)`, this is `4 / F_Y⁻¹(1 - c)`; the
/// inverse is taken on the survival side at level `c` so small prices keep
/// their digits.
pub fn gig_quantile_variance(c: f64, k: f64) -> Result<f64> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::domain(format!(
            "variance quantile needs finite non-zero log-moneyness, got {k}"
        )));
    }
    let params = IGParams::for_log_moneyness(k)?;
    Ok(4.0 / ig_quantile_upper(c, &params)?)
}

/// One exact draw from `IG(μ, λ)` by the Michael–Schucany–Haas transform.
pub fn ig_sample(params: &IGParams, stream: &mut Stream) -> Result<f64> {
    if params.theta == 0.0 {
        return Err(Error::Unsupported(
            "sampling needs a finite mean (drift > 0)".to_string(),
        ));
    }
    let mu = params.mean();
    let nu = stream.normal();
    let t = mu * nu * nu / (2.0 * params.lambda);
    // smaller root μ(1 + t - √(t² + 2t)), rationalized
    let x = mu / (1.0 + t + (t * (t + 2.0)).sqrt());
    let u = stream.uniform();
    Ok(if u * (mu + x) <= mu { x } else { mu * (mu / x) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(IGParams::new(0.0, 1.0).is_err());
        assert!(IGParams::new(1.0, 0.0).is_err());
        assert!(IGParams::new(1.0, f64::INFINITY).is_err());
        assert!(IGParams::from_drift(1.0, -1.0).is_err());
        let levy = IGParams::new(f64::INFINITY, 1.0).unwrap();
        assert_eq!(levy.drift(), 0.0);
        assert_eq!(IGParams::for_log_moneyness(-0.3).unwrap().drift(), 0.15);
        assert_eq!(IGParams::for_log_moneyness(0.3).unwrap().shape(), 1.0);
    }

    #[test]
    fn argument_validation() {
        let p = IGParams::new(1.0, 1.0).unwrap();
        assert!(ig_cdf(0.0, &p).is_err());
        assert!(ig_survival(-1.0, &p).is_err());
        assert!(ig_pdf(0.0, &p).is_err());
        assert!(ig_quantile(0.0, &p).is_err());
        assert!(ig_quantile(1.0, &p).is_err());
        assert!(ig_quantile(f64::NAN, &p).is_err());
        assert!(gig_quantile_variance(0.5, 0.0).is_err());
    }

    #[test]
    fn limits() {
        let p = IGParams::new(2.0, 1.0).unwrap();
        assert_eq!(ig_cdf(f64::INFINITY, &p).unwrap(), 1.0);
        assert_eq!(ig_survival(f64::INFINITY, &p).unwrap(), 0.0);
        assert_eq!(ig_cdf(1e-300, &p).unwrap(), 0.0);
        assert_eq!(ig_survival(1e-300, &p).unwrap(), 1.0);
        assert!(ig_survival(1e6, &p).unwrap() < 1e-300);
    }

    #[test]
    fn levy_limit_is_closed_form() {
        let p = IGParams::new(f64::INFINITY, 1.0).unwrap();
        let x = 2.5_f64;
        let want = 2.0 * norm_cdf(-(1.0 / x).sqrt());
        assert!((ig_cdf(x, &p).unwrap() - want).abs() < 1e-16);
        let sol = ig_quantile_solve(0.3, Tail::Upper, &p).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!((ig_survival(sol.x(), &p).unwrap() - 0.3).abs() < 1e-16);
    }

    #[test]
    fn sampler_rejects_infinite_mean() {
        let p = IGParams::new(f64::INFINITY, 1.0).unwrap();
        assert!(matches!(ig_sample(&p, &mut Stream::new(1)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn density_at_unit_mean() {
        let p = IGParams::new(1.0, 1.0).unwrap();
        assert!((ig_pdf(1.0, &p).unwrap() - INV_SQRT_2PI).abs() < 1e-16);
    }
}
