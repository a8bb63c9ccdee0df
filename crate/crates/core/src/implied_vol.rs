//! Implied volatility: the explicit inverse Gaussian route and a reference
//! root finder.
//!
//! The explicit route reads the total volatility off a single quantile,
//!
//! ```text
//! v = 2 / √x,   P(Y > x) = upper level,   Y ~ IG(2/|k|, 1)
//! ```
//!
//! solving on whichever of the two tail levels is below 1/2. The quantile
//! solver already works with `1/√x`, so `v` is formed without rounding through
//! `x`, and it reports its own residual; the pricing formula is never called.
//!
//! The reference route is a plain safeguarded Newton iteration on the pricing
//! formula. It exists to cross-check the explicit route and as a timing
//! baseline.

use serde::Serialize;

use crate::black_scholes::{
    bs_normalized_call, bs_vega_normalized, normalize, NormalizedQuote, OptionKind, OptionQuote,
};
use crate::error::{Error, Result};
use crate::inverse_gaussian::{ig_quantile_solve, IGParams, Tail};
use crate::special_fn::{norm_mass_symmetric, norm_mass_symmetric_inverse};

/// Search interval of the reference inverter, in total volatility.
pub const REFERENCE_BRACKET: (f64, f64) = (1e-10, 50.0);
pub const REFERENCE_MAX_ITERATIONS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    ExplicitIGQuantile,
    ATMClosedForm,
    ReferenceRootFind,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::ExplicitIGQuantile => "explicit",
            Method::ATMClosedForm => "atm",
            Method::ReferenceRootFind => "reference",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionResult {
    /// `v = σ√T`
    pub total_vol: f64,
    pub sigma: f64,
    pub method: Method,
    pub iterations: u32,
    /// `|c_model - c_input|` in forward units.
    pub residual: f64,
    /// Evaluations of the Black–Scholes formula spent on this inversion.
    pub pricer_calls: u32,
    /// The price sat exactly at intrinsic value and `v = 0` was returned.
    pub at_intrinsic: bool,
}

impl InversionResult {
    fn with_maturity(mut self, maturity: f64) -> Self {
        self.sigma = self.total_vol / maturity.sqrt();
        self
    }

    fn intrinsic(method: Method) -> Self {
        Self {
            total_vol: 0.0,
            sigma: 0.0,
            method,
            iterations: 0,
            residual: 0.0,
            pricer_calls: 0,
            at_intrinsic: true,
        }
    }
}

/// Total volatility of a normalized quote by the inverse Gaussian quantile
/// (or the closed form at `k = 0`).
pub fn total_vol_explicit(quote: &NormalizedQuote) -> Result<InversionResult> {
    let k = quote.k;
    if k == 0.0 {
        if quote.is_intrinsic() {
            return Ok(InversionResult::intrinsic(Method::ATMClosedForm));
        }
        // c = Φ(v/2) - Φ(-v/2)
        let v = 2.0 * norm_mass_symmetric_inverse(quote.c)?;
        return Ok(InversionResult {
            total_vol: v,
            sigma: v,
            method: Method::ATMClosedForm,
            iterations: 0,
            residual: (norm_mass_symmetric(0.5 * v) - quote.c).abs(),
            pricer_calls: 1,
            at_intrinsic: false,
        });
    }
    if quote.is_intrinsic() {
        return Ok(InversionResult::intrinsic(Method::ExplicitIGQuantile));
    }
    let params = IGParams::for_log_moneyness(k)?;
    let (upper, lower) = (quote.upper_level(), quote.lower_level());
    let solution = if upper <= lower {
        ig_quantile_solve(upper, Tail::Upper, &params)?
    } else {
        ig_quantile_solve(lower, Tail::Lower, &params)?
    };
    let v = 2.0 * solution.inv_sqrt_x();
    Ok(InversionResult {
        total_vol: v,
        sigma: v,
        method: Method::ExplicitIGQuantile,
        iterations: solution.iterations,
        residual: solution.residual * quote.m,
        pricer_calls: 0,
        at_intrinsic: false,
    })
}

/// Implied volatility of a call or put quote by the explicit route.
pub fn implied_vol_explicit(quote: &OptionQuote) -> Result<InversionResult> {
    let normalized = normalize(quote)?;
    Ok(total_vol_explicit(&normalized)?.with_maturity(quote.maturity))
}

/// Implied volatility of a put, with the quantile level `(e^k - p)/m` (or its
/// complement `p/m`) formed from the put price itself rather than from a
/// parity-converted call.
pub fn implied_vol_put_direct(quote: &OptionQuote) -> Result<InversionResult> {
    if quote.kind != OptionKind::Put {
        return Err(Error::domain("put-direct inversion needs a put quote"));
    }
    implied_vol_explicit(quote)
}

/// Total volatility by safeguarded Newton iteration on the pricing formula.
///
/// Works on the out-of-the-money side: solves `ln c(|k|, v) = ln q` where
/// `q` is the upper tail level, with derivative `vega / c`. Steps that leave
/// the current bracket are replaced by bisection (geometric while the bracket
/// spans more than a factor of two).
pub fn total_vol_reference(quote: &NormalizedQuote) -> Result<InversionResult> {
    let method = Method::ReferenceRootFind;
    if quote.is_intrinsic() {
        return Ok(InversionResult::intrinsic(method));
    }
    let kk = quote.k.abs();
    let target = quote.upper_level();
    let log_target = target.ln();
    let (mut lo, mut hi) = REFERENCE_BRACKET;
    let mut pricer_calls = 0;

    let floor = bs_normalized_call(kk, lo)?;
    let ceiling = bs_normalized_call(kk, hi)?;
    pricer_calls += 2;
    if !(target > floor && target < ceiling) {
        return Err(Error::Bracket { target, lo, hi });
    }

    // at-the-money closed form as if k were zero
    let mut v = if target < 1.0 {
        2.0 * norm_mass_symmetric_inverse(target)?
    } else {
        hi
    };
    if !(v > lo && v < hi) {
        v = (lo * hi).sqrt();
    }

    for iteration in 1..=REFERENCE_MAX_ITERATIONS {
        let price = bs_normalized_call(kk, v)?;
        pricer_calls += 1;
        let gap = price.ln() - log_target;
        let residual = quote.m * (price - target).abs();
        let done = |v: f64| InversionResult {
            total_vol: v,
            sigma: v,
            method,
            iterations: iteration,
            residual,
            pricer_calls,
            at_intrinsic: false,
        };
        if gap == 0.0 {
            return Ok(done(v));
        }
        if gap < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let step = gap * price / bs_vega_normalized(kk, v)?;
        let tolerance = 2.0 * f64::EPSILON * v;
        let mut next = v - step;
        let converged = step.abs() <= tolerance;
        if !converged && !(next > lo && next < hi) {
            next = if hi > 2.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        }
        if converged || hi - lo <= tolerance {
            return Ok(done(next));
        }
        v = next;
    }
    Err(Error::NoConvergence { iterations: REFERENCE_MAX_ITERATIONS, lo, hi })
}

/// Implied volatility of a call or put quote by the reference root finder.
pub fn implied_vol_reference(quote: &OptionQuote) -> Result<InversionResult> {
    let normalized = normalize(quote)?;
    Ok(total_vol_reference(&normalized)?.with_maturity(quote.maturity))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(strike: f64, price: f64) -> OptionQuote {
        OptionQuote::new(strike, 100.0, 1.0, 1.0, price, OptionKind::Call).unwrap()
    }

    #[test]
    fn intrinsic_price_gives_zero_vol() {
        let r = implied_vol_explicit(&call(90.0, 10.0)).unwrap();
        assert!(r.at_intrinsic);
        assert_eq!(r.sigma, 0.0);
        let r = implied_vol_reference(&call(110.0, 0.0)).unwrap();
        assert!(r.at_intrinsic);
    }

    #[test]
    fn put_direct_rejects_calls() {
        assert!(implied_vol_put_direct(&call(100.0, 5.0)).is_err());
    }

    #[test]
    fn maturity_scales_sigma() {
        let c = bs_normalized_call(0.1, 0.4).unwrap();
        let q = OptionQuote::new(100.0 * 0.1f64.exp(), 100.0, 4.0, 1.0, 100.0 * c, OptionKind::Call).unwrap();
        let r = implied_vol_explicit(&q).unwrap();
        assert!((r.total_vol - 0.4).abs() < 1e-14);
        assert!((r.sigma - 0.2).abs() < 1e-14);
    }

    #[test]
    fn explicit_never_prices() {
        let c = bs_normalized_call(0.3, 0.2).unwrap();
        let nq = NormalizedQuote::from_normalized(0.3, c, OptionKind::Call).unwrap();
        assert_eq!(total_vol_explicit(&nq).unwrap().pricer_calls, 0);
        assert!(total_vol_reference(&nq).unwrap().pricer_calls > 2);
    }
}
