//! Normalized Black–Scholes pricing and quote normalization.
//!
//! Everything here is in forward units: `k = ln(K/F)`, `c = C/(D·F)` and total
//! volatility `v = σ√T`. With `d1 = -k/v + v/2` and `d2 = d1 - v`,
//!
//! ```text
//! c(k, v) = Φ(d1) - e^k Φ(d2) = e^{-d1²/2} [Φs(d1) - Φs(d2)]
//! ```
//!
//! The second form never forms `e^k` or a denormal `Φ`, and its bracket is a
//! [`norm_cdf_scaled_diff`], so out-of-the-money prices keep full relative
//! precision down to the underflow threshold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Bound, Error, Result};
use crate::special_fn::{
    exp_neg_half_sq, norm_cdf, norm_cdf_scaled, norm_cdf_scaled_diff, norm_mass_symmetric,
    norm_pdf, norm_quantile,
};

/// Above this `k` the near-the-money survival form uses `Φ` directly rather
/// than a pair of `erf` values.
const ERF_FORM_MAX_K: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

impl fmt::Display for OptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptionKind::Call => "call",
            OptionKind::Put => "put",
        })
    }
}

impl FromStr for OptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "call" | "c" => Ok(OptionKind::Call),
            "put" | "p" => Ok(OptionKind::Put),
            other => Err(Error::domain(format!("option kind must be call or put, got {other:?}"))),
        }
    }
}

/// A European option quote in currency units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub strike: f64,
    pub forward: f64,
    pub maturity: f64,
    pub discount: f64,
    pub price: f64,
    pub kind: OptionKind,
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {value}")))
    }
}

impl OptionQuote {
    pub fn new(
        strike: f64,
        forward: f64,
        maturity: f64,
        discount: f64,
        price: f64,
        kind: OptionKind,
    ) -> Result<Self> {
        positive("strike", strike)?;
        positive("forward", forward)?;
        positive("maturity", maturity)?;
        positive("discount factor", discount)?;
        if !(price >= 0.0 && price.is_finite()) {
            return Err(Error::domain(format!("price must be finite and non-negative, got {price}")));
        }
        Ok(Self { strike, forward, maturity, discount, price, kind })
    }

    /// From spot `S`, continuously compounded rate `r` and dividend yield `δ`:
    /// `D = e^{-rT}`, `F = S e^{(r-δ)T}`.
    pub fn from_spot(
        strike: f64,
        spot: f64,
        rate: f64,
        dividend: f64,
        maturity: f64,
        price: f64,
        kind: OptionKind,
    ) -> Result<Self> {
        positive("spot", spot)?;
        positive("maturity", maturity)?;
        if !(rate.is_finite() && dividend.is_finite()) {
            return Err(Error::domain("rate and dividend yield must be finite"));
        }
        let discount = (-rate * maturity).exp();
        let forward = spot * ((rate - dividend) * maturity).exp();
        Self::new(strike, forward, maturity, discount, price, kind)
    }

    /// `ln(K/F)`; exactly zero when `K == F`.
    pub fn log_moneyness(&self) -> f64 {
        if self.strike == self.forward {
            0.0
        } else {
            (self.strike / self.forward).ln()
        }
    }
}

/// A quote in forward units, with the two tail levels the inversion needs.
///
/// `upper` is the out-of-the-money option price measured in units of the
/// smaller of `K` and `F`; it equals the probability `P(Y > 4/v²)`. `lower` is
/// its complement `P(Y <= 4/v²)`. Both are formed straight from the input
/// price so neither inherits the rounding of the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedQuote {
    /// `ln(K/F)`
    pub k: f64,
    /// `C/(D·F)`, put quotes converted by parity
    pub c: f64,
    /// `min(1, K/F)`
    pub m: f64,
    pub kind: OptionKind,
    upper: f64,
    lower: f64,
}

impl NormalizedQuote {
    /// From log-moneyness and a normalized price `value = price/(D·F)` of the
    /// given kind. Rejects prices outside the no-arbitrage interval; a price
    /// exactly at intrinsic value is accepted (it has zero volatility).
    pub fn from_normalized(k: f64, value: f64, kind: OptionKind) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::domain(format!("log-moneyness must be finite, got {k}")));
        }
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::domain(format!(
                "normalized price must be finite and non-negative, got {value}"
            )));
        }
        let m = if k < 0.0 { k.exp() } else { 1.0 };
        let growth = k.exp_m1();
        let (c, upper, lower) = match kind {
            OptionKind::Call if k < 0.0 => (value, (value + growth) / m, (1.0 - value) / m),
            OptionKind::Call => (value, value, 1.0 - value),
            OptionKind::Put if k <= 0.0 => (value - growth, value / m, (m - value) / m),
            OptionKind::Put => (value - growth, value - growth, (1.0 + growth) - value),
        };
        if upper < 0.0 {
            let intrinsic = match kind {
                OptionKind::Call => (-growth).max(0.0),
                OptionKind::Put => growth.max(0.0),
            };
            return Err(Error::Arbitrage { bound: Bound::Intrinsic, price: value, limit: intrinsic });
        }
        if lower <= 0.0 {
            let cap = match kind {
                OptionKind::Call => 1.0,
                OptionKind::Put => 1.0 + growth,
            };
            return Err(Error::Arbitrage { bound: Bound::Upper, price: value, limit: cap });
        }
        Ok(Self { k, c, m, kind, upper, lower })
    }

    /// `P(Y > 4/v²)` for `Y ~ IG(2/|k|, 1)`: the out-of-the-money price per
    /// unit of `min(K, F)`.
    pub fn upper_level(&self) -> f64 {
        self.upper
    }

    /// `P(Y <= 4/v²)`, i.e. `(1 - c)/m` for calls and `(e^k - p)/m` for puts.
    pub fn lower_level(&self) -> f64 {
        self.lower
    }

    /// True when the price sits exactly at intrinsic value.
    pub fn is_intrinsic(&self) -> bool {
        self.upper == 0.0
    }
}

/// Bring a currency quote into forward units.
///
/// The tail levels are formed in currency first, as time value over
/// `D·min(K, F)` and headroom below the upper bound over the same unit, so a
/// price exactly at intrinsic value is recognised exactly.
pub fn normalize(quote: &OptionQuote) -> Result<NormalizedQuote> {
    let q = OptionQuote::new(
        quote.strike,
        quote.forward,
        quote.maturity,
        quote.discount,
        quote.price,
        quote.kind,
    )?;
    let (d, strike, forward) = (q.discount, q.strike, q.forward);
    let k = q.log_moneyness();
    let (intrinsic, cap) = match q.kind {
        OptionKind::Call => (d * (forward - strike).max(0.0), d * forward),
        OptionKind::Put => (d * (strike - forward).max(0.0), d * strike),
    };
    if q.price < intrinsic {
        return Err(Error::Arbitrage { bound: Bound::Intrinsic, price: q.price, limit: intrinsic });
    }
    if q.price >= cap {
        return Err(Error::Arbitrage { bound: Bound::Upper, price: q.price, limit: cap });
    }
    let unit = d * strike.min(forward);
    let value = q.price / (d * forward);
    let c = match q.kind {
        OptionKind::Call => value,
        OptionKind::Put => parity_convert(value, k, ParityDirection::PutToCall),
    };
    Ok(NormalizedQuote {
        k,
        c,
        m: if k < 0.0 { k.exp() } else { 1.0 },
        kind: q.kind,
        upper: (q.price - intrinsic) / unit,
        lower: (cap - q.price) / unit,
    })
}

/// Currency quote for a normalized one, given the forward, discount and maturity.
pub fn denormalize(
    quote: &NormalizedQuote,
    forward: f64,
    maturity: f64,
    discount: f64,
) -> Result<OptionQuote> {
    let value = match quote.kind {
        OptionKind::Call => quote.c,
        OptionKind::Put => parity_convert(quote.c, quote.k, ParityDirection::CallToPut),
    };
    OptionQuote::new(
        forward * quote.k.exp(),
        forward,
        maturity,
        discount,
        discount * forward * value,
        quote.kind,
    )
}

fn check_vol(v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("total volatility must be positive and finite, got {v}")))
    }
}

/// `d1 = v/2 - k/v` as an unevaluated sum `hi + lo`.
///
/// Far out of the money the price carries the factor `e^{-d1²/2}`, which
/// magnifies an absolute error in `d1` by `|d1|`; the low part removes the
/// rounding of `k/v` and of the subtraction from that factor.
fn d1_split(k: f64, v: f64) -> (f64, f64) {
    let q = k / v;
    let q_err = (-q).mul_add(v, k) / v;
    let h = 0.5 * v;
    let hi = h - q;
    let t = hi - h;
    let sub_err = (h - (hi - t)) + (-q - t);
    (hi, sub_err - q_err)
}

/// Call price at `k >= 0`, where the option is out of the money.
fn otm_call(k: f64, v: f64) -> f64 {
    let (d1, d1_lo) = d1_split(k, v);
    let d2 = d1 - v;
    if d1 < 0.0 {
        // e^{-(hi + lo)²/2} ≈ e^{-hi²/2} (1 - hi·lo)
        let g = exp_neg_half_sq(d1);
        let gauss = g - g * (d1 * d1_lo);
        gauss * norm_cdf_scaled_diff(d1, v)
    } else if k <= ERF_FORM_MAX_K {
        // Φ(d1) - Φ(d2) - (e^k - 1) Φ(d2)
        0.5 * (norm_mass_symmetric(d1) - norm_mass_symmetric(d2)) - k.exp_m1() * norm_cdf(d2)
    } else {
        norm_cdf(d1) - exp_neg_half_sq(d1) * norm_cdf_scaled(d2)
    }
}

/// Normalized call price `C/(D·F)` at log-moneyness `k` and total volatility `v`.
pub fn bs_normalized_call(k: f64, v: f64) -> Result<f64> {
    check_vol(v)?;
    if !k.is_finite() {
        return Err(Error::domain(format!("log-moneyness must be finite, got {k}")));
    }
    if k >= 0.0 {
        Ok(otm_call(k, v))
    } else {
        // in the money: intrinsic value plus e^k times the mirrored call
        Ok(-k.exp_m1() + k.exp() * otm_call(-k, v))
    }
}

/// Normalized put price `P/(D·F)`.
pub fn bs_normalized_put(k: f64, v: f64) -> Result<f64> {
    Ok(parity_convert(bs_normalized_call(k, v)?, k, ParityDirection::CallToPut))
}

/// `∂c/∂v = φ(d1)`; the same for calls and puts.
pub fn bs_vega_normalized(k: f64, v: f64) -> Result<f64> {
    check_vol(v)?;
    Ok(norm_pdf(-k / v + 0.5 * v))
}

/// `k = v (v/2 - Φ⁻¹(Δ))`: the log-moneyness at which a call with total
/// volatility `v` has forward delta `Δ`.
pub fn delta_to_logmoneyness(v: f64, delta: f64) -> Result<f64> {
    check_vol(v)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(v * (0.5 * v - norm_quantile(delta)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityDirection {
    CallToPut,
    PutToCall,
}

/// `c - p = 1 - e^k` in forward units.
pub fn parity_convert(value: f64, k: f64, direction: ParityDirection) -> f64 {
    match direction {
        ParityDirection::CallToPut => value + k.exp_m1(),
        ParityDirection::PutToCall => value - k.exp_m1(),
    }
}
