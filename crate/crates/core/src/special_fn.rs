//! Standard normal distribution to full double precision.
//!
//! The cumulative distribution is built on W. J. Cody's rational Chebyshev
//! approximations of `erf`/`erfcx`. Instead of evaluating `erfc(-x/√2)` we
//! keep the Gaussian factor `exp(-x²/2)` separate and evaluate it from `x`
//! with an error-free split of `x²`; that way the rounding of `x/√2` only
//! enters the slowly varying rational part and the result stays within a few
//! ulp in relative terms all the way into the underflow range.
//!
//! Besides `Φ` and `Φ⁻¹` the module exposes the *scaled* cumulative
//! distribution `Φs(x) = e^{x²/2} Φ(x)` and a cancellation-free difference
//! `Φs(y) - Φs(y - δ)`. Inverse Gaussian probabilities and Black–Scholes prices
//! are both of the form `e^{-y²/2} [Φs(y) ∓ Φs(y')]`, so these two helpers are
//! what keeps tiny option prices and far tail probabilities accurate.
//!
//! Leaf functions propagate NaN instead of returning errors.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{Error, Result};

/// `1/√(2π)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!("{value} is not a probability")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

// ---------------------------------------------------------------------------
// Cody's erf / erfcx kernels
// ---------------------------------------------------------------------------

/// Below this |z| erf is evaluated from its own rational approximation.
const ERF_SPLIT: f64 = 0.46875;
/// `ERF_SPLIT * √2`: the same split expressed on the normal scale.
const NORMAL_SPLIT: f64 = ERF_SPLIT * SQRT_2;

const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6,
    113.864_154_151_050_16,
    377.485_237_685_302,
    3_209.377_589_138_469_5,
    0.185_777_706_184_603_15,
];
const ERF_B: [f64; 4] = [
    23.601_290_952_344_122,
    244.024_637_934_444_17,
    1_282.616_526_077_372_3,
    2_844.236_833_439_170_6,
];
const ERFC_C: [f64; 9] = [
    0.564_188_496_988_670_1,
    8.883_149_794_388_377,
    66.119_190_637_141_63,
    298.635_138_197_400_1,
    881.952_221_241_769_1,
    1_712.047_612_634_070_7,
    2_051.078_377_826_071_6,
    1_230.339_354_797_997_2,
    2.153_115_354_744_038_5e-8,
];
const ERFC_D: [f64; 8] = [
    15.744_926_110_709_835,
    117.693_950_891_312_5,
    537.181_101_862_009_9,
    1_621.389_574_566_690_2,
    3_290.799_235_733_459_7,
    4_362.619_090_143_247,
    3_439.367_674_143_721_6,
    1_230.339_354_803_749_4,
];
const ERFC_P: [f64; 6] = [
    0.305_326_634_961_232_36,
    0.360_344_899_949_804_45,
    0.125_781_726_111_229_26,
    0.016_083_785_148_742_275,
    6.587_491_615_298_378e-4,
    0.016_315_387_137_302_097,
];
const ERFC_Q: [f64; 5] = [
    2.568_520_192_289_822,
    1.872_952_849_923_460_4,
    0.527_905_102_951_428_4,
    0.060_518_341_312_441_32,
    0.002_335_204_976_268_691_8,
];

/// `erf(z) / z` for `|z| <= ERF_SPLIT`, as a function of `z²`.
#[inline]
fn erf_small_ratio(zz: f64) -> f64 {
    let a = &ERF_A;
    let b = &ERF_B;
    ((((a[4] * zz + a[0]) * zz + a[1]) * zz + a[2]) * zz + a[3])
        / ((((zz + b[0]) * zz + b[1]) * zz + b[2]) * zz + b[3])
}

/// `erfcx(z)` for `ERF_SPLIT < z <= 4`.
#[inline]
fn erfcx_mid(z: f64) -> f64 {
    let c = &ERFC_C;
    let d = &ERFC_D;
    let mut num = c[8] * z;
    let mut den = z;
    for i in 0..7 {
        num = (num + c[i]) * z;
        den = (den + d[i]) * z;
    }
    (num + c[7]) / (den + d[7])
}

/// `z² R(z²)` where `erfcx(z) = (1/√π - z^{-2} R(z^{-2})) / z` for `z > 4`;
/// argument is `w = 1/z²`.
#[inline]
fn erfcx_tail_correction(w: f64) -> f64 {
    let p = &ERFC_P;
    let q = &ERFC_Q;
    w * (((((p[5] * w + p[0]) * w + p[1]) * w + p[2]) * w + p[3]) * w + p[4])
        / (((((w + q[0]) * w + q[1]) * w + q[2]) * w + q[3]) * w + q[4])
}

/// `erfcx(z) = e^{z²} erfc(z)` for `z > ERF_SPLIT`.
#[inline]
fn erfcx_large(z: f64) -> f64 {
    if z <= 4.0 {
        erfcx_mid(z)
    } else {
        (INV_SQRT_PI - erfcx_tail_correction(1.0 / (z * z))) / z
    }
}

/// `e^{-x²/2}`, with `x²` split exactly so the exponent carries no rounding.
#[inline]
pub fn exp_neg_half_sq(x: f64) -> f64 {
    let hi = x * x;
    if !hi.is_finite() {
        return if x.is_nan() { f64::NAN } else { 0.0 };
    }
    let lo = x.mul_add(x, -hi);
    (-0.5 * hi).exp() * (1.0 - 0.5 * lo)
}

#[inline]
fn exp_pos_half_sq(x: f64) -> f64 {
    let hi = x * x;
    let lo = x.mul_add(x, -hi);
    (0.5 * hi).exp() * (1.0 + 0.5 * lo)
}

// ---------------------------------------------------------------------------
// Public surface
// ---------------------------------------------------------------------------

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * exp_neg_half_sq(x)
}

/// Standard normal cumulative distribution `Φ(x)`.
///
/// Relative accuracy is a few ulp everywhere `Φ(x)` is a normal double.
/// Returns NaN for NaN input.
pub fn norm_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax <= NORMAL_SPLIT {
        let z = x * FRAC_1_SQRT_2;
        return 0.5 + 0.5 * z * erf_small_ratio(z * z);
    }
    if ax == f64::INFINITY {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let tail = 0.5 * erfcx_large(ax * FRAC_1_SQRT_2) * exp_neg_half_sq(x);
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Scaled cumulative distribution `Φs(x) = e^{x²/2} Φ(x)`.
///
/// For `x <= 0` this is a bounded, slowly varying function (it behaves like
/// `φ(0)/|x|` in the left tail) and never under- or overflows. For positive
/// `x` it grows like `e^{x²/2}` and overflows past `x ≈ 37.7`.
pub fn norm_cdf_scaled(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax <= NORMAL_SPLIT {
        let z = x * FRAC_1_SQRT_2;
        return (0.5 * x * x).exp() * (0.5 + 0.5 * z * erf_small_ratio(z * z));
    }
    if ax == f64::INFINITY {
        return if x > 0.0 { f64::INFINITY } else { 0.0 };
    }
    let half_erfcx = 0.5 * erfcx_large(ax * FRAC_1_SQRT_2);
    if x < 0.0 {
        half_erfcx
    } else {
        exp_pos_half_sq(x) - half_erfcx
    }
}

/// Derivative `Φs'(x) = 1/√(2π) + x Φs(x)`.
///
/// In the left tail the two terms nearly cancel; for `x < -4√2` the value is
/// taken straight from the asymptotic part of the `erfcx` approximation.
pub fn norm_cdf_scaled_deriv(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < -NORMAL_SPLIT {
        let z = -x * FRAC_1_SQRT_2;
        if z == f64::INFINITY {
            return 0.0;
        }
        if z > 4.0 {
            return erfcx_tail_correction(1.0 / (z * z)) * FRAC_1_SQRT_2;
        }
        return INV_SQRT_2PI + 0.5 * x * erfcx_mid(z);
    }
    INV_SQRT_2PI + x * norm_cdf_scaled(x)
}

const GAUSS4: [(f64, f64); 2] = [
    (0.339_981_043_584_856_26, 0.652_145_154_862_546_2),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_7),
];
const GAUSS6: [(f64, f64); 3] = [
    (0.238_619_186_083_196_93, 0.467_913_934_572_691_37),
    (0.661_209_386_466_264_5, 0.360_761_573_048_138_94),
    (0.932_469_514_203_152, 0.171_324_492_379_169_75),
];

/// `Φs(y) - Φs(y - delta)` for `delta >= 0`, accurate in relative terms even
/// when `delta` is tiny compared with `y`.
///
/// Wide intervals are differenced directly. Narrow ones integrate `Φs'`
/// with Gauss–Legendre; the integrand is positive, so no digits are lost.
pub fn norm_cdf_scaled_diff(y: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let ratio = delta / (1.0 + y.abs());
    if !(ratio < 0.125) {
        return norm_cdf_scaled(y) - norm_cdf_scaled(y - delta);
    }
    let half = 0.5 * delta;
    let mid = y - half;
    let integrate = |nodes: &[(f64, f64)]| {
        nodes.iter().fold(0.0, |acc, &(node, weight)| {
            let off = half * node;
            acc + weight * (norm_cdf_scaled_deriv(mid + off) + norm_cdf_scaled_deriv(mid - off))
        }) * half
    };
    if ratio <= 1.0 / 32.0 {
        integrate(&GAUSS4)
    } else {
        integrate(&GAUSS6)
    }
}

/// `Φ(x) - Φ(-x) = erf(x/√2)`, odd in `x`, with full relative accuracy near 0.
pub fn norm_mass_symmetric(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax <= NORMAL_SPLIT {
        let z = x * FRAC_1_SQRT_2;
        return z * erf_small_ratio(z * z);
    }
    let mass = if ax == f64::INFINITY {
        1.0
    } else {
        1.0 - erfcx_large(ax * FRAC_1_SQRT_2) * exp_neg_half_sq(ax)
    };
    mass.copysign(x)
}

/// Inverse of [`norm_mass_symmetric`] on `(0, 1)`: the `x > 0` with
/// `Φ(x) - Φ(-x) = mass`, i.e. `Φ⁻¹((1 + mass)/2)` without losing the
/// digits of a small `mass` to the addition.
pub fn norm_mass_symmetric_inverse(mass: f64) -> Result<f64> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::domain(format!(
            "symmetric normal mass must lie in (0, 1), got {mass}"
        )));
    }
    let mut x = if mass > 0.5 {
        -lower_quantile(0.5 * (1.0 - mass))
    } else {
        norm_quantile(0.5 + 0.5 * mass)?
    };
    if mass <= 0.5 {
        for _ in 0..2 {
            let density = 2.0 * norm_pdf(x);
            x -= (norm_mass_symmetric(x) - mass) / density;
        }
    }
    Ok(x)
}

// Wichura's AS241 (PPND16).
const Q_A: [f64; 8] = [
    3.387_132_872_796_366_5,
    133.141_667_891_784_38,
    1_971.590_950_306_551_3,
    13_731.693_765_509_461,
    45_921.953_931_549_87,
    67_265.770_927_008_7,
    33_430.575_583_588_13,
    2_509.080_928_730_122_7,
];
const Q_B: [f64; 8] = [
    1.0,
    42.313_330_701_600_91,
    687.187_007_492_057_9,
    5_394.196_021_424_751,
    21_213.794_301_586_597,
    39_307.895_800_092_71,
    28_729.085_735_721_943,
    5_226.495_278_852_854_5,
];
const Q_C: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_545,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    0.241_780_725_177_450_6,
    0.022_723_844_989_269_184,
    7.745_450_142_783_414e-4,
];
const Q_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_8,
    1.676_384_830_183_803_8,
    0.689_767_334_985_1,
    0.148_103_976_427_480_08,
    0.015_198_666_563_616_457,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_8e-9,
];
const Q_E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    0.296_560_571_828_504_9,
    0.026_532_189_526_576_124,
    0.001_242_660_947_388_078_4,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const Q_F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_9,
    0.136_929_880_922_735_8,
    0.014_875_361_290_850_615,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

#[inline]
fn horner(coeffs: &[f64; 8], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Rational AS241 estimate of `Φ⁻¹(p)` for `0 < p <= 0.5`.
fn ppnd_lower(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * horner(&Q_A, r) / horner(&Q_B, r);
    }
    let r = (-p.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        horner(&Q_C, r) / horner(&Q_D, r)
    } else {
        let r = r - 5.0;
        horner(&Q_E, r) / horner(&Q_F, r)
    };
    -x
}

/// `Φ⁻¹(p)` for `0 < p <= 0.5`: AS241 plus one Halley step against [`norm_cdf`].
pub(crate) fn lower_quantile(p: f64) -> f64 {
    let x = ppnd_lower(p);
    let density = norm_pdf(x);
    if density > 0.0 {
        let t = (norm_cdf(x) - p) / density;
        x - t / (1.0 + 0.5 * x * t)
    } else {
        x
    }
}

/// Standard normal quantile `Φ⁻¹(p)`.
///
/// The upper half is evaluated as `-Φ⁻¹(1 - p)`; `1 - p` is exact there, so
/// both tails keep full relative accuracy.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if p.is_nan() {
        return Err(Error::domain("quantile probability is NaN"));
    }
    if p <= 0.0 {
        return Err(Error::domain(format!(
            "quantile probability {p} is at or below the lower bound 0"
        )));
    }
    if p >= 1.0 {
        return Err(Error::domain(format!(
            "quantile probability {p} is at or above the upper bound 1"
        )));
    }
    Ok(if p <= 0.5 {
        lower_quantile(p)
    } else {
        -lower_quantile(1.0 - p)
    })
}
