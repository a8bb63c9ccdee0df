//! Standard normal functions against 50-digit reference values produced by
//! `tests/data/oracle.py` (mpmath, evaluated at the exact binary64 inputs).
//! The values are frozen here.

#![allow(clippy::excessive_precision)]

use ivq::special_fn::*;
use proptest::prelude::*;

const EPS: f64 = f64::EPSILON;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

const CDF: &[(f64, f64)] = &[
    (0.1, 0.539_827_837_277_028_983_668_933_9),
    (-1.0, 0.158_655_253_931_457_051_414_767_5),
    (-5.0, 2.866_515_718_791_939_116_737_523e-7),
    (-8.0, 6.220_960_574_271_784_123_515_995e-16),
    (-20.0, 2.753_624_118_606_233_695_075_623e-89),
    (-37.0, 5.725_571_222_524_576_822_683_193e-300),
    (1.0, 0.841_344_746_068_542_948_585_232_5),
    (3.0, 0.998_650_101_968_369_905_473_348_2),
    (-0.5, 0.308_537_538_725_986_896_362_295_4),
    (0.3, 0.617_911_422_188_952_633_072_273_6),
    (-2.5, 0.006_209_665_325_776_135_166_978_105),
    (-12.25, 8.399_796_063_633_417_658_918_613e-35),
];

const SCALED: &[(f64, f64)] = &[
    (-1.0, 0.261_578_291_865_123_371_681_843_8),
    (-40.0, 0.009_967_335_188_301_309_983_477_802),
    (-0.2, 0.429_239_808_233_473_691_358_979_9),
    (-3.0, 0.121_513_948_355_562_167_121_206_5),
    (-7.5, 0.052_293_097_118_194_715_190_505_5),
    (0.5, 0.783_529_618_346_428_247_001_256),
];

const SCALED_DIFF: &[(f64, f64, f64)] = &[
    (-2.0, 0.01, 6.252_581_918_572_921_268_481_652e-4),
    (-8.0, 1e-7, 5.961_910_630_670_191_784_426_405e-10),
    (-0.3, 0.05, 0.013_566_475_671_227_137_720_940_03),
    (-5.0, 0.2, 0.002_768_871_296_160_490_195_556_996),
    (0.0, 1e-3, 3.986_924_133_197_194_057_842_514e-4),
    (-1.5, 0.3, 0.024_221_519_396_819_670_865_145_06),
    (-30.0, 0.5, 2.172_903_000_843_133_926_379_396e-4),
];

const QUANTILE: &[(f64, f64)] = &[
    (0.975, 1.959_963_984_540_053_855_604_431),
    (0.45, -0.125_661_346_855_074_006_160_428_4),
    (1e-300, -37.047_096_299_361_199_236_547_04),
    (1e-20, -9.262_340_089_798_407_579_572_095),
    (0.02425, -1.972_961_051_311_884_837_602_748),
    (0.3, -0.524_400_512_708_040_815_969_454_4),
];

#[test]
fn cdf_within_a_few_ulp() {
    for &(x, want) in CDF {
        let got = norm_cdf(x);
        // |x| <= 8 carries the tight bound; deeper tails get a little slack
        // for the libm exp.
        let tol = if x.abs() <= 8.0 { 2.0 } else { 4.0 };
        assert!(rel(got, want) <= tol * EPS, "cdf({x}) = {got}, want {want}, rel {}", rel(got, want));
    }
}

#[test]
fn scaled_cdf_within_a_few_ulp() {
    for &(x, want) in SCALED {
        let got = norm_cdf_scaled(x);
        assert!(rel(got, want) <= 4.0 * EPS, "scaled({x}) = {got}, want {want}");
    }
    let direct = (0.5f64).exp() * norm_cdf(-1.0);
    assert!(rel(norm_cdf_scaled(-1.0), direct) <= 4.0 * EPS);
}

#[test]
fn scaled_diff_keeps_relative_precision() {
    for &(y, d, want) in SCALED_DIFF {
        let got = norm_cdf_scaled_diff(y, d);
        assert!(rel(got, want) <= 8.0 * EPS, "diff({y},{d}) = {got}, want {want}, rel {:e}", rel(got, want));
    }
}

#[test]
fn quantile_matches_reference() {
    for &(p, want) in QUANTILE {
        let got = norm_quantile(p).unwrap();
        assert!(rel(got, want) <= 2.0 * EPS, "quantile({p}) = {got}, want {want}");
    }
    // Φ⁻¹(0.45) is the value the grid's delta relation uses.
    let k = 0.5 * (0.25 - norm_quantile(0.45).unwrap());
    assert!(rel(k, 0.187_830_673_427_537_003_1) <= 2.0 * EPS);
}

#[test]
fn density_matches_central_difference() {
    // φ is even, so difference on the lower tail where Φ keeps its digits.
    let mut x = -5.0;
    while x <= 5.0 {
        let h = 1e-5;
        let at = -f64::abs(x);
        let fd = (norm_cdf(at + h) - norm_cdf(at - h)) / (2.0 * h);
        assert!(rel(fd, norm_pdf(x)) <= 1e-8, "x = {x}");
        x += 0.125;
    }
}

proptest! {
    #[test]
    fn symmetry(x in -38.0f64..38.0) {
        let s = norm_cdf(x) + norm_cdf(-x);
        prop_assert!((s - 1.0).abs() <= EPS, "x = {}, sum = {}", x, s);
    }

    #[test]
    fn monotone(a in -40.0f64..40.0, b in -40.0f64..40.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(norm_cdf(lo) <= norm_cdf(hi));
    }

    #[test]
    fn quantile_round_trip(log_p in -15.0f64..-std::f64::consts::LOG10_2, upper in any::<bool>()) {
        let small = 10f64.powf(log_p);
        let p = if upper { 1.0 - small } else { small };
        let x = norm_quantile(p).unwrap();
        let err = (norm_cdf(x) - p).abs();
        prop_assert!(err <= 1e-15 * p.max(1.0 - p) + 1e-17, "p = {}, err = {:e}", p, err);
    }

    #[test]
    fn quantile_monotone(a in 1e-12f64..(1.0 - 1e-12), b in 1e-12f64..(1.0 - 1e-12)) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(norm_quantile(lo).unwrap() <= norm_quantile(hi).unwrap());
    }

    #[test]
    fn scaled_cdf_unscales_to_cdf(x in -37.0f64..-0.01) {
        let unscaled = norm_cdf_scaled(x) * exp_neg_half_sq(x);
        prop_assert!(rel(unscaled, norm_cdf(x)) <= 4.0 * EPS);
    }

    #[test]
    fn scaled_diff_agrees_with_direct_difference_when_wide(y in -20.0f64..0.0, d in 0.5f64..3.0) {
        // the direct difference cancels, so it carries the rounding of both terms
        let (hi, lo) = (norm_cdf_scaled(y), norm_cdf_scaled(y - d));
        let got = norm_cdf_scaled_diff(y, d);
        prop_assert!((got - (hi - lo)).abs() <= 4.0 * f64::EPSILON * (hi + lo) + 1e-15 * got);
    }

    #[test]
    fn scaled_diff_is_additive(y in -20.0f64..0.0, d1 in 1e-6f64..0.1, d2 in 1e-6f64..0.1) {
        // Φs(y) - Φs(y-d1-d2) = [Φs(y) - Φs(y-d1)] + [Φs(y-d1) - Φs(y-d1-d2)]
        let whole = norm_cdf_scaled_diff(y, d1 + d2);
        let parts = norm_cdf_scaled_diff(y, d1) + norm_cdf_scaled_diff(y - d1, d2);
        prop_assert!(rel(whole, parts) <= 1e-13, "rel {:e}", rel(whole, parts));
    }
}
