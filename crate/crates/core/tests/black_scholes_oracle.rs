//! Normalized Black–Scholes pricing against mpmath values from
//! `tests/data/oracle.py`, plus the pricing invariants.

#![allow(clippy::excessive_precision)]

use ivq::black_scholes::*;
use ivq::inverse_gaussian::{ig_survival, IGParams};
use ivq::special_fn::{norm_cdf, norm_pdf, norm_quantile};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// (k, v, c)
const CALLS: &[(f64, f64, f64)] = &[
    (0.0, 0.2, 0.079_655_674_554_057_967_337_867_82),
    (0.1, 0.5, 0.159_260_507_413_991_663_145_442_1),
    (0.3, 0.2, 0.006_785_352_684_196_130_709_889_272),
    (5.0, 0.2, 2.954_833_357_710_714_776_855_206e-139),
    (0.01, 0.001, 7.512_025_722_358_201_156_549_619e-28),
    (-0.2, 0.3, 0.222_035_016_483_269_868_383_231),
    (0.2, 0.5, 0.125_448_356_710_601_531_997_095_4),
    (0.5, 1.0, 0.238_421_708_134_876_628_318_156_2),
    (1.0, 0.3, 5.488_749_644_612_936_558_659_768e-5),
    (2.0, 3.0, 0.685_874_165_716_049_366_422_235_9),
    (-3.0, 0.1, 0.950_212_931_632_136_057_020_657_6),
    (1e-8, 1e-4, 3.988_922_842_243_795_659_258_068e-5),
];

#[test]
fn calls_match_reference() {
    // A few tens of ulp at worst: narrow brackets go through a quadrature of
    // the scaled-tail derivative, which cancels by up to a factor d1².
    for &(k, v, want) in CALLS {
        let got = bs_normalized_call(k, v).unwrap();
        assert!(rel(got, want) <= 1e-14, "c({k}, {v}) = {got:e}, want {want:e}, rel {:e}", rel(got, want));
    }
}

#[test]
fn atm_is_twice_phi_minus_one() {
    let got = bs_normalized_call(0.0, 0.2).unwrap();
    assert!(rel(got, 2.0 * norm_cdf(0.1) - 1.0) <= 1e-15);
}

#[test]
fn delta_relation() {
    let k = delta_to_logmoneyness(0.5, 0.45).unwrap();
    assert!(rel(k, 0.187_830_673_427_537_003_080_214_2) <= 2.0 * f64::EPSILON);
    let c = bs_normalized_call(k, 0.5).unwrap();
    assert!(rel(c, 0.129_315_916_673_087_653_224_065_3) <= 1e-14);
    assert_eq!(delta_to_logmoneyness(0.3, 0.5).unwrap(), 0.045);
    assert!((delta_to_logmoneyness(0.01, 0.5).unwrap() - 5e-5).abs() < 1e-20);
    assert!(delta_to_logmoneyness(0.3, 0.0).is_err());
    assert!(delta_to_logmoneyness(0.3, 1.0).is_err());
}

#[test]
fn call_equals_ig_survival_at_oracle_points() {
    for &(k, v) in &[(0.1, 0.5), (0.3, 0.2)] {
        let p = IGParams::for_log_moneyness(k).unwrap();
        let ig = ig_survival(4.0 / (v * v), &p).unwrap();
        let bs = bs_normalized_call(k, v).unwrap();
        assert!((ig - bs).abs() <= 1e-15 + 1e-13 * bs);
    }
}

#[test]
fn vega_examples() {
    assert_eq!(bs_vega_normalized(0.0, 0.6).unwrap(), norm_pdf(0.3));
    let (k, v, h) = (0.3, 0.4, 1e-6);
    let fd = (bs_normalized_call(k, v + h).unwrap() - bs_normalized_call(k, v - h).unwrap()) / (2.0 * h);
    assert!(rel(fd, bs_vega_normalized(k, v).unwrap()) <= 1e-8);
    assert!(bs_vega_normalized(0.1, 1e3).unwrap() < 1e-300);
}

#[test]
fn parity_examples() {
    assert_eq!(parity_convert(0.123, 0.0, ParityDirection::CallToPut), 0.123);
    let p = parity_convert(0.1, 0.2, ParityDirection::CallToPut);
    assert!(rel(p, 0.321_402_758_160_169_834) <= 2.0 * f64::EPSILON);
    // one rounding of the put-sized sum survives the round trip
    let back = parity_convert(p, 0.2, ParityDirection::PutToCall);
    assert!((back - 0.1).abs() <= f64::EPSILON * p);
}

#[test]
fn normalize_examples() {
    let c = bs_normalized_call(0.0, 0.2).unwrap();
    let q = OptionQuote::new(100.0, 100.0, 1.0, 0.95, 95.0 * c, OptionKind::Call).unwrap();
    let n = normalize(&q).unwrap();
    assert_eq!((n.k, n.m), (0.0, 1.0));
    assert!(rel(n.c, c) <= 2.0 * f64::EPSILON);

    let put = OptionQuote::new(100.0, 100.0, 1.0, 1.0, 7.0, OptionKind::Put).unwrap();
    assert_eq!(normalize(&put).unwrap().c, 0.07);

    let itm = OptionQuote::new(80.0, 100.0, 1.0, 1.0, 25.0, OptionKind::Call).unwrap();
    assert!(rel(normalize(&itm).unwrap().m, 0.8) <= 2.0 * f64::EPSILON);
}

#[test]
fn normalize_denormalize_round_trip() {
    for &(strike, kind, price) in &[
        (90.0, OptionKind::Call, 14.0),
        (110.0, OptionKind::Call, 3.0),
        (90.0, OptionKind::Put, 2.5),
        (120.0, OptionKind::Put, 21.0),
    ] {
        let q = OptionQuote::new(strike, 100.0, 0.5, 0.97, price, kind).unwrap();
        let back = denormalize(&normalize(&q).unwrap(), 100.0, 0.5, 0.97).unwrap();
        assert!(rel(back.strike, strike) <= 4.0 * f64::EPSILON);
        assert!(rel(back.price, price) <= 1e-13, "{kind} {strike}: {} vs {price}", back.price);
        assert_eq!(back.kind, kind);
    }
}

fn moneyness() -> impl Strategy<Value = f64> {
    -5.0f64..5.0
}

proptest! {
    #[test]
    fn strictly_increasing_in_vol(k in moneyness(), a in 0.01f64..5.0, b in 0.01f64..5.0) {
        prop_assume!((a - b).abs() > 1e-6 * a.max(b));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(bs_normalized_call(k, lo).unwrap() <= bs_normalized_call(k, hi).unwrap());
        // strict on the out-of-the-money side, where the time value is not
        // hidden below the last digit of the intrinsic value
        let (a_otm, b_otm) = (bs_normalized_call(k.abs(), lo).unwrap(), bs_normalized_call(k.abs(), hi).unwrap());
        prop_assert!(a_otm < b_otm || b_otm == 0.0);
    }

    #[test]
    fn inside_no_arbitrage_bounds(k in -3.0f64..3.0, v in 0.05f64..50.0) {
        let c = bs_normalized_call(k, v).unwrap();
        let intrinsic = (-k.exp_m1()).max(0.0);
        prop_assert!(c >= intrinsic && c <= 1.0, "c = {}", c);
        // the time value, seen on the out-of-the-money side where it is not
        // swamped by the intrinsic value, is strictly positive until it underflows
        let otm = bs_normalized_call(k.abs(), v).unwrap();
        if k.abs() / v - 0.5 * v < 37.0 {
            prop_assert!(otm > 0.0);
        }
        if v < 10.0 {
            prop_assert!(c < 1.0 && otm < 1.0);
        }
    }

    #[test]
    fn itm_call_mirrors_otm_call(k in -5.0f64..-1e-6, v in 0.01f64..3.0) {
        // 1 - c̃ = (1 - c) F/K where c̃ is the call at -k; the rounding of c
        // itself (half an ulp of a number below 1) is magnified by F/K
        let c = bs_normalized_call(k, v).unwrap();
        let mirrored = bs_normalized_call(-k, v).unwrap();
        let m = k.exp();
        let lhs = 1.0 - mirrored;
        let rhs = (1.0 - c) / m;
        prop_assert!((lhs - rhs).abs() <= 2.0 * f64::EPSILON * (1.0 + 1.0 / m), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn vega_is_the_price_slope(k in moneyness(), v in 0.05f64..3.0) {
        let vega = bs_vega_normalized(k, v).unwrap();
        prop_assume!(vega > 1e-3);
        let h = 1e-5 * v;
        let fd = (bs_normalized_call(k, v + h).unwrap() - bs_normalized_call(k, v - h).unwrap()) / (2.0 * h);
        prop_assert!(rel(fd, vega) <= 1e-8, "fd {} vega {}", fd, vega);
    }

    #[test]
    fn parity_is_an_involution(value in 0.0f64..1.0, k in moneyness()) {
        let p = parity_convert(value, k, ParityDirection::CallToPut);
        let back = parity_convert(p, k, ParityDirection::PutToCall);
        prop_assert!((back - value).abs() <= 2.0 * f64::EPSILON * p.abs().max(1.0));
    }

    #[test]
    fn delta_relation_matches_delta(v in 0.01f64..2.0, delta in 0.01f64..0.99) {
        let k = delta_to_logmoneyness(v, delta).unwrap();
        prop_assert!((norm_cdf(-k / v + 0.5 * v) - delta).abs() <= 1e-14);
        prop_assert!(norm_quantile(delta).unwrap().is_finite());
    }
}
