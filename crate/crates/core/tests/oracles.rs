//! Values frozen from an independent high-precision evaluation of the
//! closed forms (50-digit arithmetic), compared with the library.

use assassin_core::analytics::{
    classify_stability, gamma_exponent, mean_n, moment_n, second_moment_n, spectral,
    third_moment_n,
};
use assassin_core::KillingDist;

#[test]
fn tail_exponent_values() {
    let cases = [
        (0.01, 97.989_794_855_663_56),
        (0.001, 997.998_997_994_986),
        (0.2, 2.618_033_988_749_895),
    ];
    for (lambda, want) in cases {
        let got = gamma_exponent(lambda).unwrap();
        assert!((got - want).abs() <= 1e-12 * want, "{lambda}: {got} vs {want}");
    }
}

#[test]
fn moment_values() {
    assert!((mean_n(0.2).unwrap() - 1.381_966_011_250_105).abs() < 1e-14);
    assert!((second_moment_n(0.15).unwrap() - 2.228_743_535_462_329).abs() < 1e-12);
    assert!((third_moment_n(0.1).unwrap() - 3.067_712_658_320_47).abs() < 1e-12);
    assert!((third_moment_n(0.15).unwrap() - 12.212_717_492_489_3).abs() < 1e-10);
    assert!((moment_n(0.15, 3).unwrap() - 12.212_717_492_489_3).abs() < 1e-9);
}

#[test]
fn spectral_exponential_at_one() {
    // E Y(1) = exp(alpha) at lambda = 0.2
    let a = spectral(0.2).unwrap().alpha;
    assert!((a.exp() - 1.318_366_146_660_895_6).abs() < 1e-14);
}

#[test]
fn deterministic_killing_criterion() {
    let v = classify_stability(0.3, &KillingDist::deterministic(1.0).unwrap()).unwrap();
    assert!((v.criterion_value - 0.815_484_548_537_713_6).abs() < 1e-12);
}
