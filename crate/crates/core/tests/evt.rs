mod common;

use common::*;
use openset_core::evt::recognition_decision_detailed;
use openset_core::{fit_weibull, recognition_decision, weibull_survival, HyperParams, Label, WeibullParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn weibull_mle_recovers_parameters() {
    let samples = weibull_samples(2.0, 1.0, 2000, 7);
    let p = fit_weibull(&samples, 3).unwrap();
    assert!((p.shape - 2.0).abs() / 2.0 < 0.05, "{p:?}");
    assert!((p.scale - 1.0).abs() < 0.05, "{p:?}");
}

#[test]
fn weibull_mle_recovers_other_shapes() {
    for (k, lambda, seed) in [(0.7, 2.0, 1), (1.0, 0.3, 2), (5.0, 10.0, 3)] {
        let p = fit_weibull(&weibull_samples(k, lambda, 2000, seed), 3).unwrap();
        assert!((p.shape - k).abs() / k < 0.05, "{k}: {p:?}");
        assert!((p.scale - lambda).abs() / lambda < 0.05, "{lambda}: {p:?}");
    }
}

#[test]
fn fitted_shape_solves_likelihood_equation() {
    let v = weibull_samples(1.7, 3.0, 50, 9);
    let p = fit_weibull(&v, 3).unwrap();
    let n = v.len() as f64;
    let s0: f64 = v.iter().map(|x| x.powf(p.shape)).sum();
    let s1: f64 = v.iter().map(|x| x.powf(p.shape) * x.ln()).sum();
    let mean_ln: f64 = v.iter().map(|x| x.ln()).sum::<f64>() / n;
    assert!((s1 / s0 - 1.0 / p.shape - mean_ln).abs() < 1e-8);
    assert!((p.scale - (s0 / n).powf(1.0 / p.shape)).abs() < 1e-9 * p.scale);
}

#[test]
fn survival_matches_quadrature() {
    for (k, lambda) in [(2.0, 1.0), (1.0, 0.5), (1.5, 3.0), (3.7, 2.2)] {
        let p = WeibullParams { shape: k, scale: lambda };
        for x in [0.05, 0.3, 1.0, 2.0, 4.5] {
            let mass = integrate(&|t| weibull_pdf(k, lambda, t), 0.0, x, 1e-12);
            let expect = 1.0 - mass;
            assert!((weibull_survival(&p, x) - expect).abs() < 1e-6, "k={k} x={x}");
        }
    }
}

#[test]
fn survival_bounds() {
    let p = WeibullParams { shape: 1.3, scale: 0.8 };
    assert_eq!(weibull_survival(&p, 0.0), 1.0);
    let mut last = 1.0;
    for i in 1..100 {
        let s = weibull_survival(&p, i as f64 * 0.05);
        assert!((0.0..=last).contains(&s));
        last = s;
    }
}

#[test]
fn fit_rejects_small_or_bad_tails() {
    assert!(fit_weibull(&[1.0, 2.0], 3).is_err());
    assert!(fit_weibull(&[1.0, 0.0, 2.0], 3).is_err());
    assert!(fit_weibull(&[1.0, f64::NAN, 2.0], 3).is_err());
    assert!(fit_weibull(&[2.0, 2.0, 2.0, 2.0], 3).is_err());
}

#[test]
fn planted_outlier_is_detected() {
    let rate = outlier_detection_rate(1000, 100);
    assert!(rate > 0.99, "{rate}");
}

#[test]
fn false_known_rate_falls_with_threshold() {
    let rates: Vec<f64> = [0.05, 0.01, 0.001].iter().map(|&t| false_known_rate(t, 1000, 5000)).collect();
    assert!(rates[0] > rates[1] && rates[1] > rates[2], "{rates:?}");
    assert!(rates[1] < 0.5, "majority of i.i.d. vectors must be UNKNOWN: {rates:?}");
}

#[test]
fn known_label_is_raw_argmax() {
    let cfg = HyperParams { tail_threshold: 0.2, ..HyperParams::default() };
    let mut known = 0;
    for t in 0..300 {
        let mut rng = ChaCha8Rng::seed_from_u64(t);
        let raw = score_vector(&normal_scores(30, &mut rng));
        let out = recognition_decision(&raw, &cfg).unwrap();
        if let Label::Known(who) = &out.label {
            known += 1;
            assert_eq!(Some(who), raw.argmax());
            assert!(out.tail_probability.unwrap() < cfg.tail_threshold);
        } else if let Some(p) = out.tail_probability {
            assert!((0.0..=1.0).contains(&p) && p >= cfg.tail_threshold);
        }
    }
    assert!(known > 0);
}

#[test]
fn tail_set_is_strictly_below_centre() {
    let raw = score_vector(&[9.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    let (_, analysis) = recognition_decision_detailed(&raw, &HyperParams::default()).unwrap();
    let a = analysis.unwrap();
    assert_eq!(a.candidate, -9.0);
    assert_eq!(a.center, -2.5);
    let mut dev = a.deviations.clone();
    dev.sort_by(f64::total_cmp);
    assert_eq!(dev, vec![0.5, 1.5, 2.5]);
}

#[test]
fn dispersion_personalises_the_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let base = normal_scores(49, &mut rng);
    let tight: Vec<f64> = std::iter::once(3.0).chain(base.iter().map(|x| 0.3 * x)).collect();
    let wide: Vec<f64> = std::iter::once(3.0).chain(base.iter().map(|x| 2.0 * x)).collect();
    let cfg = HyperParams::default();
    let a = recognition_decision(&score_vector(&tight), &cfg).unwrap();
    let b = recognition_decision(&score_vector(&wide), &cfg).unwrap();
    assert_eq!(a.label, Label::Known(id(0)));
    assert_eq!(b.label, Label::Unknown);
}

#[test]
fn single_and_tiny_vectors_are_unknown() {
    let cfg = HyperParams::default();
    for n in 1..=4 {
        let raw = score_vector(&(0..n).map(|i| i as f64 * 10.0).collect::<Vec<_>>());
        assert_eq!(recognition_decision(&raw, &cfg).unwrap().label, Label::Unknown, "n={n}");
    }
    assert!(recognition_decision(&score_vector(&[]), &cfg).is_err());
}

proptest! {
    #![proptest_config(prop_cases(100))]

    #[test]
    fn decision_is_affine_invariant(seed in 0u64..1_000_000, a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = normal_scores(40, &mut rng);
        values[(seed % 40) as usize] += (seed % 7) as f64;
        let cfg = HyperParams { tail_threshold: 0.05, ..HyperParams::default() };
        let x = recognition_decision(&score_vector(&values), &cfg).unwrap();
        let moved: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        let y = recognition_decision(&score_vector(&moved), &cfg).unwrap();
        if let (Some(p), Some(q)) = (x.tail_probability, y.tail_probability) {
            prop_assert!((p - q).abs() < 1e-6);
            // A survival value within solver noise of the threshold may flip.
            if (p - cfg.tail_threshold).abs() > 1e-6 {
                prop_assert_eq!(x.label, y.label);
            }
        } else {
            prop_assert_eq!(x.label, y.label);
        }
    }

    #[test]
    fn mle_scale_is_equivariant(seed in 0u64..10_000, s in 0.01f64..100.0) {
        let v = weibull_samples(1.5, 1.0, 30, seed);
        let p = fit_weibull(&v, 3).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
        let q = fit_weibull(&scaled, 3).unwrap();
        prop_assert!((p.shape - q.shape).abs() < 1e-8 * p.shape);
        prop_assert!((q.scale - s * p.scale).abs() < 1e-8 * q.scale);
    }
}
