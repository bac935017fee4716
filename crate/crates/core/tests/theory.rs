use cvis::theory::{
    ensemble_bound, f_matrix, hadamard_identity_residuals, min_ensembles, optimal_weight, predict, r_squared,
    variance_profile, variance_ratio_prediction, weight_range, ModelStatistics, Scheme,
};
use cvis::CvisError;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair_stats(rho: f64, var0: f64, var1: f64) -> ModelStatistics {
    ModelStatistics::from_covariance(&DMatrix::from_row_slice(
        2,
        2,
        &[var0, rho * (var0 * var1).sqrt(), rho * (var0 * var1).sqrt(), var1],
    ))
    .unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn f_matrix_entries() {
    let is = f_matrix(Scheme::AcvIs, &[2.0, 4.0]).unwrap();
    assert_eq!((is[(0, 0)], is[(1, 1)], is[(0, 1)], is[(1, 0)]), (0.5, 0.75, 0.375, 0.375));
    let mf = f_matrix(Scheme::AcvMf, &[2.0, 4.0]).unwrap();
    assert_eq!((mf[(0, 0)], mf[(1, 1)], mf[(0, 1)], mf[(1, 0)]), (0.5, 0.75, 0.5, 0.5));
    let big = f_matrix(Scheme::AcvIs, &[1e12, 1e12]).unwrap();
    assert!((big - DMatrix::from_element(2, 2, 1.0)).amax() < 1e-11);
    assert_eq!(f_matrix(Scheme::Cv, &[3.0, 5.0]).unwrap(), DMatrix::from_element(2, 2, 1.0));
    assert!(matches!(f_matrix(Scheme::AcvMf, &[1.0, 4.0]), Err(CvisError::InvalidRatio(r)) if r == 1.0));
}

#[test]
fn optimal_weight_examples() {
    let s = pair_stats(0.8, 1.0, 1.0);
    assert!(close(optimal_weight(Scheme::Cv, &s, &[]).unwrap()[0], -0.8, 1e-14));
    let same = pair_stats(1.0, 2.0, 2.0);
    assert!(close(optimal_weight(Scheme::Cv, &same, &[]).unwrap()[0], -1.0, 1e-14));
    assert!(close(optimal_weight(Scheme::AcvIs, &s, &[2.0]).unwrap()[0], -0.8, 1e-14));
}

#[test]
fn r_squared_examples() {
    let s = pair_stats(0.8, 1.0, 1.0);
    assert!(close(r_squared(Scheme::Cv, &s, &[]).unwrap(), 0.64, 1e-14));
    assert!(close(r_squared(Scheme::Cv, &pair_stats(1.0, 3.0, 3.0), &[]).unwrap(), 1.0, 1e-14));
    assert!(close(r_squared(Scheme::AcvIs, &s, &[2.0]).unwrap(), 0.32, 1e-14));
}

#[test]
fn variance_ratio_examples() {
    assert!(close(variance_ratio_prediction(Scheme::Cv, 0.9, 1, 13, None).unwrap(), 0.11, 1e-14));
    assert_eq!(variance_ratio_prediction(Scheme::AcvIs, 1.0, 2, 7, None).unwrap(), 0.0);
    assert!(close(variance_ratio_prediction(Scheme::AcvMf, 0.9, 1, 13, Some(10.0)).unwrap(), 0.109, 1e-14));
    assert!(matches!(
        variance_ratio_prediction(Scheme::Cv, 0.5, 1, 3, None),
        Err(CvisError::BoundViolated { k: 3, m: 1 })
    ));
}

#[test]
fn minimum_ensemble_examples() {
    assert!(close(ensemble_bound(Scheme::Cv, 0.5, 1, None, 1.0).unwrap(), 4.0, 1e-14));
    assert_eq!(min_ensembles(Scheme::Cv, 0.5, 1, None, 1.0).unwrap(), 5);
    assert_eq!(min_ensembles(Scheme::Cv, 0.25, 1, None, 1.0).unwrap(), 7);
    let mf = ensemble_bound(Scheme::AcvMf, 0.5, 1, Some(1e9), 1.0).unwrap();
    assert!(close(mf, 4.0, 1e-8));
    assert!(matches!(
        min_ensembles(Scheme::Cv, 0.3, 1, None, 0.5),
        Err(CvisError::InfeasibleTarget { .. })
    ));
    // The general form matches the y = 1 closed forms.
    let (r2, m, r) = (0.6, 2, 5.0);
    let closed_mf = (r - 1.0) / r * m as f64 / r2 + m as f64 / r + 2.0;
    assert!(close(ensemble_bound(Scheme::AcvMf, r2, m, Some(r), 1.0).unwrap(), closed_mf, 1e-13));
}

#[test]
fn weight_range_examples() {
    let w = weight_range(0.5, 1.0, None).unwrap();
    assert_eq!((w.lo, w.hi), (-1.0, 0.0));
    let z = weight_range(0.0, 1.0, None).unwrap();
    assert_eq!((z.lo, z.hi), (0.0, 0.0));
    let a = weight_range(0.0, 0.0, Some((2.0, -0.5))).unwrap();
    assert_eq!((a.lo, a.hi), (0.0, 0.5));
    assert!(matches!(weight_range(1.0, 0.0, None), Err(CvisError::UndefinedRange)));
}

#[test]
fn variance_profile_examples() {
    assert_eq!(variance_profile(0.0, 1.3, 2.0, 0.4, None), 1.3);
    let (v0, v1, c) = (1.0, 2.0, 0.6);
    assert!(close(variance_profile(-c / v1, v0, v1, c, None), v0 - c * c / v1, 1e-15));
    assert!(close(variance_profile(-1.6, 1.0, 1.0, 0.8, None), 1.0, 1e-15));
}

#[test]
fn prediction_bundle() {
    let s = pair_stats(0.9, 1.0, 1.0);
    let p = predict(Scheme::Cv, &s, &[], 10).unwrap();
    assert!(close(p.ratio, 0.19 * 8.0 / 7.0, 1e-14));
    assert_eq!(p.k_min, Some(4));
    let json = serde_json::to_value(&p).unwrap();
    assert_eq!(json["scheme"], "cv");
    assert!(predict(Scheme::AcvMf, &ModelStatistics::from_covariance(&DMatrix::identity(3, 3)).unwrap(), &[2.0, 3.0], 10).is_err());
}

#[test]
fn hadamard_identities_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let m = rng.random_range(1..=6);
        let k = rng.random_range(2..=12);
        let mut g = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
        let (a, b, v) = (g(m, m), g(m, k), g(k, m));
        let x = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
        for r in hadamard_identity_residuals(&a, &b, &v, &x).unwrap() {
            worst = worst.max(r);
        }
    }
    assert!(worst < 1e-12, "worst relative residual {worst}");
}

fn random_stats() -> impl Strategy<Value = (DMatrix<f64>, usize)> {
    (1usize..=4).prop_flat_map(|m| {
        prop::collection::vec(-1.0f64..1.0, (m + 1) * (m + 3)).prop_map(move |v| {
            // Full-rank Gram matrix of m + 3 random vectors.
            let a = DMatrix::from_vec(m + 1, m + 3, v);
            (&a * a.transpose() + DMatrix::identity(m + 1, m + 1) * 1e-3, m)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ratio_is_at_least_one_minus_r2_and_falls_with_k(r2 in 0.0f64..1.0, m in 1usize..5, k in 0usize..40, r in 1.5f64..20.0) {
        let k = m + 3 + k;
        for (scheme, rr) in [(Scheme::Cv, None), (Scheme::AcvIs, None), (Scheme::AcvMf, Some(r))] {
            let a = variance_ratio_prediction(scheme, r2, m, k, rr).unwrap();
            let b = variance_ratio_prediction(scheme, r2, m, k + 1, rr).unwrap();
            prop_assert!(a >= 1.0 - r2 - 1e-15);
            prop_assert!(b <= a + 1e-15);
        }
    }

    #[test]
    fn r2_is_a_fraction_and_scale_free((cov, m) in random_stats(), s0 in 0.1f64..10.0, s1 in 0.1f64..10.0, r in 1.5f64..10.0) {
        let stats = ModelStatistics::from_covariance(&cov).unwrap();
        let ratios = vec![r; m];
        // Rescale Y_0 by s0 and Y_1 by s1.
        let mut scale = DVector::from_element(m + 1, 1.0);
        scale[0] = s0;
        scale[1] = s1;
        let scaled = DMatrix::from_fn(m + 1, m + 1, |i, j| cov[(i, j)] * scale[i] * scale[j]);
        let scaled_stats = ModelStatistics::from_covariance(&scaled).unwrap();
        for scheme in [Scheme::Cv, Scheme::AcvIs, Scheme::AcvMf] {
            let r2 = r_squared(scheme, &stats, &ratios).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&r2));
            let r2s = r_squared(scheme, &scaled_stats, &ratios).unwrap();
            prop_assert!((r2 - r2s).abs() < 1e-8);
            let a = optimal_weight(scheme, &stats, &ratios).unwrap();
            let b = optimal_weight(scheme, &scaled_stats, &ratios).unwrap();
            prop_assert!((b[0] - a[0] * s0 / s1).abs() < 1e-7 * (1.0 + a[0].abs() * s0 / s1));
            for i in 1..m {
                prop_assert!((b[i] - a[i] * s0).abs() < 1e-7 * (1.0 + a[i].abs() * s0));
            }
        }
    }

    #[test]
    fn optimal_weight_minimises_the_profile(var0 in 0.1f64..5.0, var1 in 0.1f64..5.0, rho in -0.99f64..0.99) {
        let cov = rho * (var0 * var1).sqrt();
        let stats = pair_stats(rho, var0, var1);
        let a = optimal_weight(Scheme::Cv, &stats, &[]).unwrap()[0];
        let range = weight_range(cov, var1, None).unwrap();
        let centre = 0.5 * (range.lo + range.hi);
        let half = range.width().max(1e-3);
        let best = variance_profile(a, var0, var1, cov, None);
        for i in 0..=100 {
            let alpha = centre - half + 2.0 * half * i as f64 / 100.0;
            prop_assert!(best <= variance_profile(alpha, var0, var1, cov, None) + 1e-12);
        }
        // Both interval endpoints give back the baseline variance.
        prop_assert!((variance_profile(range.lo, var0, var1, cov, None) - var0).abs() < 1e-12 * var0.max(1.0) * 10.0);
        prop_assert!((variance_profile(range.hi, var0, var1, cov, None) - var0).abs() < 1e-12 * var0.max(1.0) * 10.0);
    }
}
