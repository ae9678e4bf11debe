use proptest::prelude::*;
use thinfilm::laugesen::{coeffs, feasible_kappa, region_point, region_scan};

/// `gamma` in its unsimplified form, before the factor `alpha - (2n-1)/3`
/// is pulled out.
fn gamma_long(alpha: f64, n: f64, kappa: f64) -> f64 {
    let p = alpha + n - 3.0;
    kappa * kappa - 2.0 / 25.0 * kappa * p * (5.0 * (2.0 - n) + 3.0 * p)
        - alpha / 50.0 * p * (5.0 * (alpha - 1.0) * (alpha + n - 2.0) - (5.0 * alpha - 3.0) * p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gamma_matches_unsimplified_form(alpha in -2.0f64..2.0, n in 0.0f64..4.0, kappa in -2.0f64..2.0) {
        let c = coeffs(alpha, n, 4.0, 1.0, kappa);
        let reference = gamma_long(alpha, n, kappa);
        prop_assert!((c.gamma_c - reference).abs() <= 1e-14 * (1.0 + kappa * kappa + alpha.abs() * 40.0));
    }

    #[test]
    fn kappa_interval_matches_sign_conditions(alpha in -1.0f64..1.0, n in 0.4f64..3.1, t in 0.0f64..1.0) {
        match feasible_kappa(alpha, n) {
            Some(iv) => {
                let kappa = iv.lo + t * iv.width();
                let c = coeffs(alpha, n, 4.0, 0.0, kappa);
                let scale = 1.0 + kappa.abs() + alpha.abs();
                prop_assert!(c.beta_c <= 1e-12 * scale);
                prop_assert!(c.gamma_c <= 1e-12 * scale * scale);
                // just outside the interval one of the two conditions fails
                let pad = 1e-6 * scale;
                for outside in [iv.lo - pad, iv.hi + pad] {
                    let c = coeffs(alpha, n, 4.0, 0.0, outside);
                    prop_assert!(c.beta_c > 0.0 || c.gamma_c > 0.0);
                }
            }
            None => {
                // brute-force search for a witness on a fine kappa grid
                for k in 0..4001 {
                    let kappa = -2.0 + k as f64 * 1e-3;
                    let c = coeffs(alpha, n, 4.0, 0.0, kappa);
                    prop_assert!(c.beta_c > 0.0 || c.gamma_c > 0.0, "witness kappa = {kappa}");
                }
            }
        }
    }

    #[test]
    fn remainder_and_mu_vanish_at_the_default_kappa(alpha in -1.0f64..1.0, n in 0.1f64..3.5, s in 3.6f64..8.0, a1 in -2.0f64..2.0) {
        let kappa = alpha * (alpha - 1.0) / 4.0;
        let c = coeffs(alpha, n, s, a1, kappa);
        prop_assert!(c.k2.abs() <= 1e-13 * (s - n).powi(2));
        prop_assert!(c.mu_c.abs() <= 1e-14 * (1.0 + a1.abs()));
    }

    #[test]
    fn mu_sign_follows_a1(alpha in -1.0f64..1.0, n in 0.4f64..3.1, a1 in -2.0f64..2.0, t in 0.0f64..1.0) {
        if let Some(iv) = feasible_kappa(alpha, n) {
            let kappa = iv.lo + t * iv.width();
            let mu = coeffs(alpha, n, 4.0, a1, kappa).mu_c;
            if a1 > 0.0 {
                prop_assert!(mu >= -1e-12);
            } else {
                prop_assert!(mu <= 1e-12);
            }
        }
    }
}

#[test]
fn classical_point() {
    let r = region_point(1.0, 0.0);
    assert!(r.feasible);
    let iv = r.kappa_interval.unwrap();
    assert!(iv.lo.abs() <= 1e-15 && (iv.hi - 0.16).abs() <= 1e-15);
    assert!(r.in_theorem_range);
}

#[test]
fn scan_layout_and_mu_flag() {
    let scan = region_scan((0.4, 3.1), (-1.0, 1.0), (28, 21)).unwrap();
    assert_eq!(scan.points.len(), 28 * 21);
    assert_eq!(scan.get(0, 0).n, 0.4);
    assert_eq!(scan.get(27, 20).alpha, 1.0);
    assert!(scan.mu_counterexamples().is_empty());
    assert!(scan.feasible_count() > 0);
    let first = scan.boundary.first().unwrap();
    assert_eq!(first, scan.boundary.last().unwrap());
}

#[test]
fn scan_rejects_degenerate_resolution() {
    assert!(region_scan((0.4, 3.1), (-1.0, 1.0), (1, 21)).is_err());
}
