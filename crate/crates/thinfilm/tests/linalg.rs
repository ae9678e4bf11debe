use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use thinfilm::linalg::CyclicPentadiagonal;

fn arb_system() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (5usize..48).prop_flat_map(|n| {
        (Just(n), prop::collection::vec(-1.0f64..1.0, 5 * n), prop::collection::vec(-1.0f64..1.0, n))
    })
}

fn build(n: usize, entries: &[f64]) -> CyclicPentadiagonal {
    let mut a = CyclicPentadiagonal::zeros(n).unwrap();
    for row in 0..n {
        for (k, offset) in (-2isize..=2).enumerate() {
            let v = entries[5 * row + k];
            // diagonal dominance keeps the test away from near-singular draws
            a.set(row, offset, if offset == 0 { 5.0 + v } else { v });
        }
    }
    a
}

proptest! {
    #[test]
    fn solve_matches_dense_lu((n, entries, rhs) in arb_system()) {
        let a = build(n, &entries);
        let x = a.solve(&rhs).unwrap();
        let dense = a.to_dense();
        let m = DMatrix::from_fn(n, n, |i, j| dense[i][j]);
        let reference = m.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        for i in 0..n {
            prop_assert!((x[i] - reference[i]).abs() <= 1e-12 * (1.0 + reference[i].abs()));
        }
        let back = a.mul_vec(&x);
        for i in 0..n {
            prop_assert!((back[i] - rhs[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn factor_is_reusable((n, entries, rhs) in arb_system()) {
        let a = build(n, &entries);
        let f = a.factor().unwrap();
        let once = f.solve(&rhs);
        let twice = f.solve(&rhs);
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once, a.solve(&rhs).unwrap());
    }

    #[test]
    fn dense_view_agrees_with_product((n, entries, rhs) in arb_system()) {
        let a = build(n, &entries);
        let dense = a.to_dense();
        let y = a.mul_vec(&rhs);
        for i in 0..n {
            let yi: f64 = (0..n).map(|j| dense[i][j] * rhs[j]).sum();
            prop_assert!((yi - y[i]).abs() <= 1e-13);
        }
    }
}

#[test]
fn too_small_systems_are_rejected() {
    assert!(CyclicPentadiagonal::zeros(4).is_err());
    assert!(CyclicPentadiagonal::zeros(5).is_ok());
}

#[test]
fn singular_system_is_reported() {
    let a = CyclicPentadiagonal::zeros(8).unwrap();
    assert!(a.solve(&[1.0; 8]).is_err());
}
