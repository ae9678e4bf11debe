mod common;

use std::f64::consts::PI;

use common::{config, cosine, model, simulate, with_averaging};
use proptest::prelude::*;
use thinfilm::params::{MobilityAveraging, RegParams};
use thinfilm::solver::{run, Grid, RunOptions, Solver, SolverError, State};

const AVERAGINGS: [MobilityAveraging; 3] =
    [MobilityAveraging::Arithmetic, MobilityAveraging::Harmonic, MobilityAveraging::Entropic];

fn smooth_state(grid: &Grid, coefs: &[f64]) -> Vec<f64> {
    grid.sample(|x| {
        1.0 + coefs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * x + k as f64).cos()).sum::<f64>()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steps_conserve_mass(coefs in prop::collection::vec(-0.15f64..0.15, 3), a1 in -1.0f64..1.0, alpha in -0.3f64..0.5, eps in 0.0f64..0.01) {
        let reg = RegParams { eps, ..RegParams::default() };
        let cfg = config(model(1.0, 2.0, a1, alpha), reg, 64, 1.0, 1e-2);
        let solver = Solver::new(&cfg);
        let mut state = State::new(0.0, smooth_state(&solver.grid(), &coefs));
        let mass0: f64 = state.h.iter().sum();
        for _ in 0..5 {
            state = solver.step(&state, 1e-3).unwrap().0;
        }
        let mass: f64 = state.h.iter().sum();
        prop_assert!((mass - mass0).abs() <= 1e-13 * mass0);
    }

    #[test]
    fn step_commutes_with_translation(coefs in prop::collection::vec(-0.2f64..0.2, 3), shift in 1isize..63) {
        let cfg = config(model(1.5, 2.0, -0.5, 0.0), RegParams::default(), 64, 1.0, 1e-2);
        let solver = Solver::new(&cfg);
        let state = State::new(0.0, smooth_state(&solver.grid(), &coefs));
        let a = solver.step(&state.shifted(shift), 1e-3).unwrap().0;
        let b = solver.step(&state, 1e-3).unwrap().0.shifted(shift);
        for (x, y) in a.h.iter().zip(&b.h) {
            prop_assert!((x - y).abs() <= 1e-13);
        }
    }

    #[test]
    fn flux_is_odd_under_reflection(coefs in prop::collection::vec(-0.2f64..0.2, 3), a1 in -1.0f64..1.0) {
        for averaging in AVERAGINGS {
            let cfg = with_averaging(&config(model(1.0, 2.5, a1, 0.0), RegParams::default(), 32, 1.0, 1e-2), averaging);
            let solver = Solver::new(&cfg);
            let h = smooth_state(&solver.grid(), &coefs);
            let n = h.len();
            // g_i = h_{-i}; face j of g is face -j-1 of h, traversed backwards
            let g: Vec<f64> = (0..n).map(|i| h[(n - i) % n]).collect();
            let fh = solver.flux(&State::new(0.0, h)).unwrap();
            let fg = solver.flux(&State::new(0.0, g)).unwrap();
            for j in 0..n {
                let mirror = fh[(2 * n - j - 1) % n];
                prop_assert!((fg[j] + mirror).abs() <= 1e-10 * (1.0 + mirror.abs()), "{averaging:?} face {j}");
            }
        }
    }

    #[test]
    fn jacobian_matches_differences(coefs in prop::collection::vec(-0.3f64..0.3, 3), a1 in -1.0f64..1.0, eps in 0.0f64..0.1, delta in 0.0f64..0.1) {
        for averaging in AVERAGINGS {
            let reg = RegParams { eps, delta, ..RegParams::default() };
            let cfg = with_averaging(&config(model(1.3, 2.2, a1, 0.0), reg, 32, 1.0, 1e-2), averaging);
            let solver = Solver::new(&cfg);
            let state = State::new(0.0, smooth_state(&solver.grid(), &coefs));
            let err = solver.jacobian_check(&state, 1e-3).unwrap();
            prop_assert!(err <= 1e-6, "{averaging:?}: {err:e}");
        }
    }
}

#[test]
fn constant_state_is_a_fixed_point() {
    let cfg = config(model(1.0, 3.0, 1.0, 0.0), RegParams::default(), 32, 1.0, 1e-2);
    let solver = Solver::new(&cfg);
    let (next, stats) = solver.step(&State::new(0.0, vec![0.7; 32]), 0.1).unwrap();
    assert_eq!(next.h, vec![0.7; 32]);
    assert_eq!(next.t, 0.1);
    assert_eq!(stats.newton_iterations, 1);
}

/// Value of the first cosine mode; a smooth scalar readout shared by
/// nested grids.
fn mode_one(h: &[f64]) -> f64 {
    let grid = Grid::new(PI, h.len());
    2.0 / h.len() as f64 * h.iter().enumerate().map(|(i, v)| v * grid.x(i).cos()).sum::<f64>()
}

#[test]
fn spatial_refinement_is_second_order() {
    let dt = 2e-4;
    let steps = 50;
    let readout: Vec<f64> = [32usize, 64, 128, 256]
        .iter()
        .map(|&cells| {
            let cfg = config(model(1.0, 2.0, -1.0, 0.0), RegParams::default(), cells, 1.0, 1e-2);
            let solver = Solver::new(&cfg);
            let mut state = State::new(0.0, cosine(&cfg, 1.0, 0.5, 1.0));
            for _ in 0..steps {
                state = solver.step(&state, dt).unwrap().0;
            }
            mode_one(&state.h)
        })
        .collect();
    // the time error is identical on every grid, so differences isolate space
    let d: Vec<f64> = readout.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let orders: Vec<f64> = d.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    assert!(orders.iter().all(|&p| p >= 1.8), "orders {orders:?} from {readout:?}");
}

#[test]
fn runs_are_deterministic() {
    let cfg = config(model(1.0, 2.0, 0.5, 0.1), RegParams::default(), 64, 0.2, 1e-2);
    let h0 = cosine(&cfg, 1.0, 0.3, 2.0);
    let a = simulate(&cfg, &h0);
    let b = simulate(&cfg, &h0);
    assert_eq!(a.final_state(), b.final_state());
    assert_eq!(a.steps.len(), b.steps.len());
}

#[test]
fn adaptive_runs_reach_the_end_time() {
    let cfg = config(model(1.0, 2.0, -1.0, 0.0), RegParams::default(), 128, 0.5, 5e-2);
    let traj = simulate(&cfg, &cosine(&cfg, 1.0, 0.5, 1.0));
    assert_eq!(traj.final_state().t, 0.5);
    assert!(traj.steps.iter().all(|s| s.dt <= 5e-2 * (1.0 + 1e-12)));
    assert!(traj.jacobian_error.unwrap() < 1e-5);
    assert_eq!(traj.records.len(), traj.steps.len() + 1);
}

#[test]
fn snapshot_cadence() {
    let cfg = config(model(1.0, 2.0, 0.0, 0.0), RegParams::default(), 32, 0.05, 1e-2);
    let h0 = cosine(&cfg, 1.0, 0.2, 1.0);
    let every = run(&cfg, &h0, RunOptions { snapshot_every: 1, ..RunOptions::default() }, &mut []).unwrap();
    let ends = run(&cfg, &h0, RunOptions { snapshot_every: 0, ..RunOptions::default() }, &mut []).unwrap();
    assert_eq!(every.snapshots.len(), every.steps.len() + 1);
    assert_eq!(ends.snapshots.len(), 2);
    assert_eq!(every.final_state(), ends.final_state());
}

#[test]
fn negative_initial_data_is_rejected() {
    let cfg = config(model(1.0, 2.0, 0.0, 0.0), RegParams::default(), 32, 0.05, 1e-2);
    let mut h0 = cosine(&cfg, 1.0, 0.2, 1.0);
    h0[3] = -0.1;
    let err = run(&cfg, &h0, RunOptions::default(), &mut []).unwrap_err();
    assert!(matches!(err, SolverError::NegativeInitialData { index: 3, .. }), "{err:?}");
    let err = run(&cfg, &h0[..31], RunOptions::default(), &mut []).unwrap_err();
    assert!(matches!(err, SolverError::SizeMismatch { .. }), "{err:?}");
}

#[test]
fn zero_initial_data_is_lifted_when_regularized() {
    let reg = RegParams { delta: 0.0, eps: 1e-2, s: 4.0, theta: 0.3 };
    let cfg = config(model(1.0, 2.0, 0.0, 0.0), reg, 64, 0.01, 1e-3);
    let mut h0 = cosine(&cfg, 1.0, 1.0, 1.0);
    let touch = h0.iter().cloned().fold(f64::INFINITY, f64::min);
    for v in &mut h0 {
        *v = (*v - touch).max(0.0);
    }
    let traj = simulate(&cfg, &h0);
    assert!(traj.snapshots[0].min() > 0.0);
    assert!(traj.final_state().min() > 0.0);
}
