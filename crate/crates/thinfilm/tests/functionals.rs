mod common;

use std::f64::consts::PI;

use common::{config, model};
use thinfilm::functionals::{eps_term, Functionals};
use thinfilm::laugesen::coeffs;
use thinfilm::params::RegParams;
use thinfilm::solver::{Grid, State};

/// Periodic trapezoid rule on `(-pi, pi)`; spectrally accurate for the
/// smooth periodic integrands used here.
fn integrate<F: Fn(f64) -> f64>(f: F) -> f64 {
    let nodes = 4096;
    let dx = 2.0 * PI / nodes as f64;
    (0..nodes).map(|i| f(-PI + i as f64 * dx)).sum::<f64>() * dx
}

/// `h = 2 + sin x` and its first three derivatives.
fn profile(x: f64) -> [f64; 4] {
    [2.0 + x.sin(), x.cos(), -x.sin(), -x.cos()]
}

fn state(cells: usize) -> State {
    State::new(0.0, Grid::new(PI, cells).sample(|x| profile(x)[0]))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn squares_converge_to_the_continuous_integrals() {
    let (n, m, a1, alpha, s, eps) = (1.2, 2.5, 0.7, 0.3, 4.5, 0.05);
    let f = |z: f64| z.powf(s + n) / (z.powf(s) + eps * z.powf(n));
    let dpp = |z: f64| z.powf(m - n) / (1.0 + eps * z.powf(m - n));
    let r2 = integrate(|x| {
        let [h, g, _, g3] = profile(x);
        let q = g3 + a1 * dpp(h) * g;
        h.powf(alpha) * f(h) * q * q
    });
    let s2 = integrate(|x| {
        let [h, g, g2, _] = profile(x);
        h.powf(alpha - 2.0) * f(h) * g * g * g2 * g2
    });
    let l2 = integrate(|x| {
        let [h, g, _, _] = profile(x);
        h.powf(alpha - 4.0) * f(h) * g.powi(6)
    });
    let n2 = integrate(|x| {
        let [h, g, _, _] = profile(x);
        h.powf(alpha - 2.0) * f(h) * dpp(h) * g.powi(4)
    });

    let reg = RegParams { eps, s, ..RegParams::default() };
    let mut errors = Vec::new();
    for cells in [512, 1024, 2048] {
        let fun = Functionals::new(&config(model(n, m, a1, alpha), reg, cells, 1.0, 1e-2));
        let got = fun.rsln(&state(cells)).unwrap();
        errors.push([rel(got.r2, r2), rel(got.s2, s2), rel(got.l2, l2), rel(got.n2, n2)]);
    }
    for k in 0..4 {
        assert!(errors[2][k] <= 1e-5, "quantity {k}: {errors:?}");
        // second-order convergence
        assert!(errors[1][k] / errors[2][k] >= 3.5, "quantity {k}: {errors:?}");
    }
}

#[test]
fn alpha_energy_matches_the_continuous_value() {
    // alpha = 1, m - n = 1: potential z^4 / 12
    let (n, m, a1) = (1.0, 2.0, 0.8);
    let exact = integrate(|x| {
        let [h, g, _, _] = profile(x);
        h * g * g / 2.0 - a1 * h.powi(4) / 12.0
    });
    let fun = Functionals::new(&config(model(n, m, a1, 1.0), RegParams::default(), 2048, 1.0, 1e-2));
    let got = fun.energy_e0_alpha(&state(2048)).unwrap();
    assert!(rel(got, exact) <= 1e-6, "{got} vs {exact}");
}

#[test]
fn classical_functionals() {
    let cfg = config(model(1.0, 2.0, 0.0, 0.0), RegParams::default(), 1024, 1.0, 1e-2);
    let fun = Functionals::new(&cfg);
    let st = state(1024);
    // mass of 2 + sin x is 4 pi; the surface energy of sin x is pi
    assert!(rel(fun.mass(&st), 4.0 * PI) <= 1e-14);
    assert!(rel(fun.surface_energy(&st), PI) <= 1e-5);
    assert!(rel(fun.energy_e0(&st).unwrap(), PI / 2.0) <= 1e-5);
    // beta = 0, n = 1: entropy density z ln z - z
    let entropy = integrate(|x| {
        let h = profile(x)[0];
        h * h.ln() - h
    });
    assert!(rel(fun.entropy_beta(&st).unwrap(), entropy) <= 1e-12);
    // dissipation of 2 + sin x with n = 1: int (2 + sin x) cos^2 x = 2 pi
    assert!(rel(fun.dissipation_integral(&st).unwrap(), 2.0 * PI) <= 1e-5);
}

#[test]
fn record_is_consistent_with_the_individual_functionals() {
    let reg = RegParams { eps: 0.01, ..RegParams::default() };
    let cfg = config(model(1.0, 2.0, 0.5, 0.2), reg, 256, 1.0, 1e-2);
    let fun = Functionals::new(&cfg);
    let st = state(256);
    let rec = fun.record(&st).unwrap();
    assert_eq!(rec.mass, fun.mass(&st));
    assert_eq!(rec.e0_alpha, fun.energy_e0_alpha(&st).unwrap());
    assert_eq!(rec.min_h, st.min());
    assert!((rec.sup_dev - 1.0).abs() <= 1e-3);
    assert_eq!(rec.values().len(), thinfilm::FunctionalRecord::COLUMNS.len());
    assert!(fun.record(&State::new(0.0, vec![1.0, 0.0, 1.0, 1.0, 1.0])).is_err());
}

#[test]
fn eps_remainder_vanishes_without_regularization() {
    let st = state(128);
    let dx = 2.0 * PI / 128.0;
    assert_eq!(eps_term(&st.h, dx, 0.3, 1.0, 4.0, 0.0, 0.1), 0.0);
    // at kappa = alpha (alpha - 1) / 4 only the k1 part survives
    let kappa = 0.3 * (0.3 - 1.0) / 4.0;
    assert!(coeffs(0.3, 1.0, 4.0, 0.0, kappa).k2.abs() < 1e-16);
    let small = eps_term(&st.h, dx, 0.3, 1.0, 4.0, 1e-6, kappa);
    let smaller = eps_term(&st.h, dx, 0.3, 1.0, 4.0, 1e-7, kappa);
    // smooth positive state: the remainder is linear in eps
    assert!((small / smaller - 10.0).abs() <= 1e-4);
}
