//! Conserved and dissipated quantities evaluated on solver states.
//!
//! Every derivative is taken on faces with the solver's own stencils
//! ([`crate::stencil`]), and face sums use the plain rectangle rule on the
//! periodic grid. With these choices the semi-discrete energy identity
//! `d/dt E0 = -dissipation` holds exactly for `alpha = 0`, `eps = delta = 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laugesen;
use crate::params::{ModelParams, RegParams, ValidatedConfig};
use crate::regfuncs::{dpp_eps_raw, dtilde0, dtilde_eps, f_eps_raw, g0_beta_raw, FnError};
use crate::solver::{check_positive, FluxModel, Grid, SolverError, State};
use crate::stencil::{face_window, h_face, hx, hxx, hxxx, secant_mean};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error("non-positive height h[{index}] = {value}")]
    NonPositiveHeight { index: usize, value: f64 },
    #[error(transparent)]
    Function(#[from] FnError),
}

fn positive(h: &[f64]) -> Result<(), FunctionalError> {
    check_positive(h).map_err(|e| match e {
        SolverError::NonPositiveHeight { index, value } => FunctionalError::NonPositiveHeight { index, value },
        _ => unreachable!("check_positive only reports heights"),
    })
}

/// One time-stamped row of every monitored quantity.
///
/// Column order in CSV output follows [`FunctionalRecord::COLUMNS`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalRecord {
    pub t: f64,
    pub mass: f64,
    pub surface_energy: f64,
    pub e0: f64,
    pub e0_alpha: f64,
    pub e_eps_alpha: f64,
    pub entropy: f64,
    pub r2: f64,
    pub s2: f64,
    pub l2: f64,
    pub n2: f64,
    pub dissipation: f64,
    /// Dissipation with the solver's regularized face mobility.
    pub reg_dissipation: f64,
    pub eps_term: f64,
    pub min_h: f64,
    /// `max |h - mean(h)|`.
    pub sup_dev: f64,
}

impl FunctionalRecord {
    pub const COLUMNS: [&'static str; 16] = [
        "t",
        "mass",
        "surface_energy",
        "e0",
        "e0_alpha",
        "e_eps_alpha",
        "entropy",
        "r2",
        "s2",
        "l2",
        "n2",
        "dissipation",
        "reg_dissipation",
        "eps_term",
        "min_h",
        "sup_dev",
    ];

    pub fn values(&self) -> [f64; 16] {
        [
            self.t,
            self.mass,
            self.surface_energy,
            self.e0,
            self.e0_alpha,
            self.e_eps_alpha,
            self.entropy,
            self.r2,
            self.s2,
            self.l2,
            self.n2,
            self.dissipation,
            self.reg_dissipation,
            self.eps_term,
            self.min_h,
            self.sup_dev,
        ]
    }
}

/// Weighted squares `(R2, S2, L2, N2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rsln {
    pub r2: f64,
    pub s2: f64,
    pub l2: f64,
    pub n2: f64,
}

/// Evaluator bound to one configuration and grid.
#[derive(Debug, Clone)]
pub struct Functionals {
    grid: Grid,
    model: ModelParams,
    reg: RegParams,
    flux: FluxModel,
}

impl Functionals {
    pub fn new(config: &ValidatedConfig) -> Self {
        let disc = config.disc();
        Functionals {
            grid: Grid::new(disc.a, disc.cells),
            model: *config.model(),
            reg: *config.reg(),
            flux: FluxModel::from_config(config),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn dx(&self) -> f64 {
        self.grid.dx()
    }

    /// `sum h_i dx`.
    pub fn mass(&self, state: &State) -> f64 {
        state.h.iter().sum::<f64>() * self.dx()
    }

    /// `sum (h_x)^2 dx` over faces.
    pub fn surface_energy(&self, state: &State) -> f64 {
        let dx = self.dx();
        (0..state.h.len())
            .map(|i| {
                let g = hx(&face_window(&state.h, i), dx);
                g * g
            })
            .sum::<f64>()
            * dx
    }

    /// `sum { h_x^2 / 2 - a1 D0(h) } dx`.
    pub fn energy_e0(&self, state: &State) -> Result<f64, FunctionalError> {
        let base = ModelParams { alpha: 0.0, ..self.model };
        self.alpha_energy(state, &base, 0.0)
    }

    /// `sum { w h_x^2 / 2 - a1 D~0(h) } dx` with face weight
    /// `w = (h_i^alpha + h_{i+1}^alpha) / 2`.
    pub fn energy_e0_alpha(&self, state: &State) -> Result<f64, FunctionalError> {
        self.alpha_energy(state, &self.model, 0.0)
    }

    /// As [`Self::energy_e0_alpha`] with the regularized potential `D~_eps`.
    pub fn energy_e_eps_alpha(&self, state: &State) -> Result<f64, FunctionalError> {
        self.alpha_energy(state, &self.model, self.reg.eps)
    }

    fn alpha_energy(&self, state: &State, model: &ModelParams, eps: f64) -> Result<f64, FunctionalError> {
        positive(&state.h)?;
        let dx = self.dx();
        let h = &state.h;
        let alpha = model.alpha;
        let weight = |z: f64| if alpha == 0.0 { 1.0 } else { z.powf(alpha) };
        let mut kinetic = 0.0;
        for i in 0..h.len() {
            let w = face_window(h, i);
            let g = hx(&w, dx);
            kinetic += 0.5 * (weight(w[1]) + weight(w[2])) * 0.5 * g * g;
        }
        let mut potential = 0.0;
        if model.a1 != 0.0 {
            for &z in h {
                potential += if eps == 0.0 {
                    dtilde0(z, alpha, model.m, model.n)?
                } else {
                    dtilde_eps(z, alpha, model.m, model.n, eps)?
                };
            }
        }
        Ok((kinetic - model.a1 * potential) * dx)
    }

    /// `sum G0^(beta)(h_i) dx`.
    pub fn entropy_beta(&self, state: &State) -> Result<f64, FunctionalError> {
        positive(&state.h)?;
        let (n, beta) = (self.model.n, self.model.beta_ent);
        Ok(state.h.iter().map(|&z| g0_beta_raw(z, n, beta)).sum::<f64>() * self.dx())
    }

    /// Weighted squares of the decomposition quantities at `eps` from the
    /// regularization parameters.
    pub fn rsln(&self, state: &State) -> Result<Rsln, FunctionalError> {
        positive(&state.h)?;
        let dx = self.dx();
        let h = &state.h;
        let ModelParams { n, m, a1, alpha, .. } = self.model;
        let RegParams { s, eps, .. } = self.reg;
        let f = |z: f64| f_eps_raw(z, n, s, eps);
        let mut out = Rsln { r2: 0.0, s2: 0.0, l2: 0.0, n2: 0.0 };
        for i in 0..h.len() {
            let w = face_window(h, i);
            let (g, g2, g3, hf) = (hx(&w, dx), hxx(&w, dx), hxxx(&w, dx), h_face(&w));
            let weight_r = 0.5 * (w[1].powf(alpha) * f(w[1]) + w[2].powf(alpha) * f(w[2]));
            let dsec = if a1 == 0.0 {
                0.0
            } else {
                secant_mean(|z| dpp_eps_raw(z, m, n, eps), |_| 0.0, w[1], w[2], false).value
            };
            let q = g3 + a1 * dsec * g;
            out.r2 += weight_r * q * q;
            let base = hf.powf(alpha - 2.0) * f(hf);
            let gg = g * g;
            out.s2 += base * gg * g2 * g2;
            out.l2 += base / (hf * hf) * gg * gg * gg;
            out.n2 += base * dpp_eps_raw(hf, m, n, eps) * gg * gg;
        }
        out.r2 *= dx;
        out.s2 *= dx;
        out.l2 *= dx;
        out.n2 *= dx;
        Ok(out)
    }

    /// `sum avg(h^n) (h_xxx + a1 D''_0 h_x)^2 dx` with the unregularized
    /// mobility and second-order coefficient.
    pub fn dissipation_integral(&self, state: &State) -> Result<f64, FunctionalError> {
        positive(&state.h)?;
        let dx = self.dx();
        let ModelParams { n, m, a1, .. } = self.model;
        let mut total = 0.0;
        for i in 0..state.h.len() {
            let w = face_window(&state.h, i);
            let mob = 0.5 * (w[1].powf(n) + w[2].powf(n));
            let mut q = hxxx(&w, dx);
            if a1 != 0.0 {
                let dsec = secant_mean(|z| z.powf(m - n), |_| 0.0, w[1], w[2], false).value;
                q += a1 * dsec * hx(&w, dx);
            }
            total += mob * q * q;
        }
        Ok(total * dx)
    }

    /// Dissipation with the face mobility and coefficient the solver uses.
    pub fn reg_dissipation(&self, state: &State) -> Result<f64, FunctionalError> {
        positive(&state.h)?;
        let dx = self.dx();
        let mut total = 0.0;
        for i in 0..state.h.len() {
            let w = face_window(&state.h, i);
            let mob = self.flux.mobility(w[1], w[2], false).value;
            let mut q = hxxx(&w, dx);
            if self.model.a1 != 0.0 {
                let d = self.flux.second_order_coefficient(w[1], w[2], false).value;
                q += self.model.a1 * d * hx(&w, dx);
            }
            total += mob * q * q;
        }
        Ok(total * dx)
    }

    /// The eps-dependent remainder of the decomposition for a given `kappa`.
    pub fn eps_term_integral(&self, state: &State, kappa: f64) -> Result<f64, FunctionalError> {
        positive(&state.h)?;
        let ModelParams { n, alpha, .. } = self.model;
        let RegParams { s, eps, .. } = self.reg;
        Ok(eps_term(&state.h, self.dx(), alpha, n, s, eps, kappa))
    }

    /// Every quantity at once.
    pub fn record(&self, state: &State) -> Result<FunctionalRecord, FunctionalError> {
        positive(&state.h)?;
        let rsln = self.rsln(state)?;
        let mean = state.mean();
        Ok(FunctionalRecord {
            t: state.t,
            mass: self.mass(state),
            surface_energy: self.surface_energy(state),
            e0: self.energy_e0(state)?,
            e0_alpha: self.energy_e0_alpha(state)?,
            e_eps_alpha: self.energy_e_eps_alpha(state)?,
            entropy: self.entropy_beta(state)?,
            r2: rsln.r2,
            s2: rsln.s2,
            l2: rsln.l2,
            n2: rsln.n2,
            dissipation: self.dissipation_integral(state)?,
            reg_dissipation: self.reg_dissipation(state)?,
            eps_term: self.eps_term_integral(state, self.model.kappa())?,
            min_h: state.min(),
            sup_dev: state.h.iter().fold(0.0f64, |acc, v| acc.max((v - mean).abs())),
        })
    }
}

/// `sum (k1 eps h^(alpha-s-4) f^2 + k2 eps^2 h^(alpha-2s-4) f^3) h_x^6 dx`
/// on faces, with `k1`, `k2` from [`laugesen::coeffs`].
pub fn eps_term(h: &[f64], dx: f64, alpha: f64, n: f64, s: f64, eps: f64, kappa: f64) -> f64 {
    if eps == 0.0 {
        return 0.0;
    }
    let c = laugesen::coeffs(alpha, n, s, 0.0, kappa);
    let mut total = 0.0;
    for i in 0..h.len() {
        let w = face_window(h, i);
        let (g, hf) = (hx(&w, dx), h_face(&w));
        let f = f_eps_raw(hf, n, s, eps);
        let g6 = g.powi(6);
        let mut density = c.k1 * eps * hf.powf(alpha - s - 4.0) * f * f;
        if c.k2 != 0.0 {
            density += c.k2 * eps * eps * hf.powf(alpha - 2.0 * s - 4.0) * f * f * f;
        }
        total += density * g6;
    }
    total * dx
}
