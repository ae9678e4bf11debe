//! Numerical laboratory for the regularized long-wave-unstable thin-film
//! equation
//!
//! `h_t + ( f(h) (h_xxx + a1 D''(h) h_x) )_x = 0`
//!
//! on a periodic interval.
//!
//! * [`params`]: validated model, regularization and grid parameters.
//! * [`regfuncs`]: regularized mobility, entropy densities and potentials.
//! * [`solver`]: conservative backward-Euler time stepping.
//! * [`functionals`]: mass, energies, entropies and dissipation terms.
//! * [`laugesen`]: the sum-of-squares coefficients and dissipation region.
//! * [`estimates`]: empirical energy bounds and decay fits.
//! * [`io`]: CSV, JSON-lines and binary output.
//!
//! ```
//! use thinfilm::{params::{validate, DiscParams, ModelParams, RegParams}, solver::{run, RunOptions, Grid}};
//!
//! let model = ModelParams { n: 1.0, m: 1.0, a1: 0.0, alpha: 0.0, beta_ent: 0.0, kappa: None };
//! let config = validate(model, RegParams::default(), DiscParams::new(std::f64::consts::PI, 32, 0.1)).unwrap();
//! let grid = Grid::new(std::f64::consts::PI, 32);
//! let traj = run(&config, &grid.sample(|x| 1.0 + 0.3 * x.cos()), RunOptions::default(), &mut []).unwrap();
//! assert!(traj.relative_mass_drift() < 1e-12);
//! ```

pub mod estimates;
pub mod functionals;
pub mod io;
pub mod laugesen;
pub mod linalg;
pub mod params;
pub mod quad;
pub mod regfuncs;
pub mod solver;
pub mod stencil;

use thiserror::Error;

pub use functionals::{FunctionalRecord, Functionals};
pub use params::{validate, Config, ValidatedConfig};
pub use solver::{run, Grid, RunOptions, Solver, State, Trajectory};

/// Any error the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] params::ParamError),
    #[error(transparent)]
    Function(#[from] regfuncs::FnError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error(transparent)]
    Functional(#[from] functionals::FunctionalError),
    #[error(transparent)]
    Laugesen(#[from] laugesen::LaugesenError),
    #[error(transparent)]
    Estimate(#[from] estimates::EstimateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The guide's chapters, compiled so that their snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/scheme.md")]
    mod scheme {}
    #[doc = include_str!("../../../book/src/functionals.md")]
    mod functionals {}
    #[doc = include_str!("../../../book/src/region.md")]
    mod region {}
    #[doc = include_str!("../../../book/src/identities.md")]
    mod identities {}
    #[doc = include_str!("../../../book/src/estimates.md")]
    mod estimates {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
