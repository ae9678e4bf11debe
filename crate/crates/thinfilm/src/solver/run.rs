//! Adaptive driver: step control, snapshots and functional records.

use super::{lift_initial_data, Grid, Solver, SolverError, State, StepStats};
use crate::functionals::{FunctionalRecord, Functionals};
use crate::params::ValidatedConfig;

/// Receives every accepted state. `step` is `None` for the initial state.
pub trait Observer {
    fn observe(
        &mut self,
        state: &State,
        record: &FunctionalRecord,
        step: Option<&StepStats>,
    ) -> Result<(), String>;
}

impl<F> Observer for F
where
    F: FnMut(&State, &FunctionalRecord, Option<&StepStats>) -> Result<(), String>,
{
    fn observe(
        &mut self,
        state: &State,
        record: &FunctionalRecord,
        step: Option<&StepStats>,
    ) -> Result<(), String> {
        self(state, record, step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Keep every `snapshot_every`-th accepted state; `0` keeps only the
    /// first and last.
    pub snapshot_every: usize,
    /// Compare the analytic Jacobian with finite differences on the
    /// initial state and fail on disagreement.
    pub check_jacobian: bool,
    /// Newton solves with at most this many iterations count as easy.
    pub easy_iterations: usize,
    pub growth: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { snapshot_every: 1, check_jacobian: true, easy_iterations: 4, growth: 1.2 }
    }
}

/// Why a run stopped before `t_end`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Abort {
    pub t: f64,
    pub dt: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub snapshots: Vec<State>,
    /// One record per accepted state, starting with the initial one.
    pub records: Vec<FunctionalRecord>,
    pub steps: Vec<StepStats>,
    pub rejected_steps: usize,
    pub jacobian_error: Option<f64>,
    pub aborted: Option<Abort>,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.snapshots.last().expect("a trajectory always holds the initial state")
    }

    /// `|M(T) - M(0)| / M(0)`.
    pub fn relative_mass_drift(&self) -> f64 {
        let first = self.records.first().map(|r| r.mass).unwrap_or(0.0);
        let worst = self.records.iter().map(|r| (r.mass - first).abs()).fold(0.0, f64::max);
        worst / first.abs()
    }
}

const JACOBIAN_TOL: f64 = 1e-5;

/// Lifts `h0`, then integrates to `t_end`.
///
/// A step that fails with a retryable error is retried at half the size.
/// Once the step would fall below `dt_min` the run stops and the partial
/// trajectory is returned with [`Trajectory::aborted`] set.
pub fn run(
    config: &ValidatedConfig,
    h0: &[f64],
    options: RunOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory, SolverError> {
    let disc = config.disc();
    if h0.len() != disc.cells {
        return Err(SolverError::SizeMismatch { expected: disc.cells, got: h0.len() });
    }
    let solver = Solver::new(config);
    let functionals = Functionals::new(config);
    let mut state = lift_initial_data(h0, config.reg())?;

    let jacobian_error = if options.check_jacobian {
        let err = solver.jacobian_check(&state, disc.dt0)?;
        if err > JACOBIAN_TOL {
            return Err(SolverError::JacobianMismatch(err));
        }
        Some(err)
    } else {
        None
    };

    let record = functionals.record(&state)?;
    for obs in observers.iter_mut() {
        obs.observe(&state, &record, None).map_err(SolverError::Observer)?;
    }
    let mut traj = Trajectory {
        grid: solver.grid(),
        snapshots: vec![state.clone()],
        records: vec![record],
        steps: Vec::new(),
        rejected_steps: 0,
        jacobian_error,
        aborted: None,
    };

    let t_end = disc.t_end;
    let close = 1e-12 * t_end.max(1.0);
    let mut dt = disc.dt0;
    let mut last_saved = true;
    while t_end - state.t > close {
        let remaining = t_end - state.t;
        let trial = dt.min(remaining);
        match solver.step(&state, trial) {
            Ok((mut next, stats)) => {
                if t_end - next.t <= close {
                    next.t = t_end;
                }
                state = next;
                if stats.newton_iterations <= options.easy_iterations && trial == dt {
                    dt = (dt * options.growth).min(disc.dt_max);
                }
                let record = functionals.record(&state)?;
                for obs in observers.iter_mut() {
                    obs.observe(&state, &record, Some(&stats)).map_err(SolverError::Observer)?;
                }
                traj.records.push(record);
                traj.steps.push(stats);
                last_saved = options.snapshot_every > 0 && traj.steps.len().is_multiple_of(options.snapshot_every);
                if last_saved {
                    traj.snapshots.push(state.clone());
                }
            }
            Err(e) if e.is_retryable() => {
                traj.rejected_steps += 1;
                dt = trial * 0.5;
                if dt < disc.dt_min {
                    traj.aborted = Some(Abort { t: state.t, dt, reason: e.to_string() });
                    break;
                }
            }
            Err(e) => return Err(e),
        }
    }
    if !last_saved {
        traj.snapshots.push(state);
    }
    Ok(traj)
}
