//! Classical Runge-Kutta time stepping with trajectory recording.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmat::{Mat, SymMat};

/// Smallest step the integrator will take.
pub const MIN_STEP: f64 = 1e-12;

/// A point in phase space that supports the linear combinations RK4 needs.
pub trait OdeState: Clone {
    /// self + k·d
    fn add_scaled(&self, k: f64, d: &Self) -> Self;
    /// Max-norm distance, used by step doubling.
    fn max_abs_diff(&self, other: &Self) -> f64;
}

impl OdeState for f64 {
    fn add_scaled(&self, k: f64, d: &f64) -> f64 {
        self + k * d
    }
    fn max_abs_diff(&self, other: &f64) -> f64 {
        nan_as_inf(0.0, (self - other).abs())
    }
}

impl OdeState for Vec<f64> {
    fn add_scaled(&self, k: f64, d: &Self) -> Self {
        self.iter().zip(d).map(|(a, b)| a + k * b).collect()
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter().zip(other).fold(0.0, |m, (a, b)| nan_as_inf(m, (a - b).abs()))
    }
}

// Entrywise updates of symmetric data stay exactly symmetric.
impl OdeState for Vec<SymMat> {
    fn add_scaled(&self, k: f64, d: &Self) -> Self {
        self.iter().zip(d).map(|(a, b)| a.add_scaled(k, b)).collect()
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter().zip(other).fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }
}

// A NaN difference must never look like convergence.
pub(crate) fn nan_as_inf(m: f64, d: f64) -> f64 {
    if d.is_nan() {
        f64::INFINITY
    } else {
        m.max(d)
    }
}

/// A right-hand side together with the observables recorded along a trajectory.
pub trait Dynamics {
    type State: OdeState;

    fn rhs(&self, s: &Self::State) -> Self::State;

    fn energy(&self, _s: &Self::State) -> f64 {
        0.0
    }

    /// Pairwise ‖[M_i, M_j]‖² table; empty for systems without matrices.
    fn commutator_norms(&self, _s: &Self::State) -> Mat {
        Mat::zeros(0)
    }

    /// Projection applied after each step when `renormalize` is set.
    fn renormalize(&self, _s: &mut Self::State) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
    Rk4StepDoubling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub h: f64,
    pub t_end: f64,
    pub method: Method,
    /// Local error tolerance, step doubling only.
    pub tol: f64,
    pub record_every: usize,
    pub stop_commutator_tol: Option<f64>,
    pub renormalize: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            h: 1e-3,
            t_end: 1.0,
            method: Method::Rk4,
            tol: 1e-8,
            record_every: 1,
            stop_commutator_tol: None,
            renormalize: false,
        }
    }
}

impl IntegratorConfig {
    pub fn fixed(h: f64, t_end: f64) -> Self {
        IntegratorConfig { h, t_end, ..Default::default() }
    }

    pub fn record_every(mut self, stride: usize) -> Self {
        self.record_every = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidArgument(format!("step h must be positive, got {}", self.h)));
        }
        if self.h < MIN_STEP {
            return Err(Error::StepUnderflow { t: 0.0, h: self.h });
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub commutator_norms: Vec<Mat>,
    pub states: Vec<S>,
    pub config: IntegratorConfig,
    pub seed: Option<u64>,
    /// Set when `stop_commutator_tol` ended the run before `t_end`.
    pub stopped_early: bool,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&S> {
        self.states.last()
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    fn record<D: Dynamics<State = S>>(&mut self, sys: &D, t: f64, s: &S)
    where
        S: Clone,
    {
        self.times.push(t);
        self.energies.push(sys.energy(s));
        self.commutator_norms.push(sys.commutator_norms(s));
        self.states.push(s.clone());
    }
}

/// One classical fourth-order Runge-Kutta step.
pub fn step_rk4<S: OdeState>(s: &S, rhs: impl Fn(&S) -> S, h: f64) -> S {
    let k1 = rhs(s);
    let k2 = rhs(&s.add_scaled(0.5 * h, &k1));
    let k3 = rhs(&s.add_scaled(0.5 * h, &k2));
    let k4 = rhs(&s.add_scaled(h, &k3));
    s.add_scaled(h / 6.0, &k1)
        .add_scaled(h / 3.0, &k2)
        .add_scaled(h / 3.0, &k3)
        .add_scaled(h / 6.0, &k4)
}

fn max_entry(m: &Mat) -> f64 {
    m.max_abs()
}

/// Integrates `sys` from `init` over `[0, cfg.t_end]`.
///
/// The initial and final states are always recorded, plus every
/// `record_every`-th accepted step in between.
pub fn integrate<D: Dynamics>(
    sys: &D,
    init: D::State,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<D::State>> {
    cfg.validate()?;
    let mut traj = Trajectory {
        times: Vec::new(),
        energies: Vec::new(),
        commutator_norms: Vec::new(),
        states: Vec::new(),
        config: cfg.clone(),
        seed: None,
        stopped_early: false,
    };
    let rhs = |s: &D::State| sys.rhs(s);
    let below_stop = |s: &D::State| match cfg.stop_commutator_tol {
        Some(tol) => max_entry(&sys.commutator_norms(s)) <= tol,
        None => false,
    };

    let mut state = init;
    let mut t = 0.0;
    traj.record(sys, t, &state);
    if cfg.t_end == 0.0 {
        return Ok(traj);
    }
    if below_stop(&state) {
        traj.stopped_early = true;
        return Ok(traj);
    }

    let mut steps = 0usize;
    let mut h_cur = cfg.h;
    let mut last_recorded = true;
    while t < cfg.t_end {
        let (next, t_next) = match cfg.method {
            Method::Rk4 => {
                let mut t_next = (steps + 1) as f64 * cfg.h;
                if t_next > cfg.t_end || cfg.t_end - t_next < 1e-9 * cfg.h {
                    t_next = cfg.t_end;
                }
                (step_rk4(&state, rhs, t_next - t), t_next)
            }
            Method::Rk4StepDoubling => loop {
                let remaining = cfg.t_end - t;
                let (h, landing) = if h_cur >= remaining * (1.0 - 1e-9) {
                    (remaining, true)
                } else {
                    (h_cur, false)
                };
                let full = step_rk4(&state, rhs, h);
                let half = step_rk4(&step_rk4(&state, rhs, 0.5 * h), rhs, 0.5 * h);
                let err = full.max_abs_diff(&half);
                if !(err <= cfg.tol) {
                    h_cur = 0.5 * h;
                    if h_cur < MIN_STEP {
                        return Err(Error::StepUnderflow { t, h: h_cur });
                    }
                    continue;
                }
                if err < cfg.tol / 16.0 && !landing {
                    h_cur = (2.0 * h_cur).min(cfg.h);
                }
                break (half, if landing { cfg.t_end } else { t + h });
            },
        };
        state = next;
        if cfg.renormalize {
            sys.renormalize(&mut state);
        }
        t = t_next;
        steps += 1;
        last_recorded = false;

        if below_stop(&state) {
            traj.record(sys, t, &state);
            traj.stopped_early = t < cfg.t_end;
            return Ok(traj);
        }
        if steps.is_multiple_of(cfg.record_every) {
            traj.record(sys, t, &state);
            last_recorded = true;
        }
    }
    if !last_recorded {
        traj.record(sys, t, &state);
    }
    Ok(traj)
}
