//! Spectral coordinates for ensembles of 2×2 symmetric matrices.
//!
//! Each matrix is written as `M = R(θ) diag(λ¹, λ²) R(-θ)` with the rotation
//!
//! ```text
//! R(θ) = [[cos θ,  sin θ],
//!         [-sin θ, cos θ]]
//! ```
//!
//! or equivalently `M = ½(λ¹+λ²) E1 + ½(λ²-λ¹) E2(θ)`. Shifting θ by π/2 and
//! swapping the eigenvalues gives the same matrix, so canonical coordinates
//! take θ ∈ [0, π/2) and let the order of (λ¹, λ²) follow the frame. The gap
//! `Δλ = λ² - λ¹` may therefore have either sign; only Δλ² enters the
//! coupling.
//!
//! With unit all-to-all coupling the flow reduces to
//!
//! ```text
//! dθ_i/dt     = ω_i + ¼ Σ_j Δλ_j² sin 4(θ_j - θ_i)
//! dΔλ_i/dt    = -Δλ_i Σ_j Δλ_j² sin² 2(θ_j - θ_i) - μ_i Δλ_i
//! d(λ¹+λ²)/dt = -μ_i (λ¹ + λ²)
//! ```
//!
//! where `μ_i` is zero unless the ensemble is norm-constrained.

use std::f64::consts::FRAC_PI_2;

use crate::error::{check_dim, Error, Result};
use crate::integrator::{Dynamics, OdeState};
use crate::model::Ensemble;
use crate::symmat::{Mat, SkewMat, SymMat};

/// Spectral coordinates (θ_i, λ_i¹, λ_i²) of N 2×2 matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralState2 {
    pub theta: Vec<f64>,
    pub lam1: Vec<f64>,
    pub lam2: Vec<f64>,
}

impl SpectralState2 {
    pub fn new(theta: Vec<f64>, lam1: Vec<f64>, lam2: Vec<f64>) -> Result<Self> {
        check_dim(theta.len(), lam1.len())?;
        check_dim(theta.len(), lam2.len())?;
        Ok(SpectralState2 { theta, lam1, lam2 })
    }

    pub fn zeros(n_osc: usize) -> Self {
        SpectralState2 { theta: vec![0.0; n_osc], lam1: vec![0.0; n_osc], lam2: vec![0.0; n_osc] }
    }

    pub fn n_osc(&self) -> usize {
        self.theta.len()
    }

    /// Δλ_i = λ_i² - λ_i¹.
    pub fn gap(&self, i: usize) -> f64 {
        self.lam2[i] - self.lam1[i]
    }

    pub fn gaps(&self) -> Vec<f64> {
        (0..self.n_osc()).map(|i| self.gap(i)).collect()
    }

    pub fn trace(&self, i: usize) -> f64 {
        self.lam1[i] + self.lam2[i]
    }

    pub fn matrix(&self, i: usize) -> SymMat {
        spectral_matrix(self.theta[i], self.lam1[i], self.lam2[i])
    }

    pub fn to_mats(&self) -> Vec<SymMat> {
        (0..self.n_osc()).map(|i| self.matrix(i)).collect()
    }

    /// Same matrices, coordinates folded into θ ∈ [0, π/2).
    pub fn canonical(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n_osc() {
            let (t, l1, l2) = fold_frame(self.theta[i], self.lam1[i], self.lam2[i]);
            out.theta[i] = t;
            out.lam1[i] = l1;
            out.lam2[i] = l2;
        }
        out
    }

    pub fn is_canonical(&self) -> bool {
        self.theta.iter().all(|t| (0.0..FRAC_PI_2).contains(t))
    }
}

impl OdeState for SpectralState2 {
    fn add_scaled(&self, k: f64, d: &Self) -> Self {
        SpectralState2 {
            theta: self.theta.add_scaled(k, &d.theta),
            lam1: self.lam1.add_scaled(k, &d.lam1),
            lam2: self.lam2.add_scaled(k, &d.lam2),
        }
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.theta
            .max_abs_diff(&other.theta)
            .max(self.lam1.max_abs_diff(&other.lam1))
            .max(self.lam2.max_abs_diff(&other.lam2))
    }
}

// Reduces θ modulo π/2, swapping eigenvalues once per odd quarter turn.
fn fold_frame(theta: f64, lam1: f64, lam2: f64) -> (f64, f64, f64) {
    let quarter_turns = (theta / FRAC_PI_2).floor();
    let mut t = theta - quarter_turns * FRAC_PI_2;
    let mut swap = (quarter_turns as i64).rem_euclid(2) == 1;
    if t >= FRAC_PI_2 {
        t -= FRAC_PI_2;
        swap = !swap;
    }
    if t < 0.0 {
        t = 0.0;
    }
    if swap {
        (t, lam2, lam1)
    } else {
        (t, lam1, lam2)
    }
}

/// R(θ) = [[cos θ, sin θ], [-sin θ, cos θ]].
pub fn rotation(theta: f64) -> Mat {
    let (s, c) = theta.sin_cos();
    Mat::from_rows(&[[c, s], [-s, c]]).expect("2x2")
}

/// The orthogonal basis (E1, E2(θ), E3(θ)) of 2×2 symmetric matrices.
pub fn basis2(theta: f64) -> [SymMat; 3] {
    let (s, c) = (2.0 * theta).sin_cos();
    let e1 = SymMat::identity(2);
    let e2 = SymMat::from_upper(&Mat::from_rows(&[[-c, s], [s, c]]).expect("2x2"));
    let e3 = SymMat::from_upper(&Mat::from_rows(&[[s, c], [c, -s]]).expect("2x2"));
    [e1, e2, e3]
}

/// R(θ) diag(λ¹, λ²) R(-θ).
pub fn spectral_matrix(theta: f64, lam1: f64, lam2: f64) -> SymMat {
    let [e1, e2, _] = basis2(theta);
    e1.scale(0.5 * (lam1 + lam2)).add_scaled(0.5 * (lam2 - lam1), &e2)
}

/// Canonical (θ, λ¹, λ²) of one 2×2 symmetric matrix. Multiples of the
/// identity get θ = 0.
pub fn matrix_to_spectral(m: &SymMat) -> Result<(f64, f64, f64)> {
    check_dim(2, m.n())?;
    let (a, b, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 1));
    let half_trace = 0.5 * (a + d);
    let gap = (a - d).hypot(2.0 * b);
    if gap == 0.0 {
        return Ok((0.0, half_trace, half_trace));
    }
    // m11 - m22 = (λ¹-λ²) cos 2θ and 2 m12 = (λ²-λ¹) sin 2θ
    let theta = 0.5 * (-2.0 * b).atan2(a - d);
    Ok(fold_frame(theta, half_trace + 0.5 * gap, half_trace - 0.5 * gap))
}

pub fn to_spectral_mats(mats: &[SymMat]) -> Result<SpectralState2> {
    let mut s = SpectralState2::zeros(mats.len());
    for (i, m) in mats.iter().enumerate() {
        let (t, l1, l2) = matrix_to_spectral(m)?;
        s.theta[i] = t;
        s.lam1[i] = l1;
        s.lam2[i] = l2;
    }
    Ok(s)
}

pub fn to_spectral(ens: &Ensemble) -> Result<SpectralState2> {
    to_spectral_mats(ens.mats())
}

/// Unit all-to-all ensemble built from spectral coordinates.
pub fn from_spectral(s: &SpectralState2) -> Result<Ensemble> {
    if s.n_osc() == 0 {
        return Err(Error::InvalidEnsemble("no oscillators".into()));
    }
    Ensemble::new(s.to_mats())
}

/// [M_j, [M_i, M_j]] in closed form:
/// ½ (λ_j¹-λ_j²)² (λ_i¹-λ_i²) sin 2(θ_i-θ_j) E3(θ_j).
pub fn nested_commutator_closed_form(s: &SpectralState2, i: usize, j: usize) -> SymMat {
    let gj = s.lam1[j] - s.lam2[j];
    let gi = s.lam1[i] - s.lam2[i];
    let coef = 0.5 * gj * gj * gi * (2.0 * (s.theta[i] - s.theta[j])).sin();
    let [_, _, e3] = basis2(s.theta[j]);
    e3.scale(coef)
}

/// Closed-form Lagrange multiplier of oscillator `i` (unit coupling).
pub fn lagrange_multiplier(s: &SpectralState2, i: usize) -> f64 {
    let norm = s.lam1[i] * s.lam1[i] + s.lam2[i] * s.lam2[i];
    if norm == 0.0 {
        return 0.0;
    }
    let gi2 = s.gap(i).powi(2);
    let sum: f64 = (0..s.n_osc())
        .map(|j| s.gap(j).powi(2) * gi2 * (2.0 * (s.theta[i] - s.theta[j])).sin().powi(2))
        .sum();
    -0.5 * sum / norm
}

/// ‖[M_i, M_j]‖² = ½ Δλ_i² Δλ_j² sin² 2(θ_i-θ_j).
pub fn pair_norms_closed_form(s: &SpectralState2) -> Mat {
    let n = s.n_osc();
    Mat::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            0.5 * s.gap(i).powi(2) * s.gap(j).powi(2) * (2.0 * (s.theta[i] - s.theta[j])).sin().powi(2)
        }
    })
}

/// Time derivative of the spectral coordinates (unit all-to-all coupling).
///
/// `omegas[i]` is the rotation rate of Ω_i = [[0, ω_i], [-ω_i, 0]].
pub fn spectral_rhs(
    s: &SpectralState2,
    omegas: Option<&[f64]>,
    constrained: bool,
) -> SpectralState2 {
    let n = s.n_osc();
    let gaps = s.gaps();
    let mut out = SpectralState2::zeros(n);
    for i in 0..n {
        let mut theta_dot = omegas.map_or(0.0, |w| w[i]);
        let mut sync = 0.0;
        for j in 0..n {
            let d = s.theta[j] - s.theta[i];
            let g2 = gaps[j] * gaps[j];
            theta_dot += 0.25 * g2 * (4.0 * d).sin();
            sync += g2 * (2.0 * d).sin().powi(2);
        }
        let mu = if constrained { lagrange_multiplier(s, i) } else { 0.0 };
        let gap_dot = -gaps[i] * sync - mu * gaps[i];
        let trace_dot = -mu * s.trace(i);
        out.theta[i] = theta_dot;
        out.lam1[i] = 0.5 * (trace_dot - gap_dot);
        out.lam2[i] = 0.5 * (trace_dot + gap_dot);
    }
    out
}

/// Maps a spectral velocity `ds` at `s` to the matrix velocity of oscillator `i`:
/// dM = ½ d(λ¹+λ²) E1 + ½ dΔλ E2(θ) + Δλ dθ E3(θ).
pub fn tangent_to_matrix(s: &SpectralState2, ds: &SpectralState2, i: usize) -> SymMat {
    let [e1, e2, e3] = basis2(s.theta[i]);
    e1.scale(0.5 * ds.trace(i))
        .add_scaled(0.5 * ds.gap(i), &e2)
        .add_scaled(s.gap(i) * ds.theta[i], &e3)
}

/// Distance from θa - θb to the nearest multiple of π/2.
pub fn frame_distance(theta_a: f64, theta_b: f64) -> f64 {
    let r = (theta_a - theta_b).rem_euclid(FRAC_PI_2);
    r.min(FRAC_PI_2 - r)
}

/// Largest pairwise frame distance in the ensemble.
pub fn max_frame_spread(s: &SpectralState2) -> f64 {
    let mut m = 0.0f64;
    for i in 0..s.n_osc() {
        for j in i + 1..s.n_osc() {
            m = m.max(frame_distance(s.theta[i], s.theta[j]));
        }
    }
    m
}

/// Removes jumps of π/2 from a sampled angle series, for plotting.
pub fn unwrap_angles(series: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let mut offset = 0.0;
    for (k, &t) in series.iter().enumerate() {
        if k > 0 {
            let prev = series[k - 1];
            let jump = ((t - prev) / FRAC_PI_2).round();
            offset -= jump * FRAC_PI_2;
        }
        out.push(t + offset);
    }
    out
}

/// Rotation rate ω of a 2×2 skew matrix [[0, ω], [-ω, 0]].
pub fn omega_rate(omega: &SkewMat) -> Result<f64> {
    check_dim(2, omega.n())?;
    Ok(omega.get(0, 1))
}

/// The reduced flow as an integrable system.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpectralFlow {
    pub omegas: Option<Vec<f64>>,
    pub constrained: bool,
}

impl SpectralFlow {
    pub fn unforced() -> Self {
        Self::default()
    }

    /// Reads forcing and constraint flags off a 2×2 unit-coupled ensemble.
    pub fn for_ensemble(ens: &Ensemble) -> Result<Self> {
        check_dim(2, ens.dim())?;
        let omegas = match ens.omegas() {
            Some(os) => Some(os.iter().map(omega_rate).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        Ok(SpectralFlow { omegas, constrained: ens.is_constrained() })
    }
}

impl Dynamics for SpectralFlow {
    type State = SpectralState2;

    fn rhs(&self, s: &SpectralState2) -> SpectralState2 {
        spectral_rhs(s, self.omegas.as_deref(), self.constrained)
    }

    fn energy(&self, s: &SpectralState2) -> f64 {
        // ¼ Σ_{i≠j} ‖[M_i, M_j]‖²
        0.25 * pair_norms_closed_form(s).as_slice().iter().sum::<f64>()
    }

    fn commutator_norms(&self, s: &SpectralState2) -> Mat {
        pair_norms_closed_form(s)
    }
}
