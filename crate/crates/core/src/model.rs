//! The ensemble phase space and the commutator gradient flow.
//!
//! An [`Ensemble`] holds `N` real symmetric `n×n` matrices `M_i`, symmetric
//! nonnegative coupling weights `a_ij`, optional skew-symmetric forcing `Ω_i`
//! and an optional norm constraint. Its energy is
//!
//! ```text
//! E = ¼ Σ_{i,j} a_ij ‖[M_i, M_j]‖²_F
//! ```
//!
//! and the flow is gradient descent on `E` plus forcing and constraint terms:
//!
//! ```text
//! dM_i/dt = [Ω_i, M_i] + Σ_j a_ij [M_j, [M_i, M_j]] - μ_i M_i
//! μ_i     = Σ_j a_ij tr(M_i [M_j, [M_i, M_j]]) / tr(M_i²)      (constrained only)
//! ```
//!
//! Sums over `j` always run in ascending order so results are bitwise
//! reproducible.

use crate::error::{check_dim, Error, Result};
use crate::integrator::Dynamics;
use crate::symmat::{
    commutator, conjugate, conjugate_skew, hs_inner, nested_commutator, skew_sym_commutator, Mat,
    SkewMat, SymMat,
};

/// Squared norms below this count as zero when validating constrained input.
pub const MIN_CONSTRAINED_NORM: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    mats: Vec<SymMat>,
    weights: Mat,
    omegas: Option<Vec<SkewMat>>,
    constrained: bool,
    initial_norms: Vec<f64>,
}

/// Unit all-to-all coupling: a_ij = 1 for i ≠ j, zero diagonal.
pub fn all_to_all(n_osc: usize) -> Mat {
    Mat::from_fn(n_osc, |i, j| if i == j { 0.0 } else { 1.0 })
}

impl Ensemble {
    /// Unforced, unconstrained ensemble with unit all-to-all coupling.
    pub fn new(mats: Vec<SymMat>) -> Result<Self> {
        let w = all_to_all(mats.len());
        Self::with_weights(mats, w)
    }

    pub fn with_weights(mats: Vec<SymMat>, weights: Mat) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::InvalidEnsemble("ensemble needs at least one matrix".into()));
        }
        let n = mats[0].n();
        for m in &mats {
            check_dim(n, m.n())?;
        }
        check_dim(mats.len(), weights.n())?;
        if weights.asymmetry() > 0.0 {
            return Err(Error::InvalidEnsemble("coupling weights must be symmetric".into()));
        }
        if weights.as_slice().iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidEnsemble("coupling weights must be nonnegative".into()));
        }
        Ok(Ensemble { mats, weights, omegas: None, constrained: false, initial_norms: Vec::new() })
    }

    /// Adds skew-symmetric forcing, one matrix per oscillator.
    pub fn with_omegas(mut self, omegas: Vec<SkewMat>) -> Result<Self> {
        check_dim(self.n_osc(), omegas.len())?;
        for o in &omegas {
            check_dim(self.dim(), o.n())?;
        }
        self.omegas = Some(omegas);
        Ok(self)
    }

    /// Turns on the Lagrange term and freezes the current tr(M_i²) as the
    /// conserved values.
    pub fn constrained(mut self) -> Result<Self> {
        self.initial_norms = norms_checked(&self.mats)?;
        self.constrained = true;
        Ok(self)
    }

    /// Same coupling, forcing and constraint values, new state.
    pub fn with_mats(&self, mats: Vec<SymMat>) -> Result<Self> {
        check_dim(self.n_osc(), mats.len())?;
        for m in &mats {
            check_dim(self.dim(), m.n())?;
        }
        Ok(Ensemble { mats, ..self.clone() })
    }

    pub fn mats(&self) -> &[SymMat] {
        &self.mats
    }

    pub fn into_mats(self) -> Vec<SymMat> {
        self.mats
    }

    pub fn n_osc(&self) -> usize {
        self.mats.len()
    }

    pub fn dim(&self) -> usize {
        self.mats[0].n()
    }

    pub fn weights(&self) -> &Mat {
        &self.weights
    }

    pub fn omegas(&self) -> Option<&[SkewMat]> {
        self.omegas.as_deref()
    }

    pub fn is_constrained(&self) -> bool {
        self.constrained
    }

    pub fn initial_norms(&self) -> &[f64] {
        &self.initial_norms
    }

    pub fn energy(&self) -> f64 {
        self.energy_at(&self.mats)
    }

    pub fn flow_rhs(&self) -> Vec<SymMat> {
        self.rhs_at(&self.mats)
    }

    /// Entry (i, j) is ‖[M_i, M_j]‖²_F.
    pub fn pair_commutator_norms(&self) -> Mat {
        pair_norms(&self.mats)
    }

    /// μ_i for the current state (always ≤ 0).
    pub fn lagrange_multiplier(&self, i: usize) -> Result<f64> {
        if i >= self.n_osc() {
            return Err(Error::InvalidArgument(format!("oscillator index {i} out of range")));
        }
        let norm = self.mats[i].frobenius_norm_sq();
        if norm <= MIN_CONSTRAINED_NORM {
            return Err(Error::VanishingNorm(i));
        }
        let coupling = self.coupling(&self.mats, i);
        Ok(hs_inner(&self.mats[i], &coupling)? / norm)
    }

    pub fn lagrange_multipliers(&self) -> Result<Vec<f64>> {
        (0..self.n_osc()).map(|i| self.lagrange_multiplier(i)).collect()
    }

    /// Central-difference check of the flow against -∇E.
    ///
    /// Every coordinate direction of every matrix is probed: unit diagonal
    /// entries and symmetric off-diagonal pairs `E_ab + E_ba`. The returned
    /// value is `max |fd - predicted| / max |predicted|`, where `predicted`
    /// is the directional derivative implied by `flow_rhs`. When the flow
    /// vanishes identically the absolute deviation is returned instead.
    pub fn gradient_check(&self, h: f64) -> Result<f64> {
        if self.omegas.is_some() || self.constrained {
            return Err(Error::InvalidArgument(
                "gradient check needs an unforced, unconstrained ensemble".into(),
            ));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
        }
        let rhs = self.flow_rhs();
        let n = self.dim();
        let mut max_err = 0.0f64;
        let mut scale = 0.0f64;
        let mut probe = self.mats.clone();
        for i in 0..self.n_osc() {
            for a in 0..n {
                for b in a..n {
                    let mut dir = SymMat::zeros(n).into_mat();
                    dir.set(a, b, 1.0);
                    dir.set(b, a, 1.0);
                    let dir = SymMat::from_upper(&dir);
                    probe[i] = self.mats[i].add_scaled(h, &dir);
                    let ep = self.energy_at(&probe);
                    probe[i] = self.mats[i].add_scaled(-h, &dir);
                    let em = self.energy_at(&probe);
                    probe[i] = self.mats[i].clone();
                    let fd = (ep - em) / (2.0 * h);
                    let predicted = -hs_inner(&rhs[i], &dir)?;
                    max_err = max_err.max((fd - predicted).abs());
                    scale = scale.max(predicted.abs());
                }
            }
        }
        Ok(if scale > 0.0 { max_err / scale } else { max_err })
    }

    /// M_i ↦ M_i + c_i I. Constraint values are re-read from the shifted state.
    pub fn shift_traces(&self, c: &[f64]) -> Result<Self> {
        check_dim(self.n_osc(), c.len())?;
        let mats = self.mats.iter().zip(c).map(|(m, ci)| m.shift(*ci)).collect();
        self.with_mats_refreshed(mats)
    }

    /// M_i ↦ Q M_i Qᵀ and Ω_i ↦ Q Ω_i Qᵀ.
    pub fn conjugate_all(&self, q: &Mat) -> Result<Self> {
        let mats = self.mats.iter().map(|m| conjugate(m, q)).collect::<Result<Vec<_>>>()?;
        let omegas = match &self.omegas {
            Some(os) => Some(os.iter().map(|o| conjugate_skew(o, q)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        Ok(Ensemble { mats, omegas, ..self.clone() })
    }

    /// Moves to a frame rotating with the common generator Ω̃: Ω_i ↦ Ω_i - Ω̃.
    pub fn rotating_frame(&self, omega_frame: &SkewMat) -> Result<Self> {
        check_dim(self.dim(), omega_frame.n())?;
        let omegas = match &self.omegas {
            Some(os) => os.iter().map(|o| o.sub(omega_frame)).collect(),
            None => vec![omega_frame.scale(-1.0); self.n_osc()],
        };
        Ok(Ensemble { omegas: Some(omegas), ..self.clone() })
    }

    fn with_mats_refreshed(&self, mats: Vec<SymMat>) -> Result<Self> {
        let mut e = self.with_mats(mats)?;
        if e.constrained {
            e.initial_norms = norms_checked(&e.mats)?;
        }
        Ok(e)
    }

    /// Σ_j a_ij [M_j, [M_i, M_j]], j ascending.
    fn coupling(&self, mats: &[SymMat], i: usize) -> SymMat {
        let mut acc = SymMat::zeros(mats[i].n());
        for (j, mj) in mats.iter().enumerate() {
            let a = self.weights.get(i, j);
            if j == i || a == 0.0 {
                continue;
            }
            let nc = nested_commutator(&mats[i], mj).expect("dimensions validated");
            acc = acc.add_scaled(a, &nc);
        }
        acc
    }

    pub(crate) fn energy_at(&self, mats: &[SymMat]) -> f64 {
        let p = pair_norms(mats);
        let mut e = 0.0;
        for i in 0..mats.len() {
            for j in 0..mats.len() {
                if i != j {
                    e += self.weights.get(i, j) * p.get(i, j);
                }
            }
        }
        0.25 * e
    }

    pub(crate) fn rhs_at(&self, mats: &[SymMat]) -> Vec<SymMat> {
        (0..mats.len())
            .map(|i| {
                let mut out = self.coupling(mats, i);
                if self.constrained {
                    let norm = mats[i].frobenius_norm_sq();
                    if norm > 0.0 {
                        let mu = hs_inner(&mats[i], &out).expect("same dim") / norm;
                        out = out.add_scaled(-mu, &mats[i]);
                    }
                }
                if let Some(os) = &self.omegas {
                    let forcing = skew_sym_commutator(&os[i], &mats[i]).expect("same dim");
                    out = forcing.add(&out);
                }
                out
            })
            .collect()
    }
}

fn norms_checked(mats: &[SymMat]) -> Result<Vec<f64>> {
    mats.iter()
        .enumerate()
        .map(|(i, m)| {
            let v = m.frobenius_norm_sq();
            if v > MIN_CONSTRAINED_NORM {
                Ok(v)
            } else {
                Err(Error::VanishingNorm(i))
            }
        })
        .collect()
}

/// Symmetric table of ‖[M_i, M_j]‖²_F with zero diagonal.
pub fn pair_norms(mats: &[SymMat]) -> Mat {
    let n = mats.len();
    let mut out = Mat::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let v = commutator(&mats[i], &mats[j]).expect("same dim").frobenius_norm_sq();
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

impl Dynamics for Ensemble {
    type State = Vec<SymMat>;

    fn rhs(&self, s: &Vec<SymMat>) -> Vec<SymMat> {
        self.rhs_at(s)
    }

    fn energy(&self, s: &Vec<SymMat>) -> f64 {
        self.energy_at(s)
    }

    fn commutator_norms(&self, s: &Vec<SymMat>) -> Mat {
        pair_norms(s)
    }

    fn renormalize(&self, s: &mut Vec<SymMat>) {
        if !self.constrained {
            return;
        }
        for (m, target) in s.iter_mut().zip(&self.initial_norms) {
            let norm = m.frobenius_norm_sq();
            if norm > 0.0 {
                *m = m.scale((target / norm).sqrt());
            }
        }
    }
}
