//! Twisted states of 2×2 ensembles and their linear stability.
//!
//! A twist places N frames evenly around the half-circle of frame angles,
//! `θ_j = π (j-1) w / (2N)`, with a common eigenvalue gap. The frames stay
//! put while the gap decays algebraically as `α(t) = α₀ / √(1 + N α₀² t)`.
//! Rescaling time by α² turns the twist into a fixed point whose Jacobian is
//! block circulant, so its spectrum follows from N independent 2×2 problems.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::integrator::Dynamics;
use crate::spectral2::{pair_norms_closed_form, spectral_rhs, SpectralState2};
use crate::spectrum::Spectrum;
use crate::symmat::Mat;

/// Tolerance for the block-structure checks.
pub const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degeneracy {
    Generic,
    /// w ≡ 0 mod N: every frame coincides.
    Aligned,
    /// 2w ≡ 0 mod N: frames pair up a quarter turn apart.
    Antipodal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistState {
    pub n_osc: usize,
    pub winding: usize,
    pub gap: f64,
    pub traces: Vec<f64>,
}

impl TwistState {
    pub fn new(n_osc: usize, winding: usize, gap: f64, traces: Vec<f64>) -> Result<Self> {
        if n_osc < 2 {
            return Err(Error::InvalidArgument(format!("twist needs N >= 2, got {n_osc}")));
        }
        if winding < 1 {
            return Err(Error::InvalidArgument("winding must be >= 1".into()));
        }
        if !(gap > 0.0) {
            return Err(Error::InvalidArgument(format!("twist gap must be positive, got {gap}")));
        }
        check_dim(n_osc, traces.len())?;
        Ok(TwistState { n_osc, winding, gap, traces })
    }

    pub fn angles(&self) -> Vec<f64> {
        twist_angles(self.n_osc, self.winding)
    }

    pub fn degeneracy(&self) -> Degeneracy {
        degeneracy(self.n_osc, self.winding)
    }

    /// Spectral coordinates with λ¹ = (tr - gap)/2 and λ² = (tr + gap)/2.
    pub fn state(&self) -> SpectralState2 {
        let lam1 = self.traces.iter().map(|t| 0.5 * (t - self.gap)).collect();
        let lam2 = self.traces.iter().map(|t| 0.5 * (t + self.gap)).collect();
        SpectralState2 { theta: self.angles(), lam1, lam2 }
    }
}

pub fn twist_angles(n_osc: usize, winding: usize) -> Vec<f64> {
    (0..n_osc).map(|j| PI * (j * winding) as f64 / (2.0 * n_osc as f64)).collect()
}

pub fn degeneracy(n_osc: usize, winding: usize) -> Degeneracy {
    if winding.is_multiple_of(n_osc) {
        Degeneracy::Aligned
    } else if (2 * winding).is_multiple_of(n_osc) {
        Degeneracy::Antipodal
    } else {
        Degeneracy::Generic
    }
}

pub fn make_twist(n_osc: usize, winding: usize, gap: f64, traces: &[f64]) -> Result<SpectralState2> {
    Ok(TwistState::new(n_osc, winding, gap, traces.to_vec())?.state())
}

/// α(t) = α₀ / √(1 + N α₀² t).
pub fn alpha_of_t(alpha0: f64, n_osc: usize, t: f64) -> f64 {
    alpha0 / (1.0 + n_osc as f64 * alpha0 * alpha0 * t).sqrt()
}

/// Rescaled time s(t) = ∫ α² dt = ln(1 + N α₀² t) / N.
pub fn rescaled_time(alpha0: f64, n_osc: usize, t: f64) -> f64 {
    let n = n_osc as f64;
    (n * alpha0 * alpha0 * t).ln_1p() / n
}

/// Spectral flow with the gap equation shifted by +(N/2)Δλ.
pub fn rescaled_rhs(s: &SpectralState2) -> SpectralState2 {
    let mut d = spectral_rhs(s, None, false);
    let half_n = 0.5 * s.n_osc() as f64;
    for j in 0..s.n_osc() {
        let extra = half_n * s.gap(j);
        d.lam1[j] -= 0.5 * extra;
        d.lam2[j] += 0.5 * extra;
    }
    d
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RescaledTwistFlow;

impl Dynamics for RescaledTwistFlow {
    type State = SpectralState2;

    fn rhs(&self, s: &SpectralState2) -> SpectralState2 {
        rescaled_rhs(s)
    }

    fn commutator_norms(&self, s: &SpectralState2) -> Mat {
        pair_norms_closed_form(s)
    }
}

/// Jacobian of the rescaled (θ, Δλ) system. Rows index the equation, columns
/// the variable. The trace coordinates contribute an extra zero block.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistJacobian {
    pub dg_dtheta: Mat,
    pub dg_dlam: Mat,
    pub df_dtheta: Mat,
    pub df_dlam: Mat,
}

/// Partial derivatives of
/// `g_j = ¼ Σ_k Δλ_k² sin 4(θ_k-θ_j)` and
/// `f_j = -Δλ_j Σ_k Δλ_k² sin² 2(θ_k-θ_j) + (N/2) Δλ_j`.
pub fn assemble_jacobian(s: &SpectralState2) -> TwistJacobian {
    let n = s.n_osc();
    let g = s.gaps();
    let half_n = 0.5 * n as f64;
    let mut dg_dtheta = Mat::zeros(n);
    let mut dg_dlam = Mat::zeros(n);
    let mut df_dtheta = Mat::zeros(n);
    let mut df_dlam = Mat::zeros(n);
    for j in 0..n {
        let (mut gt, mut ft, mut fl) = (0.0, 0.0, half_n);
        for k in 0..n {
            if k == j {
                continue;
            }
            let d = s.theta[k] - s.theta[j];
            let (s4, c4) = (4.0 * d).sin_cos();
            let s2sq = (2.0 * d).sin().powi(2);
            let gk2 = g[k] * g[k];
            dg_dtheta.set(j, k, gk2 * c4);
            dg_dlam.set(j, k, 0.5 * g[k] * s4);
            df_dtheta.set(j, k, -2.0 * g[j] * gk2 * s4);
            df_dlam.set(j, k, -2.0 * g[j] * g[k] * s2sq);
            gt -= gk2 * c4;
            ft += 2.0 * g[j] * gk2 * s4;
            fl -= gk2 * s2sq;
        }
        dg_dtheta.set(j, j, gt);
        df_dtheta.set(j, j, ft);
        df_dlam.set(j, j, fl);
    }
    TwistJacobian { dg_dtheta, dg_dlam, df_dtheta, df_dlam }
}

fn is_circulant(m: &Mat, tol: f64) -> bool {
    let n = m.n();
    (0..n).all(|j| (0..n).all(|k| (m.get(j, k) - m.get(0, (k + n - j) % n)).abs() <= tol))
}

impl TwistJacobian {
    pub fn n_osc(&self) -> usize {
        self.dg_dtheta.n()
    }

    /// Checks circulant blocks, the symmetry pattern and df/dθ = 4 (dg/dΔλ)ᵀ.
    pub fn check_structure(&self, tol: f64) -> Result<()> {
        for (name, m) in self.blocks() {
            if !is_circulant(m, tol) {
                return Err(Error::NotCirculant(name));
            }
        }
        for m in [&self.dg_dtheta, &self.df_dlam] {
            if m.asymmetry() > tol {
                return Err(Error::NotSymmetric(m.asymmetry()));
            }
        }
        for (name, m) in [("dg_dlam", &self.dg_dlam), ("df_dtheta", &self.df_dtheta)] {
            if m.add(&m.transpose()).max_abs() > tol {
                return Err(Error::InvalidArgument(format!("block {name} is not antisymmetric")));
            }
        }
        let d = self.df_dtheta.max_abs_diff(&self.dg_dlam.transpose().scale(4.0));
        if d > tol {
            return Err(Error::InvalidArgument(format!("df_dtheta differs from 4 dg_dlam^T by {d:e}")));
        }
        Ok(())
    }

    pub fn blocks(&self) -> [(&'static str, &Mat); 4] {
        [
            ("dg_dtheta", &self.dg_dtheta),
            ("dg_dlam", &self.dg_dlam),
            ("df_dtheta", &self.df_dtheta),
            ("df_dlam", &self.df_dlam),
        ]
    }

    /// The 2N×2N matrix [[dg/dθ, dg/dΔλ], [df/dθ, df/dΔλ]].
    pub fn reduced_matrix(&self) -> Mat {
        let n = self.n_osc();
        Mat::from_fn(2 * n, |r, c| {
            let b = match (r < n, c < n) {
                (true, true) => &self.dg_dtheta,
                (true, false) => &self.dg_dlam,
                (false, true) => &self.df_dtheta,
                (false, false) => &self.df_dlam,
            };
            b.get(r % n, c % n)
        })
    }

    /// The 3N×3N Jacobian in (trace, θ, Δλ) order.
    pub fn full_matrix(&self) -> Mat {
        let n = self.n_osc();
        let red = self.reduced_matrix();
        Mat::from_fn(3 * n, |r, c| if r < n || c < n { 0.0 } else { red.get(r - n, c - n) })
    }
}

/// Σ_j v_j e^{2πi jα/N} for α = 0..N.
pub fn dft(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    (0..n)
        .map(|alpha| {
            values
                .iter()
                .enumerate()
                .map(|(j, &v)| v * Complex64::cis(2.0 * PI * ((j * alpha) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// Eigenvalues of a circulant matrix: the transform of its first column,
/// indexed by Fourier mode.
pub fn circulant_eigenvalues(m: &Mat, name: &'static str) -> Result<Vec<Complex64>> {
    if !is_circulant(m, STRUCTURE_TOL * m.max_abs().max(1.0)) {
        return Err(Error::NotCirculant(name));
    }
    Ok(dft(&m.column(0)))
}

/// Per-mode eigenvalues of the four Jacobian blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct CirculantSpectrum {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub d: Vec<Complex64>,
    pub c: Vec<Complex64>,
}

impl CirculantSpectrum {
    pub fn n_modes(&self) -> usize {
        self.a.len()
    }

    /// Mode α block [[a_α, b_α], [d_α, c_α]].
    pub fn mode_matrix(&self, alpha: usize) -> [[Complex64; 2]; 2] {
        [[self.a[alpha], self.b[alpha]], [self.d[alpha], self.c[alpha]]]
    }

    /// The two eigenvalues of mode α, from trace and determinant.
    pub fn mode_eigenvalues(&self, alpha: usize) -> [Complex64; 2] {
        eig2(self.mode_matrix(alpha))
    }
}

pub fn eig2(m: [[Complex64; 2]; 2]) -> [Complex64; 2] {
    let half_tr = 0.5 * (m[0][0] + m[1][1]);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let root = (half_tr * half_tr - det).sqrt();
    [half_tr - root, half_tr + root]
}

pub fn dft_block_eigenvalues(j: &TwistJacobian) -> Result<CirculantSpectrum> {
    Ok(CirculantSpectrum {
        a: circulant_eigenvalues(&j.dg_dtheta, "dg_dtheta")?,
        b: circulant_eigenvalues(&j.dg_dlam, "dg_dlam")?,
        d: circulant_eigenvalues(&j.df_dtheta, "df_dtheta")?,
        c: circulant_eigenvalues(&j.df_dlam, "df_dlam")?,
    })
}

/// {-N, N, N} ∪ {0 × (3N-3)}.
pub fn analytic_spectrum(n_osc: usize) -> Spectrum {
    let n = n_osc as f64;
    Spectrum::with_multiplicities(&[(-n, 1), (n, 2), (0.0, 3 * n_osc - 3)])
}

/// Real parts of all per-mode eigenvalues plus N zeros for the traces.
pub fn numeric_spectrum(j: &TwistJacobian) -> Result<Spectrum> {
    let cs = dft_block_eigenvalues(j)?;
    let mut values = vec![0.0; cs.n_modes()];
    for alpha in 0..cs.n_modes() {
        values.extend(cs.mode_eigenvalues(alpha).iter().map(|z| z.re));
    }
    Ok(Spectrum::from_values(values))
}

/// Largest imaginary part among the per-mode eigenvalues.
pub fn max_imaginary_part(cs: &CirculantSpectrum) -> f64 {
    (0..cs.n_modes())
        .flat_map(|a| cs.mode_eigenvalues(a))
        .map(|z| z.im.abs())
        .fold(0.0, f64::max)
}

/// Jacobian at the rescaled fixed point of an N-oscillator twist (gap 1).
pub fn twist_jacobian(n_osc: usize, winding: usize) -> Result<TwistJacobian> {
    let s = make_twist(n_osc, winding, 1.0, &vec![0.0; n_osc])?;
    Ok(assemble_jacobian(&s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral2::from_spectral;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn cclose(z: Complex64, re: f64, im: f64) -> bool {
        (z - Complex64::new(re, im)).norm() <= 1e-12
    }

    #[test]
    fn twist_angles_examples() {
        let t = twist_angles(3, 1);
        assert!(close(t[1], FRAC_PI_6, 1e-15) && close(t[2], FRAC_PI_3, 1e-15));
        assert!(close(twist_angles(2, 1)[1], FRAC_PI_4, 1e-15));
        let full = twist_angles(4, 8);
        assert!(full.iter().all(|&t| close((t / PI).round() * PI, t, 1e-14)));
        assert_eq!(degeneracy(4, 8), Degeneracy::Aligned);
        assert_eq!(degeneracy(4, 2), Degeneracy::Antipodal);
        assert_eq!(degeneracy(5, 2), Degeneracy::Generic);
    }

    #[test]
    fn twist_gap_and_traces() {
        let s = make_twist(3, 1, 2.0, &[8.0, 6.0, 4.0]).unwrap();
        assert_eq!(s.gaps(), vec![2.0; 3]);
        assert_eq!((0..3).map(|i| s.trace(i)).collect::<Vec<_>>(), vec![8.0, 6.0, 4.0]);
        assert!(from_spectral(&s).is_ok());
    }

    #[test]
    fn twist_rejects_bad_input() {
        assert!(make_twist(1, 1, 1.0, &[0.0]).is_err());
        assert!(make_twist(3, 0, 1.0, &[0.0; 3]).is_err());
        assert!(make_twist(3, 1, 0.0, &[0.0; 3]).is_err());
        assert!(make_twist(3, 1, 1.0, &[0.0; 2]).is_err());
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_of_t(2.0, 3, 0.0), 2.0);
        assert!(close(alpha_of_t(2.0, 3, 1.0), 2.0 / 13f64.sqrt(), 1e-15));
        assert!(close(rescaled_time(2.0, 3, 0.0), 0.0, 0.0));
    }

    #[test]
    fn rescaled_fixed_point() {
        for n in 3..9 {
            let s = make_twist(n, 1, 1.0, &vec![0.0; n]).unwrap();
            let d = rescaled_rhs(&s);
            let m = d.theta.iter().chain(&d.lam1).chain(&d.lam2).fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(m <= 1e-14, "N={n}: {m}");
        }
    }

    #[test]
    fn rescaled_aligned_state_grows() {
        let s = SpectralState2::new(vec![0.3; 4], vec![0.0; 4], vec![1.0; 4]).unwrap();
        let d = rescaled_rhs(&s);
        assert!(d.theta.iter().all(|v| v.abs() < 1e-15));
        assert!((0..4).all(|i| close(d.gap(i), 2.0, 1e-14)));
        let z = SpectralState2::zeros(3);
        let d = rescaled_rhs(&z);
        assert!(d.theta.iter().chain(&d.lam1).chain(&d.lam2).all(|v| *v == 0.0));
    }

    #[test]
    fn first_rows_for_three_oscillators() {
        let j = twist_jacobian(3, 1).unwrap();
        let c = (2.0 * PI / 3.0).cos();
        let c2 = (4.0 * PI / 3.0).cos();
        let s = (2.0 * PI / 3.0).sin();
        let s2 = (4.0 * PI / 3.0).sin();
        let want_gt = [1.0, c, c2];
        let want_gl = [0.0, 0.5 * s, 0.5 * s2];
        let want_fl = [0.0, -1.0 + c, -1.0 + c2];
        for k in 0..3 {
            assert!(close(j.dg_dtheta.get(0, k), want_gt[k], 1e-14));
            assert!(close(j.dg_dlam.get(0, k), want_gl[k], 1e-14));
            assert!(close(j.df_dlam.get(0, k), want_fl[k], 1e-14));
        }
    }

    #[test]
    fn jacobian_structure() {
        for n in 2..10 {
            twist_jacobian(n, 1).unwrap().check_structure(STRUCTURE_TOL).unwrap();
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let s = make_twist(5, 1, 1.0, &[0.0; 5]).unwrap();
        let j = assemble_jacobian(&s);
        let red = j.reduced_matrix();
        let h = 1e-6;
        for col in 0..10 {
            let bump = |k: f64| {
                let mut p = s.clone();
                if col < 5 {
                    p.theta[col] += k;
                } else {
                    p.lam1[col - 5] -= 0.5 * k;
                    p.lam2[col - 5] += 0.5 * k;
                }
                rescaled_rhs(&p)
            };
            let (up, dn) = (bump(h), bump(-h));
            for row in 0..10 {
                let fd = if row < 5 {
                    (up.theta[row] - dn.theta[row]) / (2.0 * h)
                } else {
                    (up.gap(row - 5) - dn.gap(row - 5)) / (2.0 * h)
                };
                assert!(close(fd, red.get(row, col), 1e-8), "({row},{col}): {fd} vs {}", red.get(row, col));
            }
        }
    }

    #[test]
    fn block_eigenvalues_for_five() {
        let cs = dft_block_eigenvalues(&twist_jacobian(5, 1).unwrap()).unwrap();
        let want_a = [0.0, 2.5, 0.0, 0.0, 2.5];
        for (alpha, &a) in want_a.iter().enumerate() {
            assert!(cclose(cs.a[alpha], a, 0.0));
        }
        assert!(cclose(cs.b[1], 0.0, -1.25));
        assert!(cclose(cs.b[4], 0.0, 1.25));
        assert!(cclose(cs.c[0], -5.0, 0.0));
        assert!(cclose(cs.c[1], 2.5, 0.0) && cclose(cs.c[4], 2.5, 0.0));
        for alpha in 0..5 {
            assert!((cs.d[alpha] - 4.0 * cs.b[alpha].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn mode_pairs() {
        let cs = dft_block_eigenvalues(&twist_jacobian(4, 1).unwrap()).unwrap();
        let p0 = cs.mode_eigenvalues(0);
        assert!(cclose(p0[0], -4.0, 0.0) && cclose(p0[1], 0.0, 0.0));
        let p1 = cs.mode_eigenvalues(1);
        assert!(cclose(p1[0], 0.0, 0.0) && cclose(p1[1], 4.0, 0.0));
    }

    #[test]
    fn spectrum_three_and_eight() {
        assert_eq!(
            analytic_spectrum(3).values(),
            &[-3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 3.0, 3.0]
        );
        let a8 = analytic_spectrum(8);
        assert_eq!(a8.len(), 24);
        assert_eq!(a8.count_near(0.0, 0.0), 21);
        let num = numeric_spectrum(&twist_jacobian(3, 1).unwrap()).unwrap();
        assert!(num.matches(&analytic_spectrum(3), 1e-10), "{num}");
    }

    #[test]
    fn non_circulant_is_rejected() {
        let mut j = twist_jacobian(4, 1).unwrap();
        j.dg_dlam.set(1, 2, 7.0);
        assert_eq!(dft_block_eigenvalues(&j), Err(Error::NotCirculant("dg_dlam")));
        assert!(j.check_structure(STRUCTURE_TOL).is_err());
    }

    #[test]
    fn cosine_identity() {
        for n in 3..9 {
            let cosines: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).cos()).collect();
            let f = dft(&cosines);
            for (k, z) in f.iter().enumerate() {
                let want = if k == 1 || k == n - 1 { n as f64 / 2.0 } else { 0.0 };
                assert!(cclose(*z, want, 0.0), "n={n} k={k} {z}");
            }
        }
    }

    #[test]
    fn full_matrix_layout() {
        let j = twist_jacobian(3, 1).unwrap();
        let f = j.full_matrix();
        assert_eq!(f.n(), 9);
        assert!((0..9).all(|k| f.get(0, k) == 0.0 && f.get(k, 2) == 0.0));
        assert_eq!(f.get(3, 3), j.dg_dtheta.get(0, 0));
        assert_eq!(f.get(6, 3), j.df_dtheta.get(0, 0));
    }
}
