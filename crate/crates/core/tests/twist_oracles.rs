use std::f64::consts::PI;

use commuteflow_core::integrator::{integrate, IntegratorConfig};
use commuteflow_core::spectral2::{frame_distance, from_spectral, to_spectral_mats, SpectralFlow};
use commuteflow_core::twist::{
    alpha_of_t, analytic_spectrum, dft, dft_block_eigenvalues, make_twist, max_imaginary_part,
    numeric_spectrum, rescaled_time, twist_jacobian, RescaledTwistFlow, STRUCTURE_TOL,
};
use commuteflow_core::Spectrum;
use nalgebra::DMatrix;
use num_complex::Complex64;

#[test]
fn numeric_spectrum_matches_closed_form() {
    for n in 3..=8 {
        let j = twist_jacobian(n, 1).unwrap();
        j.check_structure(STRUCTURE_TOL).unwrap();
        let num = numeric_spectrum(&j).unwrap();
        assert!(num.matches(&analytic_spectrum(n), 1e-10), "N={n}: {num}");
    }
}

#[test]
fn dense_eigensolver_agrees() {
    for n in 3..=8 {
        let red = twist_jacobian(n, 1).unwrap().full_matrix();
        let dense = DMatrix::from_row_slice(3 * n, 3 * n, red.as_slice());
        let eig = dense.complex_eigenvalues();
        assert!(eig.iter().all(|z| z.im.abs() < 1e-8));
        let got = Spectrum::from_values(eig.iter().map(|z| z.re).collect());
        assert!(got.matches(&analytic_spectrum(n), 1e-8), "N={n}: {got}");
    }
}

#[test]
fn general_winding_spectra_agree_with_dense_solver() {
    for n in 3..=8 {
        for w in 1..n {
            let j = twist_jacobian(n, w).unwrap();
            let cs = dft_block_eigenvalues(&j).unwrap();
            if max_imaginary_part(&cs) > 1e-9 {
                continue;
            }
            let num = numeric_spectrum(&j).unwrap();
            let dense = DMatrix::from_row_slice(3 * n, 3 * n, j.full_matrix().as_slice());
            let eig = Spectrum::from_values(dense.complex_eigenvalues().iter().map(|z| z.re).collect());
            assert!(num.matches(&eig, 1e-7), "N={n} w={w}: {num} vs {eig}");
        }
    }
}

#[test]
fn instability_for_every_size() {
    for n in 2..=12 {
        let num = numeric_spectrum(&twist_jacobian(n, 1).unwrap()).unwrap();
        assert!(num.max().unwrap() > 0.5, "N={n}: {num}");
    }
}

#[test]
fn printed_block_eigenvalues() {
    for n in 3..=8 {
        let cs = dft_block_eigenvalues(&twist_jacobian(n, 1).unwrap()).unwrap();
        let nf = n as f64;
        for alpha in 0..n {
            let edge = alpha == 1 || alpha == n - 1;
            let a = if edge { nf / 2.0 } else { 0.0 };
            let c = if alpha == 0 { -nf } else if edge { nf / 2.0 } else { 0.0 };
            let b = if alpha == 1 {
                Complex64::new(0.0, -nf / 4.0)
            } else if alpha == n - 1 {
                Complex64::new(0.0, nf / 4.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!((cs.a[alpha] - a).norm() <= 1e-12);
            assert!((cs.c[alpha] - c).norm() <= 1e-12);
            assert!((cs.b[alpha] - b).norm() <= 1e-12, "N={n} α={alpha} {}", cs.b[alpha]);
        }
    }
}

#[test]
fn fourier_identities() {
    for n in 3..=8usize {
        let nf = n as f64;
        let ones = vec![1.0; n];
        let cos: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / nf).cos()).collect();
        let sin: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / nf).sin()).collect();
        let (f1, fc, fs) = (dft(&ones), dft(&cos), dft(&sin));
        for k in 0..n {
            let plain = if k == 0 { nf } else { 0.0 };
            let c = if k == 1 || k == n - 1 { nf / 2.0 } else { 0.0 };
            let s = if k == 1 { nf / 2.0 } else if k == n - 1 { -nf / 2.0 } else { 0.0 };
            assert!((f1[k] - plain).norm() <= 1e-12);
            assert!((fc[k] - c).norm() <= 1e-12);
            assert!((fs[k] - Complex64::new(0.0, s)).norm() <= 1e-12, "n={n} k={k} {}", fs[k]);
        }
    }
}

#[test]
fn twist_manifold_is_invariant_under_the_matrix_flow() {
    let s0 = make_twist(3, 1, 2.0, &[8.0, 6.0, 4.0]).unwrap();
    let ens = from_spectral(&s0).unwrap();
    let traj = integrate(&ens, ens.mats().to_vec(), &IntegratorConfig::fixed(1e-3, 8.0).record_every(100)).unwrap();
    for (t, mats) in traj.times.iter().zip(&traj.states) {
        let s = to_spectral_mats(mats).unwrap();
        for i in 0..3 {
            assert!(frame_distance(s.theta[i], s0.theta[i]) <= 1e-8, "t={t}");
            assert!((s.gap(i).abs() - alpha_of_t(2.0, 3, *t)).abs() <= 1e-6, "t={t}");
        }
    }
}

#[test]
fn gap_ode_follows_algebraic_decay() {
    let s0 = make_twist(3, 1, 2.0, &[0.0; 3]).unwrap();
    let traj = integrate(&SpectralFlow::unforced(), s0, &IntegratorConfig::fixed(1e-3, 8.0).record_every(50)).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        assert!((s.gap(0) - alpha_of_t(2.0, 3, *t)).abs() <= 1e-7);
    }
}

#[test]
fn rescaled_flow_stays_at_unit_gap_on_the_manifold() {
    // Starting off unit gap on the twist manifold, the rescaled gap relaxes
    // to 1 along s with α'(s) = (N/2)(α - α³).
    let n = 4;
    let s0 = make_twist(n, 1, 0.5, &[0.0; 4]).unwrap();
    let traj = integrate(&RescaledTwistFlow, s0, &IntegratorConfig::fixed(1e-3, 6.0)).unwrap();
    let end = traj.last_state().unwrap();
    assert!((end.gap(0) - 1.0).abs() < 1e-4);
}

#[test]
fn rescaled_time_integrates_alpha_squared() {
    let (a0, n, t_end) = (2.0, 3, 5.0);
    let steps = 200_000;
    let dt = t_end / steps as f64;
    let mut acc = 0.0;
    for k in 0..steps {
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        let tm = 0.5 * (t0 + t1);
        let f = |t: f64| alpha_of_t(a0, n, t).powi(2);
        acc += dt / 6.0 * (f(t0) + 4.0 * f(tm) + f(t1));
    }
    assert!((acc - rescaled_time(a0, n, t_end)).abs() < 1e-10);
}
