use commuteflow_core::integrator::{integrate, IntegratorConfig};
use commuteflow_core::model::Ensemble;
use commuteflow_core::spectral2::{
    frame_distance, lagrange_multiplier, nested_commutator_closed_form, pair_norms_closed_form,
    spectral_rhs, tangent_to_matrix, to_spectral, to_spectral_mats, SpectralFlow, SpectralState2,
};
use commuteflow_core::symmat::{nested_commutator, random_symmetric_with, seeded_rng, SkewMat, SymMat};
use proptest::prelude::*;

fn fig1() -> Vec<SymMat> {
    vec![
        SymMat::from_rows(&[[1.0, 2.0], [2.0, 3.0]]).unwrap(),
        SymMat::from_rows(&[[2.0, 1.0], [1.0, 5.0]]).unwrap(),
        SymMat::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap(),
    ]
}

fn random_mats(n_osc: usize, seed: u64) -> Vec<SymMat> {
    let mut rng = seeded_rng(seed);
    (0..n_osc).map(|_| random_symmetric_with(2, 1.0, &mut rng)).collect()
}

#[test]
fn closed_form_matches_direct_nested_commutator() {
    let mut rng = seeded_rng(2024);
    for _ in 0..1000 {
        let pair = [random_symmetric_with(2, 2.0, &mut rng), random_symmetric_with(2, 2.0, &mut rng)];
        let s = to_spectral_mats(&pair).unwrap();
        let cf = nested_commutator_closed_form(&s, 0, 1);
        let direct = nested_commutator(&pair[0], &pair[1]).unwrap();
        assert!(cf.max_abs_diff(&direct) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_through_spectral(seed in any::<u64>()) {
        let mats = random_mats(4, seed);
        let s = to_spectral_mats(&mats).unwrap();
        prop_assert!(s.is_canonical());
        for (i, m) in mats.iter().enumerate() {
            prop_assert!(s.matrix(i).max_abs_diff(m) <= 1e-12);
        }
    }

    #[test]
    fn spectral_rhs_is_the_matrix_flow(seed in any::<u64>(), n_osc in 2usize..6, constrained in any::<bool>(), forced in any::<bool>()) {
        let mats = random_mats(n_osc, seed);
        let mut ens = Ensemble::new(mats.clone()).unwrap();
        let omegas: Vec<f64> = (0..n_osc).map(|i| 0.3 * i as f64 - 0.5).collect();
        if forced {
            ens = ens.with_omegas(omegas.iter().map(|w| SkewMat::rotation2(*w)).collect()).unwrap();
        }
        if constrained {
            ens = ens.constrained().unwrap();
        }
        let s = to_spectral(&ens).unwrap();
        let ds = spectral_rhs(&s, forced.then_some(&omegas[..]), constrained);
        for (i, dm) in ens.flow_rhs().iter().enumerate() {
            prop_assert!(tangent_to_matrix(&s, &ds, i).max_abs_diff(dm) <= 1e-9);
        }
        if constrained {
            for (i, mu) in ens.lagrange_multipliers().unwrap().iter().enumerate() {
                prop_assert!((lagrange_multiplier(&s, i) - mu).abs() <= 1e-9);
            }
        }
        let direct = ens.pair_commutator_norms();
        prop_assert!(pair_norms_closed_form(&s).max_abs_diff(&direct) <= 1e-9);
    }
}

#[test]
fn fig1_matrix_and_spectral_flows_agree() {
    let ens = Ensemble::new(fig1()).unwrap();
    let cfg = IntegratorConfig::fixed(1e-4, 0.2);
    let matrix_end = integrate(&ens, fig1(), &cfg).unwrap().last_state().unwrap().clone();
    let s0 = to_spectral(&ens).unwrap();
    let spectral_end = integrate(&SpectralFlow::unforced(), s0, &cfg).unwrap().last_state().unwrap().canonical();
    let from_matrix = to_spectral_mats(&matrix_end).unwrap();
    for i in 0..3 {
        assert!(frame_distance(from_matrix.theta[i], spectral_end.theta[i]) <= 1e-6);
        assert!((from_matrix.lam1[i] - spectral_end.lam1[i]).abs() <= 1e-6);
        assert!((from_matrix.lam2[i] - spectral_end.lam2[i]).abs() <= 1e-6);
    }
}

#[test]
fn gaps_shrink_and_traces_hold() {
    for seed in 0..8 {
        let s0 = to_spectral_mats(&random_mats(5, seed)).unwrap();
        let traj = integrate(&SpectralFlow::unforced(), s0.clone(), &IntegratorConfig::fixed(1e-3, 1.0)).unwrap();
        for w in traj.states.windows(2) {
            for i in 0..5 {
                assert!(w[1].gap(i).abs() <= w[0].gap(i).abs() + 1e-9);
                assert!((w[1].trace(i) - s0.trace(i)).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn sync_decay_rate_matches_spectral_linearization() {
    // Near an aligned state, a small frame offset decays at rate Σ_j Δλ_j².
    let gaps = [1.0, 2.0, 1.5];
    let rate: f64 = gaps.iter().map(|g| g * g).sum();
    let eps = 1e-6;
    let s = SpectralState2::new(vec![0.2, 0.2 + eps, 0.2 - eps], vec![0.0; 3], gaps.to_vec()).unwrap();
    let d = spectral_rhs(&s, None, false);
    // relative mode θ_2 - θ_3 obeys d/dt = -rate·(θ_2 - θ_3) to first order
    let rel = (d.theta[1] - d.theta[2]) / (2.0 * eps);
    assert!((rel + rate).abs() < 1e-6, "{rel} vs {}", -rate);
}
