use commuteflow_core::commstab::{
    analytic_spectrum, basis, block_operator, block_operators, linearized_rhs, numeric_spectrum,
    random_commuting, PerturbationCoords,
};
use commuteflow_core::integrator::{integrate, IntegratorConfig};
use commuteflow_core::symmat::{random_symmetric, SymMat};
use proptest::prelude::*;

fn random_perturbation(n_osc: usize, dim: usize, seed: u64, scale: f64) -> Vec<SymMat> {
    (0..n_osc).map(|k| random_symmetric(dim, seed.wrapping_add(k as u64), scale)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectra_agree(seed in any::<u64>(), n_osc in 2usize..6, dim in 2usize..5) {
        let fam = random_commuting(n_osc, dim, seed).unwrap();
        let analytic = analytic_spectrum(&fam);
        let numeric = numeric_spectrum(&fam).unwrap();
        prop_assert_eq!(analytic.len(), n_osc * dim * (dim + 1) / 2);
        prop_assert!(numeric.matches(&analytic, 1e-9));
        prop_assert!(numeric.max().unwrap() <= 1e-9);
        prop_assert_eq!(numeric.count_near(0.0, 1e-9), n_osc * dim + dim * (dim - 1) / 2);
        let trace: f64 = -((n_osc - 1) as f64) * block_operators(&fam).iter().map(|op| op.mu).sum::<f64>();
        let sum: f64 = numeric.values().iter().sum();
        prop_assert!((sum - trace).abs() <= 1e-9 * trace.abs().max(1.0));
    }

    #[test]
    fn linearization_is_block_diagonal(seed in any::<u64>(), n_osc in 2usize..5, dim in 2usize..5) {
        let fam = random_commuting(n_osc, dim, seed).unwrap();
        let b = basis(fam.q()).unwrap();
        let pert = random_perturbation(n_osc, dim, seed ^ 1, 1.0);
        let coords = PerturbationCoords::from_mats(&pert, &b).unwrap();
        let out = PerturbationCoords::from_mats(&linearized_rhs(&pert, &fam).unwrap(), &b).unwrap();
        for row in &out.a {
            prop_assert!(row.iter().all(|x| x.abs() <= 1e-10));
        }
        for (p, op) in block_operators(&fam).iter().enumerate() {
            let want = op.apply(&coords.b_column(p));
            for (x, y) in out.b_column(p).iter().zip(&want) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn linearization_is_the_derivative_of_the_flow(seed in any::<u64>(), n_osc in 2usize..5, dim in 2usize..5) {
        let fam = random_commuting(n_osc, dim, seed).unwrap();
        let ens = fam.ensemble().unwrap();
        let pert = random_perturbation(n_osc, dim, seed ^ 2, 1.0);
        let h = 1e-5;
        let shifted = |k: f64| {
            let mats = ens.mats().iter().zip(&pert).map(|(m, p)| m.add_scaled(k, p)).collect();
            ens.with_mats(mats).unwrap().flow_rhs()
        };
        let (up, dn) = (shifted(h), shifted(-h));
        let lin = linearized_rhs(&pert, &fam).unwrap();
        for i in 0..n_osc {
            let fd = up[i].sub(&dn[i]).scale(0.5 / h);
            prop_assert!(fd.max_abs_diff(&lin[i]) <= 1e-6);
        }
    }
}

#[test]
fn perturbation_decays_at_predicted_rate() {
    let fam = random_commuting(3, 3, 17).unwrap();
    let b = basis(fam.q()).unwrap();
    let ops = block_operators(&fam);
    // Excite the most slowly decaying non-commuting mode in oscillator 0's slot,
    // projected onto the stable eigenvector of its block.
    let (p, op) = ops.iter().enumerate().min_by(|x, y| x.1.mu.total_cmp(&y.1.mu)).unwrap();
    let mut dir = vec![0.0; 3];
    let vn: f64 = op.v.iter().map(|x| x * x).sum();
    for (k, d) in dir.iter_mut().enumerate() {
        *d = if k == 0 { 1.0 } else { 0.0 } - op.v[0] * op.v[k] / vn;
    }
    let scale = 1e-3 / dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mats: Vec<SymMat> = fam
        .matrices()
        .iter()
        .zip(&dir)
        .map(|(m, d)| m.add_scaled(scale * d, &b.noncommuting[p]))
        .collect();
    let ens = fam.ensemble().unwrap();
    let t_end = 1.0 / op.mu;
    let traj = integrate(&ens, mats, &IntegratorConfig::fixed(t_end / 2000.0, t_end)).unwrap();
    let before = PerturbationCoords::from_mats(&traj.states[0], &b).unwrap().b_column(p);
    let after = PerturbationCoords::from_mats(traj.last_state().unwrap(), &b).unwrap().b_column(p);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rate = -(norm(&after) / norm(&before)).ln() / t_end;
    assert!((rate / op.mu - 1.0).abs() <= 0.05, "rate {rate} vs μ {}", op.mu);
}

#[test]
fn two_by_two_block_matches_synchronization_rate() {
    use commuteflow_core::commstab::CommutingFamily;
    use commuteflow_core::symmat::Mat;
    let gaps = [1.0, 2.0, 1.5];
    let fam = CommutingFamily::new(Mat::identity(2), gaps.iter().map(|g| vec![0.0, *g]).collect()).unwrap();
    let mu: f64 = gaps.iter().map(|g| g * g).sum();
    assert_eq!(block_operator(&fam, 1, 0).mu, mu);
    let spec = analytic_spectrum(&fam);
    assert_eq!(spec.count_near(-mu, 1e-12), 2);
}
