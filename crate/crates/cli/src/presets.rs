//! Initial data and run settings for the figure experiments.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use commuteflow_core::spectral2::spectral_matrix;
use commuteflow_core::symmat::{random_symmetric_with, seeded_rng, SymMat};
use commuteflow_core::IntegratorConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PresetId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl PresetId {
    pub const ALL: [PresetId; 8] = [
        PresetId::Fig1,
        PresetId::Fig2,
        PresetId::Fig3,
        PresetId::Fig4,
        PresetId::Fig5,
        PresetId::Fig6,
        PresetId::Fig7,
        PresetId::Fig8,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetId::Fig1 => "fig1",
            PresetId::Fig2 => "fig2",
            PresetId::Fig3 => "fig3",
            PresetId::Fig4 => "fig4",
            PresetId::Fig5 => "fig5",
            PresetId::Fig6 => "fig6",
            PresetId::Fig7 => "fig7",
            PresetId::Fig8 => "fig8",
        }
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        PresetId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (expected fig1..fig8)"))
    }
}

/// Seed of the generated eight-frame ensemble.
pub const FIG2_SEED: u64 = 2;
/// Entry scale of the generated eight-frame ensemble.
pub const FIG2_SCALE: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub id: PresetId,
    pub title: &'static str,
    /// False when the initial data had to be generated.
    pub canonical: bool,
    pub seed: Option<u64>,
    pub matrices: Vec<SymMat>,
    pub integrator: IntegratorConfig,
    pub snapshots: Vec<f64>,
}

fn sym(rows: &[&[f64]]) -> SymMat {
    SymMat::from_rows(rows).expect("preset matrices are symmetric")
}

/// R(θ) diag(a, b) R(-θ).
fn rotated(theta: f64, a: f64, b: f64) -> SymMat {
    spectral_matrix(theta, a, b)
}

fn twist_family(middle: SymMat) -> Vec<SymMat> {
    vec![SymMat::diag(&[5.0, 3.0]), middle, rotated(PI / 3.0, 1.0, 3.0)]
}

fn run(h: f64, t_end: f64, record_every: usize) -> IntegratorConfig {
    IntegratorConfig::fixed(h, t_end).record_every(record_every)
}

impl Preset {
    pub fn get(id: PresetId) -> Preset {
        let (title, canonical, seed, matrices, integrator, snapshots) = match id {
            PresetId::Fig1 => (
                "three 2x2 matrices: commutator norms and frame angles",
                true,
                None,
                vec![sym(&[&[1.0, 2.0], &[2.0, 3.0]]), sym(&[&[2.0, 1.0], &[1.0, 5.0]]), sym(&[&[0.0, 1.0], &[1.0, 0.0]])],
                run(1e-4, 1.0, 10),
                vec![0.0, 0.1, 0.2, 0.5, 1.0],
            ),
            PresetId::Fig2 => {
                let mut rng = seeded_rng(FIG2_SEED);
                let mats = (0..8).map(|_| random_symmetric_with(2, FIG2_SCALE, &mut rng)).collect();
                (
                    "eight 2x2 eigenframes (generated initial data)",
                    false,
                    Some(FIG2_SEED),
                    mats,
                    run(1e-5, 0.005, 10),
                    vec![0.0, 0.001, 0.002, 0.003, 0.004, 0.005],
                )
            }
            PresetId::Fig3 => (
                "twist state: fixed frames, algebraic gap decay",
                true,
                None,
                twist_family(rotated(PI / 6.0, 4.0, 2.0)),
                run(1e-3, 8.0, 10),
                vec![0.0, 1.0, 8.0],
            ),
            PresetId::Fig4 => (
                "twist frames with unequal gaps (3 vs 2)",
                true,
                None,
                twist_family(rotated(PI / 6.0, 5.0, 2.0)),
                run(1e-3, 1.0, 10),
                vec![0.0, 0.4, 1.0],
            ),
            PresetId::Fig5 => (
                "twist frames with slightly unequal gaps (2.01 vs 2)",
                true,
                None,
                twist_family(rotated(PI / 6.0, 5.0, 2.99)),
                run(1e-3, 80.0, 100),
                vec![0.0, 30.0, 80.0],
            ),
            PresetId::Fig6 => (
                "twist with the middle frame rotated to 11pi/60",
                true,
                None,
                twist_family(rotated(11.0 * PI / 60.0, 4.0, 2.0)),
                run(1e-3, 8.0, 10),
                vec![0.0, 3.0, 8.0],
            ),
            PresetId::Fig7 => (
                "three 3x3 matrices: commutator norm decay",
                true,
                None,
                vec![
                    sym(&[&[1.0, 7.0, 3.0], &[7.0, 4.0, 5.0], &[3.0, 5.0, 6.0]]),
                    sym(&[&[1.0, 2.0, 4.0], &[2.0, 6.0, 5.0], &[4.0, 5.0, 3.0]]),
                    sym(&[&[1.0, 0.0, 1.0], &[0.0, 8.0, 6.0], &[1.0, 6.0, 4.0]]),
                ],
                run(1e-4, 0.5, 10),
                vec![0.0, 0.05, 0.1, 0.2, 0.5],
            ),
            PresetId::Fig8 => (
                "three 4x4 matrices: commutator norm decay",
                true,
                None,
                vec![
                    sym(&[&[4.0, 0.0, -1.0, 1.0], &[0.0, 2.0, 3.0, 7.0], &[-1.0, 3.0, 4.0, 6.0], &[1.0, 7.0, 6.0, 2.0]]),
                    sym(&[&[1.0, 2.0, 3.0, -1.0], &[2.0, 4.0, 6.0, 2.0], &[3.0, 6.0, 0.0, 8.0], &[-1.0, 2.0, 8.0, 1.0]]),
                    sym(&[&[2.0, 3.0, 1.0, -2.0], &[3.0, 6.0, 4.0, 3.0], &[1.0, 4.0, -1.0, 8.0], &[-2.0, 3.0, 8.0, 12.0]]),
                ],
                run(1e-4, 0.5, 10),
                vec![0.0, 0.05, 0.1, 0.2, 0.5],
            ),
        };
        Preset { id, title, canonical, seed, matrices, integrator, snapshots }
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].n()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use commuteflow_core::spectral2::to_spectral_mats;
    use commuteflow_core::Ensemble;

    #[test]
    fn ids_round_trip() {
        for id in PresetId::ALL {
            assert_eq!(id.as_str().parse::<PresetId>().unwrap(), id);
        }
        assert!("fig9".parse::<PresetId>().is_err());
    }

    #[test]
    fn every_preset_is_valid() {
        for id in PresetId::ALL {
            let p = Preset::get(id);
            assert!(Ensemble::new(p.matrices.clone()).is_ok());
            p.integrator.validate().unwrap();
            assert_eq!(p.snapshots.last().copied(), Some(p.integrator.t_end));
            assert_eq!(p.canonical, id != PresetId::Fig2);
        }
    }

    #[test]
    fn first_preset_pair_norm() {
        let ens = Ensemble::new(Preset::get(PresetId::Fig1).matrices).unwrap();
        assert!((ens.pair_commutator_norms().get(0, 1) - 32.0).abs() < 1e-12);
    }

    #[test]
    fn twist_presets_have_expected_frames() {
        let s = to_spectral_mats(&Preset::get(PresetId::Fig3).matrices).unwrap();
        let want = [0.0, PI / 6.0, PI / 3.0];
        for i in 0..3 {
            assert!((s.theta[i] - want[i]).abs() < 1e-12);
            assert!((s.gap(i).abs() - 2.0).abs() < 1e-12);
        }
        let s4 = to_spectral_mats(&Preset::get(PresetId::Fig4).matrices).unwrap();
        assert!((s4.gap(1).abs() - 3.0).abs() < 1e-12);
        let s6 = to_spectral_mats(&Preset::get(PresetId::Fig6).matrices).unwrap();
        assert!((s6.theta[1] - 11.0 * PI / 60.0).abs() < 1e-12);
    }
}
