//! JSON run configuration.
//!
//! ```json
//! {
//!   "mode": "simulate",
//!   "matrices": [[[1, 2], [2, 3]], [[2, 1], [1, 5]]],
//!   "integrator": { "h": 0.001, "t_end": 1.0 },
//!   "output_dir": "out",
//!   "formats": ["csv", "json", "svg"]
//! }
//! ```
//!
//! Exactly one of `matrices`, `generator` or `preset` supplies the initial
//! ensemble for `simulate`, `spectral2` and `reproduce` (which only accepts
//! `preset`). `twist-analyze` reads `twist`, `linearize` reads `generator`.

use std::path::PathBuf;

use commuteflow_core::model::{all_to_all, Ensemble};
use commuteflow_core::symmat::{random_symmetric_with, seeded_rng, Mat, SkewMat, SymMat};
use commuteflow_core::IntegratorConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::presets::{Preset, PresetId};

/// Inputs this far from symmetric are rejected.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Inputs this far from symmetric are symmetrized with a warning.
pub const SYMMETRY_WARN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Spectral2,
    TwistAnalyze,
    Linearize,
    Reproduce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub seed: u64,
    #[serde(alias = "N")]
    pub n_osc: usize,
    #[serde(alias = "n")]
    pub dim: usize,
    #[serde(default = "one")]
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistSpec {
    #[serde(alias = "N")]
    pub n_osc: usize,
    #[serde(default = "one_usize")]
    pub winding: usize,
    #[serde(default = "one")]
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traces: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json, Format::Svg]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetId>,
    /// Coupling a_ij; all-to-all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
    /// Skew-symmetric forcing Ω_i, one per oscillator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omegas: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub constrained: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<TwistSpec>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        RunConfig {
            mode,
            matrices: None,
            generator: None,
            preset: None,
            weights: None,
            omegas: None,
            constrained: false,
            twist: None,
            integrator: IntegratorConfig::default(),
            output_dir: default_output_dir(),
            formats: all_formats(),
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Seed of the random inputs, if any.
    pub fn seed(&self) -> Option<u64> {
        match (&self.generator, self.preset) {
            (Some(g), _) => Some(g.seed),
            (None, Some(p)) => Preset::get(p).seed,
            _ => None,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.formats.is_empty() {
            return Err(CliError::config("formats must not be empty"));
        }
        self.integrator.validate().map_err(|e| CliError::config(e.to_string()))?;
        let sources = [self.matrices.is_some(), self.generator.is_some(), self.preset.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        match self.mode {
            Mode::Simulate | Mode::Spectral2 => {
                if sources != 1 {
                    return Err(CliError::config(
                        "exactly one of `matrices`, `generator`, `preset` is required",
                    ));
                }
            }
            Mode::Reproduce => {
                if self.preset.is_none() || sources != 1 {
                    return Err(CliError::config("reproduce needs `preset` and no other source"));
                }
            }
            Mode::TwistAnalyze => {
                if self.twist.is_none() {
                    return Err(CliError::config("twist-analyze needs `twist`"));
                }
            }
            Mode::Linearize => {
                if self.generator.is_none() {
                    return Err(CliError::config("linearize needs `generator`"));
                }
            }
        }
        if let Some(g) = &self.generator {
            if g.n_osc == 0 || g.dim == 0 || !(g.scale > 0.0) {
                return Err(CliError::config("generator needs N >= 1, n >= 1, scale > 0"));
            }
        }
        if let Some(m) = &self.matrices {
            if m.is_empty() {
                return Err(CliError::config("`matrices` is empty"));
            }
            let n = m[0].len();
            for (k, rows) in m.iter().enumerate() {
                check_square(rows, n, &format!("matrices[{k}]"))?;
            }
        }
        Ok(())
    }

    /// Builds the initial ensemble with weights, forcing and constraint applied.
    pub fn initial_ensemble(&self) -> CliResult<Ensemble> {
        let mats = self.initial_matrices()?;
        let n_osc = mats.len();
        let dim = mats[0].n();
        let weights = match &self.weights {
            Some(w) => {
                check_square(w, n_osc, "weights")?;
                Mat::from_rows(w)?
            }
            None => all_to_all(n_osc),
        };
        let mut ens = Ensemble::with_weights(mats, weights)?;
        if let Some(os) = &self.omegas {
            if os.len() != n_osc {
                return Err(CliError::config(format!("expected {n_osc} omegas, found {}", os.len())));
            }
            let mut skews = Vec::with_capacity(n_osc);
            for (k, rows) in os.iter().enumerate() {
                check_square(rows, dim, &format!("omegas[{k}]"))?;
                skews.push(SkewMat::from_rows_checked(rows, SYMMETRY_TOL)?);
            }
            ens = ens.with_omegas(skews)?;
        }
        if self.constrained {
            ens = ens.constrained()?;
        }
        Ok(ens)
    }

    pub fn initial_matrices(&self) -> CliResult<Vec<SymMat>> {
        if let Some(m) = &self.matrices {
            return m.iter().enumerate().map(|(k, rows)| load_symmetric(rows, k)).collect();
        }
        if let Some(g) = &self.generator {
            let mut rng = seeded_rng(g.seed);
            return Ok((0..g.n_osc).map(|_| random_symmetric_with(g.dim, g.scale, &mut rng)).collect());
        }
        if let Some(p) = self.preset {
            return Ok(Preset::get(p).matrices);
        }
        Err(CliError::config("no initial matrices"))
    }
}

fn check_square(rows: &[Vec<f64>], n: usize, what: &str) -> CliResult<()> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::config(format!("{what} must be {n}x{n}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::config(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn load_symmetric(rows: &[Vec<f64>], k: usize) -> CliResult<SymMat> {
    let m = Mat::from_rows(rows)?;
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(CliError::config(format!("matrices[{k}] is not symmetric (asymmetry {asym:e})")));
    }
    if asym > SYMMETRY_WARN {
        eprintln!("warning: matrices[{k}] symmetrized (asymmetry {asym:e})");
    }
    Ok(SymMat::symmetrize(&m))
}
