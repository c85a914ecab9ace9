use std::path::{Path, PathBuf};

use commuteflow_core::commstab::{analytic_spectrum as family_spectrum, block_operators, numeric_spectrum as family_numeric, random_commuting};
use commuteflow_core::integrator::{integrate, IntegratorConfig, Trajectory};
use commuteflow_core::model::{all_to_all, Ensemble};
use commuteflow_core::spectral2::{max_frame_spread, omega_rate, to_spectral, unwrap_angles, SpectralFlow, SpectralState2};
use commuteflow_core::symmat::{eigh, SymMat};
use commuteflow_core::twist::{
    alpha_of_t, analytic_spectrum as twist_spectrum, assemble_jacobian, dft_block_eigenvalues, numeric_spectrum as twist_numeric,
    rescaled_rhs, Degeneracy, TwistState, STRUCTURE_TOL,
};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{Format, GeneratorSpec, Mode, RunConfig, TwistSpec};
use crate::error::{CliError, CliResult};
use crate::output::{
    matrix_value, report_json, spectral_states, spectrum_value, trajectory_table, write_file, Echo, LineChart, Series, Table,
};
use crate::presets::{Preset, PresetId};

/// Commutator norms below this count as commuting in reports.
pub const COMMUTING_TOL: f64 = 1e-6;
/// Eigenvalues closer than this are grouped into one multiplicity.
pub const MULTIPLICITY_TOL: f64 = 1e-9;

/// Files written and the JSON report of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub report: Value,
}

pub fn run_config(cfg: &RunConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    match cfg.mode {
        Mode::Simulate => simulate(cfg, "simulate", None),
        Mode::Spectral2 => spectral(cfg),
        Mode::TwistAnalyze => twist_analyze(cfg),
        Mode::Linearize => linearize(cfg),
        Mode::Reproduce => reproduce(cfg.preset.expect("validated"), &cfg.output_dir, &cfg.formats),
    }
}

fn echo_of(cfg: &RunConfig) -> Echo {
    Echo::new(serde_json::to_value(cfg).expect("config serializes"), cfg.seed())
}

struct Emitter<'a> {
    cfg: &'a RunConfig,
    echo: Echo,
    stem: String,
    files: Vec<PathBuf>,
}

impl<'a> Emitter<'a> {
    fn new(cfg: &'a RunConfig, stem: &str) -> Self {
        Emitter { cfg, echo: echo_of(cfg), stem: stem.to_string(), files: Vec::new() }
    }

    fn dir(&self) -> &Path {
        &self.cfg.output_dir
    }

    fn csv(&mut self, table: &Table) -> CliResult<()> {
        if self.cfg.wants(Format::Csv) {
            let p = write_file(self.dir(), &format!("{}.csv", self.stem), &table.to_csv(&self.echo))?;
            self.files.push(p);
        }
        Ok(())
    }

    fn svg(&mut self, suffix: &str, chart: &LineChart) -> CliResult<()> {
        if self.cfg.wants(Format::Svg) {
            let name = format!("{}_{suffix}.svg", self.stem);
            let p = write_file(self.dir(), &name, &chart.render(&self.echo)?)?;
            self.files.push(p);
        }
        Ok(())
    }

    fn finish(mut self, body: Value) -> CliResult<Outcome> {
        let text = report_json(&self.echo, body);
        if self.cfg.wants(Format::Json) {
            let p = write_file(self.dir(), &format!("{}.json", self.stem), &text)?;
            self.files.push(p);
        }
        let report = serde_json::from_str(&text).expect("report is valid json");
        Ok(Outcome { files: self.files, report })
    }
}

fn check_finite(energies: &[f64]) -> CliResult<()> {
    match energies.iter().position(|e| !e.is_finite()) {
        Some(k) => Err(CliError::Numeric(format!("energy became non-finite at record {k}"))),
        None => Ok(()),
    }
}

fn first_commuting_time(times: &[f64], norms: &[commuteflow_core::Mat]) -> Option<f64> {
    times.iter().zip(norms).find(|(_, m)| m.max_abs() < COMMUTING_TOL).map(|(t, _)| *t)
}

fn max_energy_increase(energies: &[f64]) -> f64 {
    energies.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn nearest_record(times: &[f64], t: f64) -> usize {
    let mut best = 0;
    for (k, tk) in times.iter().enumerate() {
        if (tk - t).abs() < (times[best] - t).abs() {
            best = k;
        }
    }
    best
}

fn spectral_value(s: &SpectralState2) -> Value {
    json!({ "theta": s.theta, "lam1": s.lam1, "lam2": s.lam2, "max_frame_spread": max_frame_spread(s) })
}

fn commutator_chart(title: &str, times: &[f64], norms: &[commuteflow_core::Mat], n_osc: usize) -> LineChart {
    let mut chart = LineChart::new(title, "t", "||[Mi, Mj]||^2");
    for i in 0..n_osc {
        for j in i + 1..n_osc {
            let ys: Vec<f64> = norms.iter().map(|m| m.get(i, j)).collect();
            chart = chart.with_series(Series::new(format!("[M{}, M{}]", i + 1, j + 1), times, &ys));
        }
    }
    chart
}

fn angle_chart(title: &str, times: &[f64], states: &[SpectralState2]) -> LineChart {
    let mut chart = LineChart::new(title, "t", "theta (unwrapped)");
    for i in 0..states[0].n_osc() {
        let raw: Vec<f64> = states.iter().map(|s| s.theta[i]).collect();
        chart = chart.with_series(Series::new(format!("theta_{}", i + 1), times, &unwrap_angles(&raw)));
    }
    chart
}

fn trajectory_summary<S>(traj: &Trajectory<S>) -> Value {
    json!({
        "records": traj.len(),
        "t_final": traj.times.last(),
        "energy_initial": traj.energies.first(),
        "energy_final": traj.energies.last(),
        "max_energy_increase": max_energy_increase(&traj.energies),
        "max_commutator_final": traj.commutator_norms.last().map(|m| m.max_abs()),
        "first_time_commuting": first_commuting_time(&traj.times, &traj.commutator_norms),
        "commuting_tol": COMMUTING_TOL,
        "stopped_early": traj.stopped_early,
    })
}

fn simulate(cfg: &RunConfig, stem: &str, preset: Option<&Preset>) -> CliResult<Outcome> {
    let ens = cfg.initial_ensemble()?;
    let traj = integrate(&ens, ens.mats().to_vec(), &cfg.integrator)?.with_seed(cfg.seed());
    check_finite(&traj.energies)?;
    let n_osc = ens.n_osc();
    let spectral = if ens.dim() == 2 { Some(spectral_states(&traj.states)?) } else { None };
    let mut em = Emitter::new(cfg, stem);
    em.csv(&trajectory_table(&traj.times, &traj.energies, &traj.commutator_norms, spectral.as_deref(), n_osc))?;
    let title = preset.map_or("commutator norms", |p| p.title);
    em.svg("commutators", &commutator_chart(title, &traj.times, &traj.commutator_norms, n_osc))?;
    if let Some(s) = &spectral {
        em.svg("angles", &angle_chart("frame angles", &traj.times, s))?;
    }
    let last = traj.last_state().expect("trajectory has the initial record");
    let mut body = json!({
        "mode": "simulate",
        "n_osc": n_osc,
        "dim": ens.dim(),
        "summary": trajectory_summary(&traj),
        "final_matrices": last.iter().map(|m| matrix_value(m)).collect::<Vec<_>>(),
    });
    if ens.is_constrained() {
        let fin = ens.with_mats(last.clone())?;
        body["lagrange_multipliers_final"] = json!(fin.lagrange_multipliers()?);
        let drift = last
            .iter()
            .zip(ens.initial_norms())
            .map(|(m, n0)| (m.frobenius_norm_sq() - n0).abs())
            .fold(0.0, f64::max);
        body["max_norm_drift"] = json!(drift);
    }
    if let Some(s) = &spectral {
        body["final_spectral"] = spectral_value(s.last().expect("non-empty"));
    }
    if let Some(p) = preset {
        body["preset"] = preset_value(p);
        body["snapshots"] = snapshots_value(p, &traj, spectral.as_deref())?;
        if p.id == PresetId::Fig3 {
            let gap0 = spectral.as_ref().expect("2x2 preset")[0].gap(0).abs();
            let s = spectral.as_ref().expect("2x2 preset");
            let worst = traj
                .times
                .iter()
                .zip(s)
                .map(|(t, st)| (st.gap(0).abs() - alpha_of_t(gap0, n_osc, *t)).abs())
                .fold(0.0, f64::max);
            body["algebraic_decay_max_error"] = json!(worst);
        }
        if matches!(p.id, PresetId::Fig7 | PresetId::Fig8) {
            let thresholds = [1e-2, 1e-4, 1e-6, 1e-8];
            let table: Vec<Value> = thresholds
                .iter()
                .map(|tol| {
                    let t = traj.times.iter().zip(&traj.commutator_norms).find(|(_, m)| m.max_abs() < *tol).map(|(t, _)| *t);
                    json!({ "threshold": tol, "first_time": t })
                })
                .collect();
            body["commutator_decay"] = json!(table);
        }
    }
    em.finish(body)
}

fn preset_value(p: &Preset) -> Value {
    let mut v = json!({ "id": p.id, "title": p.title, "canonical": p.canonical, "snapshot_times": p.snapshots });
    if !p.canonical {
        v["note"] = json!("initial data generated from the recorded seed; not the published initial conditions");
    }
    v
}

fn snapshots_value(p: &Preset, traj: &Trajectory<Vec<SymMat>>, spectral: Option<&[SpectralState2]>) -> CliResult<Value> {
    let mut out = Vec::new();
    for &t in &p.snapshots {
        let k = nearest_record(&traj.times, t);
        let mut v = json!({
            "t": traj.times[k],
            "energy": traj.energies[k],
            "commutator_norms": matrix_value(&traj.commutator_norms[k]),
            "matrices": traj.states[k].iter().map(|m| matrix_value(m)).collect::<Vec<_>>(),
        });
        if let Some(s) = spectral {
            v["spectral"] = spectral_value(&s[k]);
        } else {
            let eigs = traj.states[k].iter().map(|m| eigh(m).map(|e| e.values)).collect::<Result<Vec<_>, _>>()?;
            v["eigenvalues"] = json!(eigs);
        }
        out.push(v);
    }
    Ok(json!(out))
}

fn spectral(cfg: &RunConfig) -> CliResult<Outcome> {
    let ens = cfg.initial_ensemble()?;
    if ens.dim() != 2 {
        return Err(CliError::config("spectral2 mode needs 2x2 matrices"));
    }
    if ens.weights().max_abs_diff(&all_to_all(ens.n_osc())) > 0.0 {
        return Err(CliError::config("spectral2 mode needs unit all-to-all weights"));
    }
    let flow = SpectralFlow::for_ensemble(&ens)?;
    let s0 = to_spectral(&ens)?;
    let traj = integrate(&flow, s0, &cfg.integrator)?.with_seed(cfg.seed());
    check_finite(&traj.energies)?;
    let states: Vec<SpectralState2> = traj.states.iter().map(SpectralState2::canonical).collect();
    let n_osc = ens.n_osc();
    let mut em = Emitter::new(cfg, "spectral2");
    em.csv(&trajectory_table(&traj.times, &traj.energies, &traj.commutator_norms, Some(&states), n_osc))?;
    em.svg("commutators", &commutator_chart("commutator norms (spectral flow)", &traj.times, &traj.commutator_norms, n_osc))?;
    em.svg("angles", &angle_chart("frame angles (spectral flow)", &traj.times, &states))?;
    let omegas: Option<Vec<f64>> = match ens.omegas() {
        Some(os) => Some(os.iter().map(omega_rate).collect::<Result<_, _>>()?),
        None => None,
    };
    em.finish(json!({
        "mode": "spectral2",
        "n_osc": n_osc,
        "omegas": omegas,
        "summary": trajectory_summary(&traj),
        "final_spectral": spectral_value(states.last().expect("non-empty")),
    }))
}

fn complex_parts(zs: &[Complex64]) -> Value {
    json!({ "re": zs.iter().map(|z| z.re).collect::<Vec<_>>(), "im": zs.iter().map(|z| z.im).collect::<Vec<_>>() })
}

pub fn twist_report(spec: &TwistSpec, with_spectrum: bool) -> CliResult<(Value, Option<Table>)> {
    let traces = spec.traces.clone().unwrap_or_else(|| vec![0.0; spec.n_osc]);
    let tw = TwistState::new(spec.n_osc, spec.winding, spec.gap, traces)?;
    let state = tw.state();
    let degeneracy = tw.degeneracy();
    let mut body = json!({
        "mode": "twist-analyze",
        "n_osc": spec.n_osc,
        "winding": spec.winding,
        "gap": spec.gap,
        "angles": state.theta,
        "degeneracy": format!("{degeneracy:?}").to_lowercase(),
        "decay_rate_constant": spec.n_osc,
    });
    if !with_spectrum {
        return Ok((body, None));
    }
    let unit = TwistState::new(spec.n_osc, spec.winding, 1.0, vec![0.0; spec.n_osc])?.state();
    let d = rescaled_rhs(&unit);
    let residual = d.theta.iter().chain(&d.lam1).chain(&d.lam2).fold(0.0f64, |m, v| m.max(v.abs()));
    let jac = assemble_jacobian(&unit);
    let blocks = dft_block_eigenvalues(&jac)?;
    let numeric = twist_numeric(&jac)?;
    let mut table = Table::new(
        ["alpha", "a_re", "a_im", "b_re", "b_im", "d_re", "d_im", "c_re", "c_im", "eig1_re", "eig1_im", "eig2_re", "eig2_im"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for alpha in 0..spec.n_osc {
        let [e1, e2] = blocks.mode_eigenvalues(alpha);
        table.push(vec![
            alpha as f64,
            blocks.a[alpha].re,
            blocks.a[alpha].im,
            blocks.b[alpha].re,
            blocks.b[alpha].im,
            blocks.d[alpha].re,
            blocks.d[alpha].im,
            blocks.c[alpha].re,
            blocks.c[alpha].im,
            e1.re,
            e1.im,
            e2.re,
            e2.im,
        ]);
    }
    body["fixed_point_residual"] = json!(residual);
    body["structure_ok"] = json!(jac.check_structure(STRUCTURE_TOL).is_ok());
    body["first_rows"] = json!({
        "dg_dtheta": jac.dg_dtheta.rows()[0],
        "dg_dlam": jac.dg_dlam.rows()[0],
        "df_dtheta": jac.df_dtheta.rows()[0],
        "df_dlam": jac.df_dlam.rows()[0],
    });
    body["block_eigenvalues"] = json!({
        "a": complex_parts(&blocks.a),
        "b": complex_parts(&blocks.b),
        "d": complex_parts(&blocks.d),
        "c": complex_parts(&blocks.c),
    });
    body["spectrum"] = spectrum_value(&numeric, MULTIPLICITY_TOL);
    if spec.winding == 1 && spec.n_osc >= 3 && degeneracy == Degeneracy::Generic {
        let analytic = twist_spectrum(spec.n_osc);
        body["analytic_spectrum"] = spectrum_value(&analytic, MULTIPLICITY_TOL);
        body["spectrum_distance"] = json!(numeric.distance(&analytic));
    }
    Ok((body, Some(table)))
}

fn twist_analyze(cfg: &RunConfig) -> CliResult<Outcome> {
    let spec = cfg.twist.as_ref().expect("validated");
    let (body, table) = twist_report(spec, true)?;
    let table = table.expect("spectrum requested");
    let mut em = Emitter::new(cfg, "twist");
    em.csv(&table)?;
    let alphas = table.column("alpha").expect("column");
    let chart = LineChart::new(format!("twist N={} winding={}: mode eigenvalues", spec.n_osc, spec.winding), "Fourier mode", "eigenvalue")
        .with_series(Series::new("lower", &alphas, &table.column("eig1_re").expect("column")))
        .with_series(Series::new("upper", &alphas, &table.column("eig2_re").expect("column")));
    em.svg("modes", &chart)?;
    em.finish(body)
}

pub fn linearize_report(g: &GeneratorSpec) -> CliResult<(Value, Table)> {
    let fam = random_commuting(g.n_osc, g.dim, g.seed)?;
    let analytic = family_spectrum(&fam);
    let numeric = family_numeric(&fam)?;
    let ops = block_operators(&fam);
    let mut header = vec!["alpha".to_string(), "beta".to_string(), "mu".to_string()];
    header.extend((1..=g.n_osc).map(|k| format!("eig_{k}")));
    let mut table = Table::new(header);
    let mut blocks = Vec::new();
    for op in &ops {
        let eigs = eigh(&op.matrix())?.values;
        let mut row = vec![(op.alpha + 1) as f64, (op.beta + 1) as f64, op.mu];
        row.extend(eigs.iter().rev());
        table.push(row);
        blocks.push(json!({ "alpha": op.alpha + 1, "beta": op.beta + 1, "v": op.v, "mu": op.mu }));
    }
    let expected_kernel = g.n_osc * g.dim + g.dim * (g.dim - 1) / 2;
    let body = json!({
        "mode": "linearize",
        "n_osc": g.n_osc,
        "dim": g.dim,
        "seed": g.seed,
        "eigenbasis": matrix_value(fam.q()),
        "eigenvalues": fam.eigs(),
        "blocks": blocks,
        "analytic_spectrum": spectrum_value(&analytic, MULTIPLICITY_TOL),
        "numeric_spectrum": spectrum_value(&numeric, MULTIPLICITY_TOL),
        "spectrum_distance": numeric.distance(&analytic),
        "kernel_dimension": numeric.count_near(0.0, MULTIPLICITY_TOL),
        "expected_kernel_dimension": expected_kernel,
        "max_eigenvalue": numeric.max(),
    });
    Ok((body, table))
}

fn linearize(cfg: &RunConfig) -> CliResult<Outcome> {
    let g = cfg.generator.as_ref().expect("validated");
    let (body, table) = linearize_report(g)?;
    let mut em = Emitter::new(cfg, "linearize");
    em.csv(&table)?;
    let values: Vec<f64> = body["numeric_spectrum"]["values"]
        .as_array()
        .expect("array")
        .iter()
        .map(|v| v.as_f64().unwrap_or(f64::NAN))
        .collect();
    let idx: Vec<f64> = (0..values.len()).map(|k| k as f64).collect();
    let chart = LineChart::new(format!("commuting family N={} n={}: spectrum", g.n_osc, g.dim), "index", "eigenvalue")
        .with_series(Series::new("numeric", &idx, &values));
    em.svg("spectrum", &chart)?;
    em.finish(body)
}

/// Runs a figure preset with its own integrator settings.
pub fn reproduce(id: PresetId, out: &Path, formats: &[Format]) -> CliResult<Outcome> {
    let p = Preset::get(id);
    let mut cfg = RunConfig::new(Mode::Reproduce);
    cfg.preset = Some(id);
    cfg.integrator = p.integrator.clone();
    cfg.output_dir = out.to_path_buf();
    cfg.formats = formats.to_vec();
    cfg.validate()?;
    simulate(&cfg, id.as_str(), Some(&p))
}

/// Integrator settings of a preset, for callers that run it themselves.
pub fn preset_integrator(id: PresetId) -> IntegratorConfig {
    Preset::get(id).integrator
}

pub fn preset_ensemble(id: PresetId) -> CliResult<Ensemble> {
    Ok(Ensemble::new(Preset::get(id).matrices)?)
}
