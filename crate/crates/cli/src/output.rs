//! CSV, JSON and SVG writers. Every file carries an echo of the run
//! configuration so it can be traced back to its inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use commuteflow_core::spectral2::{to_spectral_mats, SpectralState2};
use commuteflow_core::symmat::{Mat, SymMat};
use commuteflow_core::Spectrum;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "commuteflow";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance attached to every output file.
#[derive(Clone, Debug, PartialEq)]
pub struct Echo {
    pub config: Value,
    pub seed: Option<u64>,
}

impl Echo {
    pub fn new(config: Value, seed: Option<u64>) -> Self {
        Echo { config, seed }
    }

    pub fn to_value(&self) -> Value {
        json!({ "tool": TOOL, "version": VERSION, "seed": self.seed, "config": self.config })
    }

    fn compact(&self) -> String {
        serde_json::to_string(&self.to_value()).expect("echo serializes")
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// A rectangular numeric table with named columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self, echo: &Echo) -> String {
        let mut out = String::new();
        writeln!(out, "# {TOOL} {VERSION}").unwrap();
        writeln!(out, "# config: {}", echo.compact()).unwrap();
        match echo.seed {
            Some(s) => writeln!(out, "# seed: {s}").unwrap(),
            None => writeln!(out, "# seed: none").unwrap(),
        }
        writeln!(out, "{}", self.header.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }
}

/// Column names `comm_i_j` for i < j, 1-based, in lexicographic order.
pub fn pair_columns(n_osc: usize) -> Vec<String> {
    let mut out = Vec::new();
    for i in 1..=n_osc {
        for j in i + 1..=n_osc {
            out.push(format!("comm_{i}_{j}"));
        }
    }
    out
}

fn upper_pairs(m: &Mat) -> impl Iterator<Item = f64> + '_ {
    let n = m.n();
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| m.get(i, j)))
}

/// `t, energy, comm_i_j...` followed by `theta_i, lam1_i, lam2_i` when
/// spectral coordinates are supplied.
pub fn trajectory_table(
    times: &[f64],
    energies: &[f64],
    norms: &[Mat],
    spectral: Option<&[SpectralState2]>,
    n_osc: usize,
) -> Table {
    let mut header = vec!["t".to_string(), "energy".to_string()];
    header.extend(pair_columns(n_osc));
    if spectral.is_some() {
        for i in 1..=n_osc {
            header.extend([format!("theta_{i}"), format!("lam1_{i}"), format!("lam2_{i}")]);
        }
    }
    let mut table = Table::new(header);
    for k in 0..times.len() {
        let mut row = vec![times[k], energies[k]];
        row.extend(upper_pairs(&norms[k]));
        if let Some(s) = spectral {
            let s = &s[k];
            for i in 0..n_osc {
                row.extend([s.theta[i], s.lam1[i], s.lam2[i]]);
            }
        }
        table.push(row);
    }
    table
}

/// Canonical spectral coordinates of every recorded 2×2 state.
pub fn spectral_states(states: &[Vec<SymMat>]) -> CliResult<Vec<SpectralState2>> {
    states.iter().map(|s| to_spectral_mats(s).map_err(CliError::from)).collect()
}

pub fn spectrum_value(s: &Spectrum, tol: f64) -> Value {
    let groups: Vec<Value> = s.grouped(tol).into_iter().map(|(v, m)| json!([v, m])).collect();
    json!({ "values": s.values(), "multiplicities": groups })
}

pub fn matrix_value(m: &Mat) -> Value {
    json!(m.rows())
}

pub fn report_json(echo: &Echo, body: Value) -> String {
    let mut doc = echo.to_value();
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, xs: &[f64], ys: &[f64]) -> Self {
        Series { label: label.into(), points: xs.iter().copied().zip(ys.iter().copied()).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-3 && v.abs() < 1e4 {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

impl LineChart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        LineChart { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: Vec::new() }
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    /// Standalone SVG with linear axes. Non-finite points are dropped.
    pub fn render(&self, echo: &Echo) -> CliResult<String> {
        let finite: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect())
            .collect();
        let all: Vec<(f64, f64)> = finite.iter().flatten().copied().collect();
        if all.is_empty() {
            return Err(CliError::config("cannot plot an empty series"));
        }
        let (x0, x1) = padded_range(
            all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
            all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        );
        let (y0, y1) = padded_range(
            all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
            all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
        );
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(out, "<desc>{}</desc>", escape(&echo.compact())).unwrap();
        writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
        writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(&self.title)).unwrap();
        writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        )
        .unwrap();
        for k in 0..=5 {
            let f = k as f64 / 5.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let (px, py) = (sx(xv), sy(yv));
            writeln!(
                out,
                r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#ccc"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP,
                TOP + ph,
                TOP + ph + 18.0,
                tick_label(xv)
            )
            .unwrap();
            writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ccc"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                py + 4.0,
                tick_label(yv)
            )
            .unwrap();
        }
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        )
        .unwrap();
        for (k, (s, pts)) in self.series.iter().zip(&finite).enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
            writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            )
            .unwrap();
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = LEFT + pw + 12.0;
            writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&s.label)
            )
            .unwrap();
        }
        out.push_str("</svg>\n");
        Ok(out)
    }
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo() -> Echo {
        Echo::new(json!({"mode": "simulate"}), Some(7))
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        for v in [0.1, 1.0 / 3.0, -7.25e-300, 1e300] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn pair_column_order() {
        assert_eq!(pair_columns(3), vec!["comm_1_2", "comm_1_3", "comm_2_3"]);
        assert!(pair_columns(1).is_empty());
    }

    #[test]
    fn csv_has_echo_and_header() {
        let mut t = Table::new(vec!["t".into(), "energy".into()]);
        t.push(vec![0.0, 1.5]);
        let csv = t.to_csv(&echo());
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[1].starts_with("# config: ") && lines[1].contains("\"seed\":7"));
        assert_eq!(lines[2], "# seed: 7");
        assert_eq!(lines[3], "t,energy");
        assert_eq!(lines[4], "0.0000000000000000e0,1.5000000000000000e0");
    }

    #[test]
    fn empty_chart_is_an_error() {
        assert!(LineChart::new("x", "t", "y").render(&echo()).is_err());
        let c = LineChart::new("x", "t", "y").with_series(Series::new("s", &[], &[]));
        assert!(c.render(&echo()).is_err());
    }

    #[test]
    fn chart_is_deterministic_and_escaped() {
        let c = LineChart::new("a < b", "t", "y")
            .with_series(Series::new("one", &[0.0, 1.0, 2.0], &[3.0, 1.0, 0.5]))
            .with_series(Series::new("flat", &[0.0, 2.0], &[1.0, 1.0]));
        let a = c.render(&echo()).unwrap();
        assert_eq!(a, c.render(&echo()).unwrap());
        assert!(a.contains("a &lt; b"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.contains("<desc>"));
    }

    #[test]
    fn report_merges_echo() {
        let r: Value = serde_json::from_str(&report_json(&echo(), json!({"x": 1}))).unwrap();
        assert_eq!(r["seed"], 7);
        assert_eq!(r["x"], 1);
        assert_eq!(r["config"]["mode"], "simulate");
    }
}
