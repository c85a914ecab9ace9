use std::fmt;

/// A finite multiset of real eigenvalues, kept sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Spectrum { values }
    }

    /// Builds `{v × m}` from (value, multiplicity) pairs.
    pub fn with_multiplicities(pairs: &[(f64, usize)]) -> Self {
        let values = pairs.iter().flat_map(|&(v, m)| std::iter::repeat_n(v, m)).collect();
        Self::from_values(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest elementwise difference after sorting; infinite when sizes differ.
    pub fn distance(&self, other: &Spectrum) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let d = (a - b).abs();
                if d.is_nan() {
                    f64::INFINITY
                } else {
                    d
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn matches(&self, other: &Spectrum, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    pub fn count_near(&self, value: f64, tol: f64) -> usize {
        self.values.iter().filter(|v| (*v - value).abs() <= tol).count()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Clusters consecutive values closer than `tol` into (mean, count) pairs.
    pub fn grouped(&self, tol: f64) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, f64, usize)> = Vec::new();
        for &v in &self.values {
            match out.last_mut() {
                Some((last, sum, count)) if (v - *last).abs() <= tol => {
                    *last = v;
                    *sum += v;
                    *count += 1;
                }
                _ => out.push((v, v, 1)),
            }
        }
        out.into_iter().map(|(_, s, c)| (s / c as f64, c)).collect()
    }
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .grouped(1e-9)
            .into_iter()
            .map(|(v, m)| if m == 1 { format!("{v:.6}") } else { format!("{v:.6}×{m}") })
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}
