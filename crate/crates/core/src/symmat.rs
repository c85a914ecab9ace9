//! Dense real matrices for the small dimensions this toolkit works in.
//!
//! [`Mat`] is a general square matrix stored row-major. [`SymMat`] and
//! [`SkewMat`] wrap it and guarantee exact (anti)symmetry: every constructor
//! and every arithmetic operation re-imposes the structure, so round-off can
//! never leave a "symmetric" matrix slightly asymmetric.

use std::fmt;
use std::ops::{Deref, Index};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};

/// Orthogonality tolerance accepted by [`conjugate`] and friends.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Relative off-diagonal threshold at which the Jacobi sweep stops.
pub const JACOBI_TOL: f64 = 1e-13;

/// Maximum number of Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Square real matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Mat { n, data }
    }

    /// Builds a matrix from rows; every row must have the same length as the
    /// number of rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_ref();
            check_dim(n, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Mat { n, data })
    }

    /// Builds a matrix from its columns.
    pub fn from_columns<C: AsRef<[f64]>>(cols: &[C]) -> Result<Self> {
        Ok(Self::from_rows(cols)?.transpose())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Mat { n, data: out }
    }

    pub fn try_matmul(&self, other: &Mat) -> Result<Mat> {
        check_dim(self.n, other.n)?;
        Ok(self.matmul(other))
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data.chunks(self.n).map(|row| dot(row, v)).collect()
    }

    fn zip_with(&self, other: &Mat, f: impl Fn(f64, f64) -> f64) -> Mat {
        debug_assert_eq!(self.n, other.n);
        Mat {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, k: f64) -> Mat {
        Mat { n: self.n, data: self.data.iter().map(|a| a * k).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| crate::integrator::nan_as_inf(m, (a - b).abs()))
    }

    /// Largest |A_ij - A_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    /// max |QᵀQ - I|.
    pub fn orthogonality_defect(&self) -> f64 {
        self.transpose().matmul(self).max_abs_diff(&Mat::identity(self.n))
    }

    pub fn check_orthogonal(&self, tol: f64) -> Result<()> {
        let d = self.orthogonality_defect();
        if d <= tol {
            Ok(())
        } else {
            Err(Error::NotOrthogonal(d))
        }
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.n)).finish()
    }
}

/// Real symmetric matrix.
#[derive(Clone, PartialEq)]
pub struct SymMat(Mat);

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        SymMat(Mat::zeros(n))
    }

    pub fn identity(n: usize) -> Self {
        SymMat(Mat::identity(n))
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        SymMat(Mat::identity(n).scale(c))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        SymMat(Mat::from_fn(n, |i, j| if i == j { values[i] } else { 0.0 }))
    }

    /// Takes the upper triangle as authoritative and mirrors it.
    pub fn from_upper(m: &Mat) -> Self {
        SymMat(Mat::from_fn(m.n, |i, j| if i <= j { m.get(i, j) } else { m.get(j, i) }))
    }

    /// (M + Mᵀ)/2.
    pub fn symmetrize(m: &Mat) -> Self {
        let mut out = m.clone();
        for i in 0..m.n {
            for j in i + 1..m.n {
                let v = 0.5 * (m.get(i, j) + m.get(j, i));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        SymMat(out)
    }

    /// Accepts rows only if they are symmetric within `tol`, then symmetrizes.
    pub fn from_rows_checked<R: AsRef<[f64]>>(rows: &[R], tol: f64) -> Result<Self> {
        let m = Mat::from_rows(rows)?;
        let a = m.asymmetry();
        if a > tol {
            return Err(Error::NotSymmetric(a));
        }
        Ok(Self::symmetrize(&m))
    }

    /// Exact symmetric construction from rows (asymmetry up to 1e-12 is averaged away).
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::from_rows_checked(rows, 1e-12)
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        SymMat(self.0.add(&other.0))
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        SymMat(self.0.sub(&other.0))
    }

    pub fn scale(&self, k: f64) -> SymMat {
        SymMat(self.0.scale(k))
    }

    /// self + k·other
    pub fn add_scaled(&self, k: f64, other: &SymMat) -> SymMat {
        SymMat(self.0.zip_with(&other.0, |a, b| a + k * b))
    }

    pub fn shift(&self, c: f64) -> SymMat {
        let mut m = self.0.clone();
        for i in 0..m.n {
            m.set(i, i, m.get(i, i) + c);
        }
        SymMat(m)
    }
}

impl Deref for SymMat {
    type Target = Mat;
    fn deref(&self) -> &Mat {
        &self.0
    }
}

impl fmt::Debug for SymMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Real skew-symmetric matrix (zero diagonal).
#[derive(Clone, PartialEq)]
pub struct SkewMat(Mat);

impl SkewMat {
    pub fn zeros(n: usize) -> Self {
        SkewMat(Mat::zeros(n))
    }

    /// (M - Mᵀ)/2.
    pub fn antisymmetrize(m: &Mat) -> Self {
        let mut out = Mat::zeros(m.n);
        for i in 0..m.n {
            for j in i + 1..m.n {
                let v = 0.5 * (m.get(i, j) - m.get(j, i));
                out.set(i, j, v);
                out.set(j, i, -v);
            }
        }
        SkewMat(out)
    }

    /// Accepts rows only if antisymmetric within `tol`.
    pub fn from_rows_checked<R: AsRef<[f64]>>(rows: &[R], tol: f64) -> Result<Self> {
        let m = Mat::from_rows(rows)?;
        let s = SkewMat::antisymmetrize(&m);
        let defect = m.max_abs_diff(&s.0);
        if defect > tol {
            return Err(Error::InvalidArgument(format!(
                "matrix is not skew-symmetric (defect {defect:e})"
            )));
        }
        Ok(s)
    }

    /// The 2×2 generator [[0, ω], [-ω, 0]].
    pub fn rotation2(omega: f64) -> Self {
        SkewMat(Mat { n: 2, data: vec![0.0, omega, -omega, 0.0] })
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn sub(&self, other: &SkewMat) -> SkewMat {
        SkewMat(self.0.sub(&other.0))
    }

    pub fn scale(&self, k: f64) -> SkewMat {
        SkewMat(self.0.scale(k))
    }
}

impl Deref for SkewMat {
    type Target = Mat;
    fn deref(&self) -> &Mat {
        &self.0
    }
}

impl fmt::Debug for SkewMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// [A, B] = AB - BA.
pub fn commutator(a: &SymMat, b: &SymMat) -> Result<SkewMat> {
    let ab = a.try_matmul(b)?;
    let ba = b.matmul(a);
    Ok(SkewMat::antisymmetrize(&ab.sub(&ba)))
}

/// [B, C] for symmetric B and skew C; the result is symmetric.
pub fn sym_skew_commutator(b: &SymMat, c: &SkewMat) -> Result<SymMat> {
    let bc = b.try_matmul(c)?;
    let cb = c.matmul(b);
    Ok(SymMat::symmetrize(&bc.sub(&cb)))
}

/// [Ω, M] for skew Ω and symmetric M; the result is symmetric.
pub fn skew_sym_commutator(omega: &SkewMat, m: &SymMat) -> Result<SymMat> {
    let om = omega.try_matmul(m)?;
    let mo = m.matmul(omega);
    Ok(SymMat::symmetrize(&om.sub(&mo)))
}

/// [B, [A, B]], the coupling kernel of the flow.
pub fn nested_commutator(a: &SymMat, b: &SymMat) -> Result<SymMat> {
    let c = commutator(a, b)?;
    sym_skew_commutator(b, &c)
}

/// Hilbert-Schmidt inner product tr(AᵀB).
pub fn hs_inner(a: &Mat, b: &Mat) -> Result<f64> {
    check_dim(a.n(), b.n())?;
    Ok(dot(a.as_slice(), b.as_slice()))
}

/// Symmetric eigendecomposition A = Q·diag(values)·Qᵀ, values descending.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomp {
    pub values: Vec<f64>,
    /// Column k is the eigenvector for `values[k]`.
    pub vectors: Mat,
}

impl EigenDecomp {
    pub fn reconstruct(&self) -> SymMat {
        let q = &self.vectors;
        let n = q.n();
        let scaled = Mat::from_fn(n, |i, j| q.get(i, j) * self.values[j]);
        SymMat::symmetrize(&scaled.matmul(&q.transpose()))
    }
}

fn off_diagonal_max(a: &Mat) -> f64 {
    let mut m = 0.0f64;
    for i in 0..a.n() {
        for j in i + 1..a.n() {
            m = m.max(a.get(i, j).abs());
        }
    }
    m
}

/// Cyclic Jacobi eigensolver.
pub fn eigh(a: &SymMat) -> Result<EigenDecomp> {
    let n = a.n();
    let mut m = a.as_mat().clone();
    let mut q = Mat::identity(n);
    let threshold = JACOBI_TOL * a.frobenius_norm();

    let mut converged = false;
    for _ in 0..=JACOBI_MAX_SWEEPS {
        if off_diagonal_max(&m) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = m.get(p, r);
                if apr == 0.0 {
                    continue;
                }
                let theta = (m.get(r, r) - m.get(p, p)) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- JᵀAJ with J the (p, r) plane rotation.
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akr = m.get(k, r);
                    m.set(k, p, c * akp - s * akr);
                    m.set(k, r, s * akp + c * akr);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let ark = m.get(r, k);
                    m.set(p, k, c * apk - s * ark);
                    m.set(r, k, s * apk + c * ark);
                }
                m.set(p, r, 0.0);
                m.set(r, p, 0.0);
                for k in 0..n {
                    let qkp = q.get(k, p);
                    let qkr = q.get(k, r);
                    q.set(k, p, c * qkp - s * qkr);
                    q.set(k, r, s * qkp + c * qkr);
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let values = order.iter().map(|&k| m.get(k, k)).collect();
    let vectors = Mat::from_fn(n, |i, j| q.get(i, order[j]));
    Ok(EigenDecomp { values, vectors })
}

/// Q·A·Qᵀ for orthogonal Q.
pub fn conjugate(a: &SymMat, q: &Mat) -> Result<SymMat> {
    check_dim(a.n(), q.n())?;
    q.check_orthogonal(ORTHOGONALITY_TOL)?;
    Ok(SymMat::symmetrize(&q.matmul(a).matmul(&q.transpose())))
}

/// Q·Ω·Qᵀ for orthogonal Q.
pub fn conjugate_skew(omega: &SkewMat, q: &Mat) -> Result<SkewMat> {
    check_dim(omega.n(), q.n())?;
    q.check_orthogonal(ORTHOGONALITY_TOL)?;
    Ok(SkewMat::antisymmetrize(&q.matmul(omega).matmul(&q.transpose())))
}

/// The deterministic generator used for every seeded construction (ChaCha8).
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric matrix with independent N(0, scale²) entries on and above the diagonal.
pub fn random_symmetric(n: usize, seed: u64, scale: f64) -> SymMat {
    random_symmetric_with(n, scale, &mut seeded_rng(seed))
}

pub fn random_symmetric_with(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> SymMat {
    let mut m = Mat::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = StandardNormal.sample(rng);
            m.set(i, j, scale * v);
            m.set(j, i, scale * v);
        }
    }
    SymMat(m)
}

/// Orthogonal matrix from Gram-Schmidt on seeded standard-normal columns,
/// applied twice.
pub fn random_orthogonal(n: usize, seed: u64) -> Mat {
    random_orthogonal_with(n, &mut seeded_rng(seed))
}

pub fn random_orthogonal_with(n: usize, rng: &mut ChaCha8Rng) -> Mat {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        if gram_schmidt(&mut cols) && gram_schmidt(&mut cols) {
            return Mat::from_columns(&cols).expect("square by construction");
        }
    }
}

// false if a column collapses (probability zero, but retried anyway)
fn gram_schmidt(cols: &mut [Vec<f64>]) -> bool {
    for k in 0..cols.len() {
        for j in 0..k {
            let proj = dot(&cols[k], &cols[j]);
            let (done, rest) = cols.split_at_mut(k);
            for (x, y) in rest[0].iter_mut().zip(&done[j]) {
                *x -= proj * y;
            }
        }
        let norm = dot(&cols[k], &cols[k]).sqrt();
        if norm < 1e-8 {
            return false;
        }
        cols[k].iter_mut().for_each(|x| *x /= norm);
    }
    true
}
