//! Linearization of the flow around commuting families.
//!
//! A commuting family shares one orthonormal eigenbasis `v_α` (the columns of
//! Q): `M_i = Σ_α λ_i^α v_α v_αᵀ`. Perturbations split into commuting
//! directions `C_α = v_α v_αᵀ`, which are neutral, and non-commuting
//! directions `N_αβ = (v_α v_βᵀ + v_β v_αᵀ)/√2`. The coefficients `b_αβ` of the
//! N oscillators on `N_αβ` evolve by
//!
//! ```text
//! db/dt = (v vᵀ - μ I) b,   v_i = λ_i^α - λ_i^β,   μ = Σ_i v_i²
//! ```
//!
//! so every family is neutrally stable along its own manifold and
//! exponentially attracting across it.

use std::f64::consts::FRAC_1_SQRT_2;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::model::Ensemble;
use crate::spectrum::Spectrum;
use crate::symmat::{
    commutator, eigh, hs_inner, nested_commutator, random_orthogonal_with, seeded_rng,
    sym_skew_commutator, Mat, SymMat, ORTHOGONALITY_TOL,
};

/// Smallest eigenvalue gap accepted by [`random_commuting`].
pub const GENERIC_GAP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct CommutingFamily {
    q: Mat,
    eigs: Vec<Vec<f64>>,
}

impl CommutingFamily {
    pub fn new(q: Mat, eigs: Vec<Vec<f64>>) -> Result<Self> {
        q.check_orthogonal(ORTHOGONALITY_TOL)?;
        if eigs.is_empty() {
            return Err(Error::InvalidEnsemble("no oscillators".into()));
        }
        for row in &eigs {
            check_dim(q.n(), row.len())?;
        }
        Ok(CommutingFamily { q, eigs })
    }

    pub fn n_osc(&self) -> usize {
        self.eigs.len()
    }

    pub fn dim(&self) -> usize {
        self.q.n()
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    /// λ_i^α, indexed `[i][α]`.
    pub fn eigs(&self) -> &[Vec<f64>] {
        &self.eigs
    }

    pub fn vector(&self, alpha: usize) -> Vec<f64> {
        self.q.column(alpha)
    }

    /// M_i = Q diag(λ_i) Qᵀ.
    pub fn matrix(&self, i: usize) -> SymMat {
        let n = self.dim();
        let q = &self.q;
        let l = &self.eigs[i];
        SymMat::symmetrize(&Mat::from_fn(n, |r, c| (0..n).map(|a| q.get(r, a) * l[a] * q.get(c, a)).sum()))
    }

    pub fn matrices(&self) -> Vec<SymMat> {
        (0..self.n_osc()).map(|i| self.matrix(i)).collect()
    }

    pub fn ensemble(&self) -> Result<Ensemble> {
        Ensemble::new(self.matrices())
    }

    /// Smallest |λ_i^α - λ_i^β| over all oscillators and α ≠ β.
    pub fn min_gap(&self) -> f64 {
        let mut m = f64::INFINITY;
        for row in &self.eigs {
            for a in 0..row.len() {
                for b in 0..a {
                    m = m.min((row[a] - row[b]).abs());
                }
            }
        }
        m
    }

    /// Pairs (α, β) with α > β, in the order used for b-coordinates.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        pairs(self.dim())
    }
}

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (1..n).flat_map(|a| (0..a).map(move |b| (a, b))).collect()
}

pub fn make_commuting(q: Mat, eigs: Vec<Vec<f64>>) -> Result<Ensemble> {
    CommutingFamily::new(q, eigs)?.ensemble()
}

/// Random orthogonal eigenbasis with standard-normal eigenvalues, redrawn
/// until every matrix has simple spectrum (gaps at least [`GENERIC_GAP`]).
pub fn random_commuting(n_osc: usize, dim: usize, seed: u64) -> Result<CommutingFamily> {
    if n_osc == 0 || dim == 0 {
        return Err(Error::InvalidArgument("family needs N >= 1 and n >= 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let q = random_orthogonal_with(dim, &mut rng);
    loop {
        let eigs: Vec<Vec<f64>> = (0..n_osc)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let fam = CommutingFamily::new(q.clone(), eigs)?;
        if fam.min_gap() >= GENERIC_GAP {
            return Ok(fam);
        }
    }
}

/// Orthonormal basis of symmetric matrices adapted to an eigenbasis Q.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedBasis {
    /// C_α = v_α v_αᵀ.
    pub commuting: Vec<SymMat>,
    /// N_αβ for the pairs of [`pairs`], in the same order.
    pub noncommuting: Vec<SymMat>,
}

impl AdaptedBasis {
    pub fn len(&self) -> usize {
        self.commuting.len() + self.noncommuting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &SymMat> {
        self.commuting.iter().chain(&self.noncommuting)
    }
}

pub fn basis(q: &Mat) -> Result<AdaptedBasis> {
    q.check_orthogonal(ORTHOGONALITY_TOL)?;
    let n = q.n();
    let outer = |a: usize, b: usize| Mat::from_fn(n, |r, c| q.get(r, a) * q.get(c, b));
    let commuting = (0..n).map(|a| SymMat::symmetrize(&outer(a, a))).collect();
    let noncommuting = pairs(n)
        .into_iter()
        .map(|(a, b)| SymMat::symmetrize(&outer(a, b).add(&outer(b, a)).scale(FRAC_1_SQRT_2)))
        .collect();
    Ok(AdaptedBasis { commuting, noncommuting })
}

/// Coefficients of N perturbations on an [`AdaptedBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationCoords {
    /// `a[i][α]`, on C_α.
    pub a: Vec<Vec<f64>>,
    /// `b[i][p]`, on the p-th N_αβ.
    pub b: Vec<Vec<f64>>,
}

impl PerturbationCoords {
    pub fn from_mats(mats: &[SymMat], basis: &AdaptedBasis) -> Result<Self> {
        let project = |m: &SymMat, set: &[SymMat]| -> Result<Vec<f64>> {
            set.iter().map(|e| hs_inner(m, e)).collect()
        };
        let a = mats.iter().map(|m| project(m, &basis.commuting)).collect::<Result<_>>()?;
        let b = mats.iter().map(|m| project(m, &basis.noncommuting)).collect::<Result<_>>()?;
        Ok(PerturbationCoords { a, b })
    }

    pub fn to_mats(&self, basis: &AdaptedBasis) -> Vec<SymMat> {
        let n = basis.commuting.first().map_or(0, |c| c.n());
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| {
                let mut m = SymMat::zeros(n);
                for (k, e) in a.iter().zip(&basis.commuting) {
                    m = m.add_scaled(*k, e);
                }
                for (k, e) in b.iter().zip(&basis.noncommuting) {
                    m = m.add_scaled(*k, e);
                }
                m
            })
            .collect()
    }

    /// The N-vector of coefficients on the p-th non-commuting direction.
    pub fn b_column(&self, p: usize) -> Vec<f64> {
        self.b.iter().map(|row| row[p]).collect()
    }
}

/// dM̃_i/dt = Σ_j [M_j, [M̃_i, M_j]] + [M_j, [M_i, M̃_j]] at a commuting family.
pub fn linearized_rhs(perturbation: &[SymMat], family: &CommutingFamily) -> Result<Vec<SymMat>> {
    check_dim(family.n_osc(), perturbation.len())?;
    let mats = family.matrices();
    let dim = family.dim();
    let mut out = Vec::with_capacity(mats.len());
    for (i, pi) in perturbation.iter().enumerate() {
        check_dim(dim, pi.n())?;
        let mut acc = SymMat::zeros(dim);
        for (mj, pj) in mats.iter().zip(perturbation) {
            acc = acc.add(&nested_commutator(pi, mj)?);
            acc = acc.add(&sym_skew_commutator(mj, &commutator(&mats[i], pj)?)?);
        }
        out.push(acc);
    }
    Ok(out)
}

/// The operator v vᵀ - μ I acting on one pair's b-coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockOperator {
    pub alpha: usize,
    pub beta: usize,
    pub v: Vec<f64>,
    pub mu: f64,
}

impl BlockOperator {
    pub fn matrix(&self) -> SymMat {
        let n = self.v.len();
        let v = &self.v;
        let mu = self.mu;
        SymMat::symmetrize(&Mat::from_fn(n, |r, c| v[r] * v[c] - if r == c { mu } else { 0.0 }))
    }

    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        let vb: f64 = self.v.iter().zip(b).map(|(x, y)| x * y).sum();
        self.v.iter().zip(b).map(|(v, b)| v * vb - self.mu * b).collect()
    }
}

pub fn block_operator(family: &CommutingFamily, alpha: usize, beta: usize) -> BlockOperator {
    let v: Vec<f64> = family.eigs.iter().map(|row| row[alpha] - row[beta]).collect();
    let mu = v.iter().map(|x| x * x).sum();
    BlockOperator { alpha, beta, v, mu }
}

pub fn block_operators(family: &CommutingFamily) -> Vec<BlockOperator> {
    family.pairs().into_iter().map(|(a, b)| block_operator(family, a, b)).collect()
}

/// 0 with multiplicity nN + n(n-1)/2 and -μ_αβ with multiplicity N-1 per pair.
pub fn analytic_spectrum(family: &CommutingFamily) -> Spectrum {
    let (big_n, n) = (family.n_osc(), family.dim());
    let ops = block_operators(family);
    let mut pairs = vec![(0.0, n * big_n + ops.len())];
    pairs.extend(ops.iter().map(|op| (-op.mu, big_n - 1)));
    Spectrum::with_multiplicities(&pairs)
}

/// Eigenvalues of every dense block plus nN zeros for the commuting directions.
pub fn numeric_spectrum(family: &CommutingFamily) -> Result<Spectrum> {
    let mut values = vec![0.0; family.n_osc() * family.dim()];
    for op in block_operators(family) {
        values.extend(eigh(&op.matrix())?.values);
    }
    Ok(Spectrum::from_values(values))
}
