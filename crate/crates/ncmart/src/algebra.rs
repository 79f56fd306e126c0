//! Finite tracial algebras: direct sums of matrix blocks with weighted traces,
//! filtrations (pinching and tensor kinds) with exact trace-preserving
//! conditional expectations, and Hermitian spectral calculus.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const HERMITIAN_RTOL: f64 = 1e-10;

/// A finite direct sum of full matrix blocks with positive trace weights.
/// The trace is `tau(x) = sum_b w_b Tr(x_b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracialAlgebra {
    /// `(block_dim, weight)` pairs.
    pub blocks: Vec<(usize, f64)>,
}

impl TracialAlgebra {
    pub fn new(blocks: Vec<(usize, f64)>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInstance("algebra has no blocks".into()));
        }
        for &(d, w) in &blocks {
            if d == 0 {
                return Err(Error::InvalidInstance("zero-dimensional block".into()));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidInstance(format!("non-positive weight {w}")));
            }
        }
        Ok(Self { blocks })
    }

    /// Full matrix algebra of dimension `d` with unnormalized trace.
    pub fn full(d: usize) -> Self {
        Self::new(vec![(d, 1.0)]).unwrap()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|&(d, _)| d).sum()
    }

    /// `tau(1)`.
    pub fn trace_of_identity(&self) -> f64 {
        self.blocks.iter().map(|&(d, w)| w * d as f64).sum()
    }

    pub fn zero(&self) -> Operator {
        Operator {
            blocks: self
                .blocks
                .iter()
                .map(|&(d, _)| DMatrix::zeros(d, d))
                .collect(),
        }
    }

    pub fn identity(&self) -> Operator {
        Operator {
            blocks: self
                .blocks
                .iter()
                .map(|&(d, _)| DMatrix::identity(d, d))
                .collect(),
        }
    }

    pub fn conforms(&self, x: &Operator) -> bool {
        x.blocks.len() == self.blocks.len()
            && x.blocks
                .iter()
                .zip(&self.blocks)
                .all(|(m, &(d, _))| m.nrows() == d && m.ncols() == d)
    }

    pub fn check_conforms(&self, x: &Operator) -> Result<()> {
        if self.conforms(x) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "operator blocks {:?} vs algebra blocks {:?}",
                x.blocks.iter().map(|m| m.nrows()).collect::<Vec<_>>(),
                self.blocks.iter().map(|b| b.0).collect::<Vec<_>>()
            )))
        }
    }

    /// Weighted trace `tau(x)`.
    pub fn trace(&self, x: &Operator) -> Complex64 {
        x.blocks
            .iter()
            .zip(&self.blocks)
            .map(|(m, &(_, w))| m.trace() * Complex64::new(w, 0.0))
            .sum()
    }

    pub fn trace_re(&self, x: &Operator) -> f64 {
        self.trace(x).re
    }

    /// `||x||_p^p = tau(|x|^p)` for finite p; see `rearrangement` for the
    /// step-function route.
    pub fn norm_p(&self, x: &Operator, p: f64) -> f64 {
        if p.is_infinite() {
            return x.op_norm();
        }
        let sv = crate::rearrangement::singular_values(self, x);
        sv.iter().map(|&(s, w)| w * s.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// An element of a `TracialAlgebra`: one complex matrix per block.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub blocks: Vec<DMatrix<Complex64>>,
}

impl Operator {
    pub fn adjoint(&self) -> Operator {
        Operator {
            blocks: self.blocks.iter().map(|m| m.adjoint()).collect(),
        }
    }

    /// Operator norm: max over blocks of the largest singular value.
    pub fn op_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|m| {
                if m.nrows() == 0 {
                    return 0.0;
                }
                let gram = m.adjoint() * m;
                let herm = hermitian_part(&gram);
                herm.symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .fold(0.0f64, |a, &e| a.max(e.max(0.0)))
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> Operator {
        self.scale_complex(Complex64::new(c, 0.0))
    }

    pub fn scale_complex(&self, c: Complex64) -> Operator {
        Operator {
            blocks: self.blocks.iter().map(|m| m.map(|v| v * c)).collect(),
        }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        Operator {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        Operator {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Operator) -> Operator {
        Operator {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// `x* x`.
    pub fn gram(&self) -> Operator {
        Operator {
            blocks: self.blocks.iter().map(|m| m.adjoint() * m).collect(),
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.blocks
            .iter()
            .all(|m| m.iter().all(|v| v.norm() <= tol))
    }

    /// Relative deviation from self-adjointness.
    pub fn hermitian_defect(&self) -> f64 {
        let diff = self.sub(&self.adjoint());
        let scale = self.op_norm();
        if scale == 0.0 {
            0.0
        } else {
            diff.op_norm() / scale
        }
    }

    pub fn symmetrize(&self) -> Operator {
        self.add(&self.adjoint()).scale(0.5)
    }

    /// Max absolute entry difference, a cheap metric for exactness tests.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).map(|v| v * Complex64::new(0.5, 0.0))
}

/// Per-block eigendecomposition of a Hermitian operator.
pub struct HermitianEigen {
    /// `(eigenvalues, eigenvectors)` per block; eigenvalues are real.
    pub blocks: Vec<(Vec<f64>, DMatrix<Complex64>)>,
}

impl HermitianEigen {
    pub fn new(x: &Operator) -> Result<Self> {
        let defect = x.hermitian_defect();
        if defect > HERMITIAN_RTOL {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self::new_unchecked(x))
    }

    /// Symmetrizes and decomposes without the Hermiticity guard.
    pub fn new_unchecked(x: &Operator) -> Self {
        let blocks = x
            .blocks
            .iter()
            .map(|m| {
                let h = hermitian_part(m);
                let se = h.symmetric_eigen();
                (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
            })
            .collect();
        Self { blocks }
    }

    /// Applies a scalar function on the spectrum.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> Operator {
        let blocks = self
            .blocks
            .iter()
            .map(|(vals, vecs)| {
                let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    vals.len(),
                    vals.iter().map(|&v| Complex64::new(f(v), 0.0)),
                ));
                vecs * d * vecs.adjoint()
            })
            .collect();
        Operator { blocks }
    }

    /// Eigenvalues flattened with their block weights.
    pub fn weighted_eigenvalues(&self, algebra: &TracialAlgebra) -> Vec<(f64, f64)> {
        self.blocks
            .iter()
            .zip(&algebra.blocks)
            .flat_map(|((vals, _), &(_, w))| vals.iter().map(move |&v| (v, w)))
            .collect()
    }
}

/// Functional calculus `f(x)` for Hermitian `x`.
pub fn calculus<F: Fn(f64) -> f64>(x: &Operator, f: F) -> Result<Operator> {
    let eig = HermitianEigen::new(x)?;
    for (vals, _) in &eig.blocks {
        for &v in vals {
            if !f(v).is_finite() {
                return Err(Error::FunctionUndefined(v));
            }
        }
    }
    Ok(eig.apply(f))
}

/// Spectral projection `chi_{[a,b]}(x)` of a Hermitian operator, with the
/// closed-interval convention (eigenvalues within `1e-9 * scale` of an
/// endpoint are included).
pub fn spectral_projection(x: &Operator, a: f64, b: f64) -> Result<Operator> {
    let eig = HermitianEigen::new(x)?;
    let scale = eig
        .blocks
        .iter()
        .flat_map(|(v, _)| v.iter())
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let tol = 1e-9 * (1.0 + scale);
    Ok(eig.apply(|v| {
        if v >= a - tol && v <= b + tol {
            1.0
        } else {
            0.0
        }
    }))
}

/// `|x| = (x* x)^{1/2}`.
pub fn abs(x: &Operator) -> Operator {
    HermitianEigen::new_unchecked(&x.gram()).apply(|v| v.max(0.0).sqrt())
}

/// Square root of a positive Hermitian operator; small negative eigenvalues
/// from roundoff are clamped to zero.
pub fn sqrt_positive(x: &Operator) -> Result<Operator> {
    let eig = HermitianEigen::new(x)?;
    Ok(eig.apply(|v| v.max(0.0).sqrt()))
}

/// Snaps a near-projection to the closest true projection by rounding the
/// spectrum to {0,1}. Returns the rounded projection and the size of the
/// perturbation.
pub fn round_to_projection(x: &Operator) -> Result<(Operator, f64)> {
    let eig = HermitianEigen::new(x)?;
    let rounded = eig.apply(|v| if v >= 0.5 { 1.0 } else { 0.0 });
    let perturbation = rounded.sub(x).op_norm();
    Ok((rounded, perturbation))
}

/// Filtration kinds admitting exact trace-preserving conditional expectations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Filtration {
    /// `partitions[n-1]` partitions the global coordinate set at level `n`;
    /// atoms may not cross block boundaries, each partition refines the next,
    /// and the last is the per-block trivial partition.
    Pinching { partitions: Vec<Vec<Vec<usize>>> },
    /// Single full block of dimension `prod(dims)`; level `n` consists of the
    /// operators `A (x) 1` with `A` of size `dims[0] * ... * dims[n-1]`.
    Tensor { dims: Vec<usize> },
}

impl Filtration {
    pub fn levels(&self) -> usize {
        match self {
            Filtration::Pinching { partitions } => partitions.len(),
            Filtration::Tensor { dims } => dims.len(),
        }
    }

    pub fn validate(&self, algebra: &TracialAlgebra) -> Result<()> {
        match self {
            Filtration::Pinching { partitions } => {
                if partitions.is_empty() {
                    return Err(Error::InvalidInstance("empty filtration".into()));
                }
                let total = algebra.total_dim();
                // block id per global coordinate
                let mut block_of = vec![0usize; total];
                let mut start = 0;
                for (b, &(d, _)) in algebra.blocks.iter().enumerate() {
                    for i in start..start + d {
                        block_of[i] = b;
                    }
                    start += d;
                }
                let mut prev_atom: Option<Vec<usize>> = None;
                for (lvl, part) in partitions.iter().enumerate() {
                    let mut seen = vec![false; total];
                    let mut atom_of = vec![usize::MAX; total];
                    for (a, atom) in part.iter().enumerate() {
                        if atom.is_empty() {
                            return Err(Error::InvalidInstance("empty atom".into()));
                        }
                        let blk = block_of
                            .get(atom[0])
                            .copied()
                            .ok_or_else(|| Error::InvalidInstance("atom index out of range".into()))?;
                        for &i in atom {
                            if i >= total || seen[i] {
                                return Err(Error::InvalidInstance(
                                    "partition is not a partition of the coordinate set".into(),
                                ));
                            }
                            if block_of[i] != blk {
                                return Err(Error::InvalidInstance(
                                    "atom crosses block boundary".into(),
                                ));
                            }
                            seen[i] = true;
                            atom_of[i] = a;
                        }
                    }
                    if seen.iter().any(|&s| !s) {
                        return Err(Error::InvalidInstance(
                            "partition does not cover the coordinate set".into(),
                        ));
                    }
                    // refinement: every atom of the previous (finer) level must
                    // sit inside a single atom of this level
                    if let Some(prev) = &prev_atom {
                        for atom in part.iter() {
                            let _ = atom;
                        }
                        let target = vec![usize::MAX; part.len().max(1)];
                        let fine_count = prev.iter().copied().max().map_or(0, |m| m + 1);
                        let mut fine_target = vec![usize::MAX; fine_count];
                        for i in 0..total {
                            let f = prev[i];
                            let c = atom_of[i];
                            if fine_target[f] == usize::MAX {
                                fine_target[f] = c;
                            } else if fine_target[f] != c {
                                return Err(Error::InvalidInstance(format!(
                                    "level {} does not coarsen level {}",
                                    lvl + 1,
                                    lvl
                                )));
                            }
                        }
                        let _ = target;
                    }
                    prev_atom = Some(atom_of);
                }
                // final level must be the per-block trivial partition
                let last = partitions.last().unwrap();
                if last.len() != algebra.blocks.len() {
                    return Err(Error::InvalidInstance(
                        "final partition is not the per-block trivial partition".into(),
                    ));
                }
                for atom in last {
                    let blk = block_of[atom[0]];
                    if atom.len() != algebra.blocks[blk].0 {
                        return Err(Error::InvalidInstance(
                            "final partition is not the per-block trivial partition".into(),
                        ));
                    }
                }
                Ok(())
            }
            Filtration::Tensor { dims } => {
                if algebra.blocks.len() != 1 {
                    return Err(Error::InvalidInstance(
                        "tensor filtration requires a single block".into(),
                    ));
                }
                if dims.is_empty() || dims.iter().any(|&d| d == 0) {
                    return Err(Error::InvalidInstance("invalid tensor dims".into()));
                }
                let prod: usize = dims.iter().product();
                if prod != algebra.total_dim() {
                    return Err(Error::InvalidInstance(format!(
                        "tensor dims multiply to {prod}, algebra dim is {}",
                        algebra.total_dim()
                    )));
                }
                Ok(())
            }
        }
    }

    fn atom_ids(&self, algebra: &TracialAlgebra, level: usize) -> Vec<usize> {
        match self {
            Filtration::Pinching { partitions } => {
                let total = algebra.total_dim();
                let mut atom_of = vec![0usize; total];
                for (a, atom) in partitions[level - 1].iter().enumerate() {
                    for &i in atom {
                        atom_of[i] = a;
                    }
                }
                atom_of
            }
            Filtration::Tensor { .. } => unreachable!(),
        }
    }
}

/// Trace-preserving conditional expectation `E_n` onto the level-`n`
/// subalgebra, with the convention `E_0 := E_1`.
pub fn conditional_expectation(
    algebra: &TracialAlgebra,
    filtration: &Filtration,
    x: &Operator,
    n: usize,
) -> Result<Operator> {
    algebra.check_conforms(x)?;
    let max = filtration.levels();
    let n = if n == 0 { 1 } else { n };
    if n > max {
        return Err(Error::LevelOutOfRange { level: n, max });
    }
    match filtration {
        Filtration::Pinching { .. } => {
            let atom_of = filtration.atom_ids(algebra, n);
            let mut out = x.clone();
            let mut start = 0;
            for (bi, m) in out.blocks.iter_mut().enumerate() {
                let d = algebra.blocks[bi].0;
                for i in 0..d {
                    for j in 0..d {
                        if atom_of[start + i] != atom_of[start + j] {
                            m[(i, j)] = Complex64::new(0.0, 0.0);
                        }
                    }
                }
                start += d;
            }
            Ok(out)
        }
        Filtration::Tensor { dims } => {
            let head: usize = dims[..n].iter().product();
            let tail: usize = dims[n..].iter().product();
            let m = &x.blocks[0];
            // partial trace over the trailing factors, normalized, then
            // tensored back with the identity
            let mut reduced = DMatrix::<Complex64>::zeros(head, head);
            for a in 0..head {
                for ap in 0..head {
                    let mut s = Complex64::new(0.0, 0.0);
                    for c in 0..tail {
                        s += m[(a * tail + c, ap * tail + c)];
                    }
                    reduced[(a, ap)] = s / tail as f64;
                }
            }
            let d = m.nrows();
            let mut out = DMatrix::<Complex64>::zeros(d, d);
            for a in 0..head {
                for ap in 0..head {
                    for c in 0..tail {
                        out[(a * tail + c, ap * tail + c)] = reduced[(a, ap)];
                    }
                }
            }
            Ok(Operator { blocks: vec![out] })
        }
    }
}
