//! Dense complex matrices and the handful of spectral routines the rest of
//! the crate is built on.
//!
//! Matrices are small (a few dozen rows at most), so everything is stored
//! densely in a [`nalgebra::DMatrix`] and every operation returns a fresh
//! value. The Hermitian eigensolver is nalgebra's symmetric QR iteration.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::quantum::DensityMatrix;

/// Tolerance for structural predicates (hermiticity, unitarity, projectors).
pub const STRUCTURE_TOL: f64 = 1e-9;

/// Target residual of the Hermitian eigensolver.
pub const EIGEN_TOL: f64 = 1e-11;

const EIGEN_MAX_ITER: usize = 100_000;

pub type C64 = Complex64;

/// A square complex matrix.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(into = "crate::io::MatrixRepr", try_from = "crate::io::MatrixRepr")]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds a matrix from row-major rows; fails unless the rows form a
    /// nonempty square array.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Format("matrix has no rows".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(n, bad.len()));
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// The rank-one operator |v⟩⟨v|.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Result<Self> {
        let n = cols.len();
        if let Some(bad) = cols.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch(n, bad.len()));
        }
        Ok(Self::from_fn(n, |i, j| cols[j][i]))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.0.diagonal().iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.0[(i, j)] * other.0[(j, i)];
            }
        }
        acc
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.0.adjoint() * &self.0;
        (gram - DMatrix::<C64>::identity(self.dim(), self.dim()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Largest of the hermiticity and idempotency defects.
    pub fn projector_defect(&self) -> f64 {
        let square = &self.0 * &self.0;
        let idem = (square - &self.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        idem.max(self.hermiticity_defect())
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.projector_defect() <= tol
    }

    /// `u · self · u†`
    pub fn conjugate_by(&self, u: &Self) -> Self {
        Self(&u.0 * &self.0 * u.0.adjoint())
    }

    /// Hermitian part `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector
/// columns.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigensystem {
    /// `V · diag(λ) · V†`
    pub fn reassemble(&self) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors.0;
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * self.values[k] * v[(j, k)].conj())
                .sum()
        })
    }
}

pub fn hermitian_eigensystem(m: &ComplexMatrix) -> Result<Eigensystem> {
    let defect = m.hermiticity_defect();
    if defect > STRUCTURE_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let sym = m.hermitian_part().0;
    let eig = SymmetricEigen::try_new(sym.clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?;

    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| eig.eigenvectors[(i, order[j])]);

    let scale = sym.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mv = &sym * &vectors.0;
    let residual = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| (mv[(i, j)] - vectors.0[(i, j)] * values[j]).norm())
        .fold(0.0, f64::max);
    if residual > EIGEN_TOL * scale {
        return Err(Error::ConvergenceFailure);
    }
    Ok(Eigensystem { values, vectors })
}

/// `exp(i·theta·A)` for Hermitian `A`.
pub fn unitary_exp(a: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eigensystem(a)?;
    let n = a.dim();
    let phases: Vec<C64> = eig
        .values
        .iter()
        .map(|&l| C64::from_polar(1.0, theta * l))
        .collect();
    let v = &eig.vectors;
    Ok(ComplexMatrix::from_fn(n, |i, j| {
        (0..n)
            .map(|k| v.get(i, k) * phases[k] * v.get(j, k).conj())
            .sum()
    }))
}

/// Seeded unitary from the QR factorization of a complex Gaussian matrix.
///
/// The phases of `R`'s diagonal are folded back into `Q`, which makes the
/// output independent of the sign conventions of the QR routine and
/// distributed according to the Haar measure.
pub fn haar_like_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut entries = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        entries.push(C64::new(re * scale, im * scale));
    }
    let g = DMatrix::from_row_slice(dim, dim, &entries);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix(q)
}

/// Half the trace norm of `a − b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    a.matrix().check_same_dim(b.matrix())?;
    let diff = a.matrix() - b.matrix();
    let eig = hermitian_eigensystem(&diff)?;
    let d = 0.5 * eig.values.iter().map(|x| x.abs()).sum::<f64>();
    Ok(d.clamp(0.0, 1.0))
}
