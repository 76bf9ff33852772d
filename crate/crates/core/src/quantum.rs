//! States, projectors, measurement contexts and Born-rule probabilities.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::linalg::{haar_like_unitary, hermitian_eigensystem, ComplexMatrix, C64, STRUCTURE_TOL};

/// Frobenius tolerance used when matching a projector against a block sum.
pub const MATCH_TOL: f64 = 1e-8;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let herm = matrix.hermiticity_defect();
        if herm > STRUCTURE_TOL {
            return Err(Error::NotADensityMatrix(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STRUCTURE_TOL || tr.im.abs() > STRUCTURE_TOL {
            return Err(Error::NotADensityMatrix(format!("trace is {tr}")));
        }
        let matrix = matrix.hermitian_part();
        let eig = hermitian_eigensystem(&matrix)?;
        if eig.values[0] < -STRUCTURE_TOL {
            return Err(Error::NotADensityMatrix(format!(
                "negative eigenvalue {}",
                eig.values[0]
            )));
        }
        Ok(Self { matrix })
    }

    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(weights))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// `|ψ⟩⟨ψ|` for the normalized input vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if psi.is_empty() || norm == 0.0 {
            return Err(Error::NotADensityMatrix("zero state vector".into()));
        }
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self {
            matrix: ComplexMatrix::outer(&unit),
        })
    }

    /// `U · diag(spectrum) · U†`
    pub fn from_spectrum(spectrum: &[f64], basis: &ComplexMatrix) -> Result<Self> {
        if spectrum.len() != basis.dim() {
            return Err(Error::DimensionMismatch(basis.dim(), spectrum.len()));
        }
        let defect = basis.unitarity_defect();
        if defect > STRUCTURE_TOL {
            return Err(Error::NotUnitary(defect));
        }
        Self::new(ComplexMatrix::from_real_diagonal(spectrum).conjugate_by(basis))
    }

    /// Seeded state of the given rank: flat-Dirichlet eigenvalues in a
    /// Haar-random eigenbasis.
    pub fn random(dim: usize, rank: usize, seed: u64) -> Result<Self> {
        if dim == 0 || rank == 0 || rank > dim {
            return Err(Error::InvalidConfig(format!(
                "rank {rank} is not in 1..={dim}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
        let mut spectrum: Vec<f64> = (0..rank).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = spectrum.iter().sum();
        spectrum.iter_mut().for_each(|x| *x /= total);
        spectrum.resize(dim, 0.0);
        Self::from_spectrum(&spectrum, &haar_like_unitary(dim, derive_seed(seed, 1)))
    }

    /// Seeded Haar-random pure state.
    pub fn random_pure(dim: usize, seed: u64) -> Self {
        let u = haar_like_unitary(dim, seed);
        Self {
            matrix: ComplexMatrix::outer(&u.column(0)),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigensystem(&self.matrix)?.values)
    }
}

/// Orthogonal projector with a cached rank.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    matrix: ComplexMatrix,
    rank: usize,
}

impl Projector {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.projector_defect();
        if defect > STRUCTURE_TOL {
            return Err(Error::NotProjector(defect));
        }
        let rank = matrix.trace().re.round();
        if rank < 1.0 {
            return Err(Error::NotProjector(matrix.max_abs()));
        }
        Ok(Self {
            matrix,
            rank: rank as usize,
        })
    }

    pub(crate) fn new_unchecked(matrix: ComplexMatrix, rank: usize) -> Self {
        Self { matrix, rank }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new_unchecked(ComplexMatrix::identity(dim), dim)
    }

    /// Projector onto the span of a unit vector.
    pub fn rank_one(v: &[C64]) -> Self {
        Self::new_unchecked(ComplexMatrix::outer(v), 1)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `1 − P`; `None` for the identity.
    pub fn complement(&self) -> Option<Self> {
        let n = self.dim();
        if self.rank >= n {
            return None;
        }
        Some(Self::new_unchecked(
            &ComplexMatrix::identity(n) - &self.matrix,
            n - self.rank,
        ))
    }

    /// Sum of mutually orthogonal projectors.
    pub(crate) fn sum_of<'a>(dim: usize, parts: impl IntoIterator<Item = &'a Projector>) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        let mut rank = 0;
        for p in parts {
            m = &m + &p.matrix;
            rank += p.rank;
        }
        Self::new_unchecked(m, rank)
    }

    /// A unit vector spanning the range of a rank-one projector.
    pub(crate) fn spanning_vector(&self) -> Vec<C64> {
        let n = self.dim();
        let best = (0..n)
            .max_by(|&a, &b| {
                self.matrix
                    .get(a, a)
                    .re
                    .total_cmp(&self.matrix.get(b, b).re)
            })
            .unwrap_or(0);
        let col = self.matrix.column(best);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        col.into_iter().map(|z| z / norm).collect()
    }
}

/// Ordered resolution of the identity into mutually orthogonal projectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Context {
    dim: usize,
    projectors: Vec<Projector>,
}

impl Context {
    /// Validates and builds a context from raw matrices.
    pub fn new(matrices: Vec<ComplexMatrix>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::Format("context has no projectors".into()))?;
        let dim = first.dim();
        for m in &matrices {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch(dim, m.dim()));
            }
        }
        let projectors = matrices
            .into_iter()
            .map(Projector::new)
            .collect::<Result<Vec<_>>>()?;
        Self::from_projectors(projectors)
    }

    pub fn from_projectors(projectors: Vec<Projector>) -> Result<Self> {
        let dim = projectors
            .first()
            .ok_or_else(|| Error::Format("context has no projectors".into()))?
            .dim();
        if let Some(p) = projectors.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch(dim, p.dim()));
        }
        let sum = Projector::sum_of(dim, &projectors);
        let defect = (&sum.matrix - &ComplexMatrix::identity(dim)).max_abs();
        if defect > STRUCTURE_TOL {
            return Err(Error::IncompleteSum(defect));
        }
        for i in 0..projectors.len() {
            for j in i + 1..projectors.len() {
                if (&projectors[i].matrix * &projectors[j].matrix).max_abs() > STRUCTURE_TOL {
                    return Err(Error::NotOrthogonal(i, j));
                }
            }
        }
        Ok(Self { dim, projectors })
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn from_basis(basis: &ComplexMatrix) -> Result<Self> {
        let defect = basis.unitarity_defect();
        if defect > STRUCTURE_TOL {
            return Err(Error::NotUnitary(defect));
        }
        let projectors = (0..basis.dim())
            .map(|j| Projector::rank_one(&basis.column(j)))
            .collect();
        Ok(Self {
            dim: basis.dim(),
            projectors,
        })
    }

    /// The computational-basis context.
    pub fn standard(dim: usize) -> Self {
        Self::from_basis(&ComplexMatrix::identity(dim)).expect("identity is unitary")
    }

    /// The one-outcome context `{1}`.
    pub fn trivial(dim: usize) -> Self {
        Self {
            dim,
            projectors: vec![Projector::identity(dim)],
        }
    }

    /// `(P, 1 − P)`; fails for `P = 1`.
    pub fn two_outcome(p: &Projector) -> Result<Self> {
        let comp = p
            .complement()
            .ok_or_else(|| Error::InvalidPartition("complement of the identity is zero".into()))?;
        Ok(Self {
            dim: p.dim(),
            projectors: vec![p.clone(), comp],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn is_maximal(&self) -> bool {
        self.projectors.len() == self.dim
    }

    /// Orthonormal basis (up to phases) associated with a maximal context,
    /// as the columns of a unitary.
    pub fn basis(&self) -> Option<ComplexMatrix> {
        if !self.is_maximal() {
            return None;
        }
        let cols: Vec<Vec<C64>> = self
            .projectors
            .iter()
            .map(|p| p.spanning_vector())
            .collect();
        ComplexMatrix::from_columns(&cols).ok()
    }

    /// Equality up to reordering of outcomes.
    pub fn equivalent(&self, other: &Context) -> bool {
        if self.dim != other.dim || self.len() != other.len() {
            return false;
        }
        let mut used = vec![false; other.len()];
        self.projectors.iter().all(|p| {
            let hit =
                other.projectors.iter().enumerate().find(|(j, q)| {
                    !used[*j] && (&p.matrix - &q.matrix).frobenius_norm() <= MATCH_TOL
                });
            match hit {
                Some((j, _)) => {
                    used[j] = true;
                    true
                }
                None => false,
            }
        })
    }
}

/// Finite probability vector; tiny negative round-off is clamped to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityDistribution {
    weights: Vec<f64>,
}

impl ProbabilityDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, STRUCTURE_TOL)
    }

    pub fn with_tolerance(weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < -tol) {
            return Err(Error::InvalidDistribution(format!("weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution(format!("weights sum to {sum}")));
        }
        let weights = weights.into_iter().map(|w| w.clamp(0.0, 1.0)).collect();
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `tr(ρ Pᵢ)` for each projector, before clamping.
pub fn born_weights(rho: &DensityMatrix, c: &Context) -> Result<Vec<f64>> {
    if rho.dim() != c.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), c.dim()));
    }
    Ok(c.projectors
        .iter()
        .map(|p| rho.matrix().trace_product(p.matrix()).re)
        .collect())
}

pub fn born(rho: &DensityMatrix, c: &Context) -> Result<ProbabilityDistribution> {
    ProbabilityDistribution::new(born_weights(rho, c)?)
}

/// Eigenvalues (ascending) paired with the maximal context of eigenprojectors.
pub fn spectral_decomposition(rho: &DensityMatrix) -> Result<(Vec<f64>, Context)> {
    let eig = hermitian_eigensystem(rho.matrix())?;
    let ctx = Context::from_basis(&eig.vectors)?;
    Ok((eig.values, ctx))
}

/// A maximal context in which `rho` is diagonal.
pub fn eigencontext(rho: &DensityMatrix) -> Result<Context> {
    Ok(spectral_decomposition(rho)?.1)
}

/// Merges outcomes of `c` according to a set partition of its (zero-based)
/// outcome indices.
pub fn coarsen(c: &Context, partition: &[Vec<usize>]) -> Result<Context> {
    let k = c.len();
    let mut seen = vec![false; k];
    for block in partition {
        if block.is_empty() {
            return Err(Error::InvalidPartition("empty block".into()));
        }
        for &i in block {
            if i >= k {
                return Err(Error::InvalidPartition(format!("index {i} out of range")));
            }
            if seen[i] {
                return Err(Error::InvalidPartition(format!("index {i} repeated")));
            }
            seen[i] = true;
        }
    }
    if let Some(gap) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidPartition(format!("index {gap} missing")));
    }
    let projectors = partition
        .iter()
        .map(|block| Projector::sum_of(c.dim, block.iter().map(|&i| &c.projectors[i])))
        .collect();
    Ok(Context {
        dim: c.dim,
        projectors,
    })
}

/// Whether `coarse` is obtained from `fine` by summing blocks of its
/// projectors.
///
/// Each fine projector `Q` can lie under at most one coarse projector `P`
/// (the coarse ones are mutually orthogonal), and it does exactly when
/// `tr(PQ) = rank Q`. That fixes the only candidate partition, which is then
/// checked by comparing block sums.
pub fn is_coarsening(coarse: &Context, fine: &Context) -> bool {
    if coarse.dim != fine.dim || coarse.len() > fine.len() {
        return false;
    }
    let mut blocks: Vec<Vec<&Projector>> = vec![Vec::new(); coarse.len()];
    for q in &fine.projectors {
        let home = coarse.projectors.iter().position(|p| {
            (p.matrix.trace_product(&q.matrix).re - q.rank as f64).abs() <= MATCH_TOL
        });
        match home {
            Some(i) => blocks[i].push(q),
            None => return false,
        }
    }
    coarse.projectors.iter().zip(&blocks).all(|(p, block)| {
        !block.is_empty()
            && (&Projector::sum_of(coarse.dim, block.iter().copied()).matrix - &p.matrix)
                .frobenius_norm()
                <= MATCH_TOL
    })
}

/// `(U P₁ U†, …, U Pₖ U†)`
pub fn rotate_context(c: &Context, u: &ComplexMatrix) -> Result<Context> {
    if u.dim() != c.dim {
        return Err(Error::DimensionMismatch(c.dim, u.dim()));
    }
    let defect = u.unitarity_defect();
    if defect > STRUCTURE_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let projectors = c
        .projectors
        .iter()
        .map(|p| Projector::new_unchecked(p.matrix.conjugate_by(u), p.rank))
        .collect();
    Ok(Context {
        dim: c.dim,
        projectors,
    })
}

pub fn random_maximal_context(dim: usize, seed: u64) -> Context {
    Context::from_basis(&haar_like_unitary(dim, seed)).expect("Haar sample is unitary")
}

/// Seeded set partition of `0..k` into nonempty blocks, in the format
/// [`coarsen`] takes. The block count is uniform on `1..=k`.
pub fn random_partition(k: usize, seed: u64) -> Vec<Vec<usize>> {
    if k == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = rng.random_range(1..=k);
    let mut idx: Vec<usize> = (0..k).collect();
    idx.shuffle(&mut rng);
    let mut out = vec![Vec::new(); blocks];
    for (pos, &i) in idx.iter().enumerate() {
        let b = if pos < blocks {
            pos
        } else {
            rng.random_range(0..blocks)
        };
        out[b].push(i);
    }
    out
}
