//! Shannon and von Neumann entropies, majorization, and the query-counted
//! entropy oracle. All logarithms are natural.

use std::f64::consts::LN_2;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::gleason::ProjectionMeasure;
use crate::linalg::STRUCTURE_TOL;
use crate::quantum::{born, Context, DensityMatrix, ProbabilityDistribution};

/// Absolute bracket width at which binary-entropy bisection may stop.
pub const INVERSION_TOL: f64 = 1e-14;

/// `−Σ pᵢ ln pᵢ` with `0 · ln 0 = 0`.
pub fn shannon(p: &ProbabilityDistribution) -> f64 {
    shannon_of(p.weights())
}

pub fn shannon_of(weights: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in weights {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h
}

/// `−x ln x − (1−x) ln(1−x)` on `[0, 1]`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.ln() - (1.0 - x) * (-x).ln_1p()
}

/// The unique `c ∈ [0, ½]` whose binary entropy is `h`; the other
/// preimage is `1 − c`.
pub fn invert_binary_entropy(h: f64) -> Result<f64> {
    if !h.is_finite() || !(-STRUCTURE_TOL..=LN_2 + STRUCTURE_TOL).contains(&h) {
        return Err(Error::OutOfRange(h));
    }
    if h <= 0.0 {
        return Ok(0.0);
    }
    // near ½ the forward map is flat to within round-off
    if h >= LN_2 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 0.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = binary_entropy(mid);
        if f < h {
            lo = mid;
        } else if f > h {
            hi = mid;
        } else {
            return Ok(mid);
        }
    }
    debug_assert!(hi - lo <= INVERSION_TOL);
    Ok(0.5 * (lo + hi))
}

/// Shannon entropy of the Born distribution of `rho` in `c`.
pub fn contextual_entropy(rho: &DensityMatrix, c: &Context) -> Result<f64> {
    Ok(shannon(&born(rho, c)?))
}

pub fn von_neumann(rho: &DensityMatrix) -> Result<f64> {
    let spectrum: Vec<f64> = rho.eigenvalues()?.into_iter().map(|l| l.max(0.0)).collect();
    Ok(shannon_of(&spectrum))
}

/// Whether `s` majorizes `r`: equal totals and dominating descending
/// partial sums, both up to [`STRUCTURE_TOL`].
pub fn majorizes(s: &[f64], r: &[f64]) -> Result<bool> {
    majorizes_within(s, r, STRUCTURE_TOL)
}

pub fn majorizes_within(s: &[f64], r: &[f64], tol: f64) -> Result<bool> {
    if s.len() != r.len() {
        return Err(Error::LengthMismatch(s.len(), r.len()));
    }
    let descending = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let (s, r) = (descending(s), descending(r));
    let (mut acc_s, mut acc_r) = (0.0, 0.0);
    for (a, b) in s.iter().zip(&r) {
        acc_s += a;
        acc_r += b;
        if acc_s < acc_r - tol {
            return Ok(false);
        }
    }
    Ok((acc_s - acc_r).abs() <= tol)
}

enum Backing {
    State(DensityMatrix),
    Measure(ProjectionMeasure),
}

/// Opaque map from contexts to entropy values with a query counter.
///
/// Reconstruction only ever calls [`EntropyOracle::query`]; the backing
/// state is reachable inside the crate for the spectral proposer and for
/// ground-truth residuals, never through the public interface.
pub struct EntropyOracle {
    dim: usize,
    backing: Backing,
    queries: AtomicU64,
}

impl EntropyOracle {
    pub fn from_state(rho: DensityMatrix) -> Self {
        Self {
            dim: rho.dim(),
            backing: Backing::State(rho),
            queries: AtomicU64::new(0),
        }
    }

    pub fn from_measure(mu: ProjectionMeasure) -> Self {
        Self {
            dim: mu.dim(),
            backing: Backing::Measure(mu),
            queries: AtomicU64::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    /// Entropy of the context's outcome distribution. Every call counts,
    /// including ones that fail.
    pub fn query(&self, c: &Context) -> Result<f64> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        if c.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, c.dim()));
        }
        match &self.backing {
            Backing::State(rho) => contextual_entropy(rho, c),
            Backing::Measure(mu) => {
                let weights: Vec<f64> = c.projectors().iter().map(|p| mu.evaluate(p)).collect();
                let total: f64 = weights.iter().sum();
                let p = ProbabilityDistribution::new(weights)
                    .map_err(|_| Error::NotADistribution(total))?;
                Ok(shannon(&p))
            }
        }
    }

    pub(crate) fn hidden_state(&self) -> Option<&DensityMatrix> {
        match &self.backing {
            Backing::State(rho) => Some(rho),
            Backing::Measure(mu) => mu.backing_state(),
        }
    }
}

impl std::fmt::Debug for EntropyOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EntropyOracle")
            .field("dim", &self.dim)
            .field("queries", &self.query_count())
            .finish_non_exhaustive()
    }
}

pub fn oracle_from_state(rho: DensityMatrix) -> EntropyOracle {
    EntropyOracle::from_state(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::quantum::{eigencontext, random_maximal_context, Projector};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn shannon_examples() {
        let p = ProbabilityDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(shannon(&p), 0.0);
        for n in 1..8 {
            let h = shannon(&ProbabilityDistribution::uniform(n));
            assert!((h - (n as f64).ln()).abs() < 1e-14);
        }
        let p = ProbabilityDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((shannon(&p) - 1.5 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(invert_binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(invert_binary_entropy(LN_2).unwrap(), 0.5);
        let c = invert_binary_entropy(binary_entropy(0.2)).unwrap();
        assert!((c - 0.2).abs() < 1e-10);
        // slight round-off outside the range is clamped
        assert_eq!(invert_binary_entropy(-1e-12).unwrap(), 0.0);
        assert_eq!(invert_binary_entropy(LN_2 + 1e-12).unwrap(), 0.5);
    }

    #[test]
    fn inversion_rejects_out_of_range() {
        assert!(matches!(
            invert_binary_entropy(-0.01),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            invert_binary_entropy(0.7),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            invert_binary_entropy(f64::NAN),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn contextual_entropy_examples() {
        let pure = DensityMatrix::random_pure(3, 5);
        let h = contextual_entropy(&pure, &eigencontext(&pure).unwrap()).unwrap();
        assert!(h.abs() < 1e-12);

        let mixed = DensityMatrix::maximally_mixed(4);
        let h = contextual_entropy(&mixed, &random_maximal_context(4, 3)).unwrap();
        assert!((h - 4f64.ln()).abs() < 1e-13);

        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        let pm = Context::from_projectors(vec![
            Projector::rank_one(&[s, s]),
            Projector::rank_one(&[s, -s]),
        ])
        .unwrap();
        let rho = DensityMatrix::diagonal(&[0.8, 0.2]).unwrap();
        assert!((contextual_entropy(&rho, &pm).unwrap() - LN_2).abs() < 1e-14);
    }

    #[test]
    fn von_neumann_examples() {
        assert!(
            von_neumann(&DensityMatrix::random_pure(4, 1))
                .unwrap()
                .abs()
                < 1e-12
        );
        let h = von_neumann(&DensityMatrix::maximally_mixed(5)).unwrap();
        assert!((h - 5f64.ln()).abs() < 1e-13);
        // −(0.5 ln 0.5 + 0.3 ln 0.3 + 0.2 ln 0.2)
        let h = von_neumann(&DensityMatrix::diagonal(&[0.5, 0.3, 0.2]).unwrap()).unwrap();
        assert!((h - 1.029_653_014_064_573_7).abs() < 1e-12);
    }

    #[test]
    fn majorization_examples() {
        let r = [0.2, 0.5, 0.3];
        assert!(majorizes(&[1.0, 0.0, 0.0], &r).unwrap());
        assert!(!majorizes(&r, &[1.0, 0.0, 0.0]).unwrap());
        let u = [1.0 / 3.0; 3];
        assert!(majorizes(&u, &u).unwrap());
        assert!(majorizes(&r, &u).unwrap());
        assert!(!majorizes(&[0.5, 0.5, 0.1], &r).unwrap());
        assert!(matches!(
            majorizes(&u, &[1.0]),
            Err(Error::LengthMismatch(3, 1))
        ));
    }

    #[test]
    fn oracle_counts_queries() {
        let rho = DensityMatrix::random(3, 3, 21).unwrap();
        let oracle = oracle_from_state(rho.clone());
        let s = von_neumann(&rho).unwrap();
        let h = oracle.query(&eigencontext(&rho).unwrap()).unwrap();
        assert!((h - s).abs() < 1e-10);
        oracle.query(&random_maximal_context(3, 0)).unwrap();
        assert_eq!(oracle.query_count(), 2);
        assert!(oracle.query(&Context::standard(2)).is_err());
        assert_eq!(oracle.query_count(), 3);
    }

    #[test]
    fn oracle_values_bracketed_by_von_neumann_and_ln_n() {
        let rho = DensityMatrix::random(4, 4, 8).unwrap();
        let s = von_neumann(&rho).unwrap();
        let oracle = oracle_from_state(rho);
        for seed in 0..100 {
            let h = oracle.query(&random_maximal_context(4, seed)).unwrap();
            assert!(h >= s - 1e-9 && h <= 4f64.ln() + 1e-9);
        }
    }

    #[test]
    fn concurrent_queries_are_all_counted() {
        let oracle = oracle_from_state(DensityMatrix::random(3, 3, 2).unwrap());
        let ctx = random_maximal_context(3, 4);
        std::thread::scope(|scope| {
            for _ in 0..8 {
                scope.spawn(|| {
                    for _ in 0..250 {
                        oracle.query(&ctx).unwrap();
                    }
                });
            }
        });
        assert_eq!(oracle.query_count(), 2000);
    }
}
