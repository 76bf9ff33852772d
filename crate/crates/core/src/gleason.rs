//! Finitely additive probability measures on projectors, their contextual
//! entropies, and the measure → entropy → state round trip.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::derive_seed;
use crate::entropy::EntropyOracle;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::quantum::{random_maximal_context, DensityMatrix, Projector, MATCH_TOL};
use crate::reconstruct::{
    reconstruct, reconstruct_qubit, ReconstructionConfig, ReconstructionReport,
};

/// Number of projections checked by [`gleason_roundtrip`].
pub const ROUNDTRIP_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    StateBacked,
    TableBacked,
}

pub type Evaluator = Arc<dyn Fn(&Projector) -> f64 + Send + Sync>;

/// A measure given by its behavior on projectors. Table-backed measures
/// carry finite overrides on top of a base evaluator.
#[derive(Clone)]
pub struct ProjectionMeasure {
    dim: usize,
    kind: MeasureKind,
    evaluator: Evaluator,
    overrides: Vec<(ComplexMatrix, f64)>,
    state: Option<DensityMatrix>,
}

impl std::fmt::Debug for ProjectionMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectionMeasure")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("overrides", &self.overrides.len())
            .finish_non_exhaustive()
    }
}

impl ProjectionMeasure {
    /// Arbitrary evaluator; marked table-backed.
    pub fn from_fn(dim: usize, f: impl Fn(&Projector) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            kind: MeasureKind::TableBacked,
            evaluator: Arc::new(f),
            overrides: Vec::new(),
            state: None,
        }
    }

    /// Pins the value on one projector.
    pub fn with_override(mut self, p: &Projector, value: f64) -> Self {
        self.kind = MeasureKind::TableBacked;
        self.state = None;
        self.overrides.push((p.matrix().clone(), value));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn evaluate(&self, p: &Projector) -> f64 {
        self.overrides
            .iter()
            .find(|(m, _)| (m - p.matrix()).frobenius_norm() <= MATCH_TOL)
            .map(|(_, v)| *v)
            .unwrap_or_else(|| (self.evaluator)(p))
    }

    pub(crate) fn backing_state(&self) -> Option<&DensityMatrix> {
        match self.kind {
            MeasureKind::StateBacked => self.state.as_ref(),
            MeasureKind::TableBacked => None,
        }
    }
}

/// `μ(P) = tr(ρP)`
pub fn measure_from_state(rho: DensityMatrix) -> ProjectionMeasure {
    let inner = rho.clone();
    ProjectionMeasure {
        dim: rho.dim(),
        kind: MeasureKind::StateBacked,
        evaluator: Arc::new(move |p| inner.matrix().trace_product(p.matrix()).re),
        overrides: Vec::new(),
        state: Some(rho),
    }
}

pub fn oracle_from_measure(mu: ProjectionMeasure) -> EntropyOracle {
    EntropyOracle::from_measure(mu)
}

/// Outcome of [`check_measure`]. Violations are absolute deviations.
#[derive(Clone, Debug)]
pub struct MeasureReport {
    pub samples: usize,
    /// `|μ(1) − 1|`
    pub normalization_error: f64,
    /// Largest distance of a sampled value outside `[0, 1]`.
    pub range_violation: f64,
    /// Largest `|μ(P+Q) − μ(P) − μ(Q)|` over sampled orthogonal pairs.
    pub additivity_violation: f64,
    /// The pair attaining `additivity_violation`.
    pub witness: Option<(Projector, Projector)>,
}

impl MeasureReport {
    pub fn worst_violation(&self) -> f64 {
        self.normalization_error
            .max(self.range_violation)
            .max(self.additivity_violation)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst_violation() <= tol
    }
}

fn range_excess(v: f64) -> f64 {
    if v < 0.0 {
        -v
    } else if v > 1.0 {
        v - 1.0
    } else {
        0.0
    }
}

/// Two mutually orthogonal nonzero projectors, from disjoint index sets of
/// a random maximal context.
pub fn sample_orthogonal_pair(dim: usize, seed: u64) -> (Projector, Projector) {
    let ctx = random_maximal_context(dim, derive_seed(seed, 0));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.shuffle(&mut rng);
    let a = rng.random_range(1..dim);
    let b = rng.random_range(1..=dim - a);
    let p = Projector::sum_of(dim, idx[..a].iter().map(|&i| &ctx.projectors()[i]));
    let q = Projector::sum_of(dim, idx[a..a + b].iter().map(|&i| &ctx.projectors()[i]));
    (p, q)
}

/// A projector of rank between 1 and `dim − 1`.
pub fn sample_projection(dim: usize, seed: u64) -> Projector {
    let ctx = random_maximal_context(dim, derive_seed(seed, 0));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.shuffle(&mut rng);
    let rank = rng.random_range(1..dim.max(2));
    Projector::sum_of(dim, idx[..rank].iter().map(|&i| &ctx.projectors()[i]))
}

/// Samples the defining conditions of a finitely additive probability
/// measure: normalization, range, and additivity on orthogonal pairs.
pub fn check_measure(mu: &ProjectionMeasure, samples: usize, seed: u64) -> MeasureReport {
    let n = mu.dim();
    let one = mu.evaluate(&Projector::identity(n));
    let mut report = MeasureReport {
        samples,
        normalization_error: (one - 1.0).abs(),
        range_violation: range_excess(one),
        additivity_violation: 0.0,
        witness: None,
    };
    if n < 2 {
        return report;
    }
    for s in 0..samples {
        let (p, q) = sample_orthogonal_pair(n, derive_seed(seed, s as u64));
        let joint = Projector::sum_of(n, [&p, &q]);
        let (vp, vq, vj) = (mu.evaluate(&p), mu.evaluate(&q), mu.evaluate(&joint));
        for v in [vp, vq, vj] {
            report.range_violation = report.range_violation.max(range_excess(v));
        }
        let gap = (vj - vp - vq).abs();
        if gap > report.additivity_violation || report.witness.is_none() {
            report.additivity_violation = report.additivity_violation.max(gap);
            report.witness = Some((p, q));
        }
    }
    report
}

/// Reconstruction from a measure's contextual entropy, compared back to
/// the measure on sampled projections.
#[derive(Clone, Debug)]
pub struct GleasonReport {
    pub reconstruction: ReconstructionReport,
    pub max_deviation: f64,
    pub samples: usize,
}

impl GleasonReport {
    pub fn to_json(&self) -> Value {
        let mut v = crate::io::report_json(&self.reconstruction);
        if let Value::Object(map) = &mut v {
            map.insert("max_deviation".into(), self.max_deviation.into());
            map.insert("samples".into(), self.samples.into());
        }
        v
    }
}

pub fn gleason_roundtrip(
    mu: &ProjectionMeasure,
    cfg: &ReconstructionConfig,
) -> Result<GleasonReport> {
    gleason_roundtrip_with(mu, cfg, ROUNDTRIP_SAMPLES)
}

/// As [`gleason_roundtrip`], with an explicit sample count.
///
/// In dimension two the candidates are compared on the minimizing
/// context's projectors only, and the deviation of the closer candidate is
/// reported.
pub fn gleason_roundtrip_with(
    mu: &ProjectionMeasure,
    cfg: &ReconstructionConfig,
    samples: usize,
) -> Result<GleasonReport> {
    let n = mu.dim();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let oracle = oracle_from_measure(mu.clone());
    let deviation = |rho: &DensityMatrix, p: &Projector| {
        (rho.matrix().trace_product(p.matrix()).re - mu.evaluate(p)).abs()
    };

    if n == 2 {
        let report = reconstruct_qubit(&oracle, cfg)?;
        // the best-matching candidate; both agree with the entropies
        let worst = report
            .candidates
            .iter()
            .map(|rho| {
                report
                    .context
                    .projectors()
                    .iter()
                    .map(|p| deviation(rho, p))
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        let samples = report.context.len();
        return Ok(GleasonReport {
            reconstruction: report,
            max_deviation: worst,
            samples,
        });
    }

    let report = reconstruct(&oracle, cfg)?;
    let rho = report.state();
    let mut worst: f64 = 0.0;
    for s in 0..samples {
        let p = sample_projection(n, derive_seed(cfg.seed ^ 0x6c65_6173_6f6e, s as u64));
        worst = worst.max(deviation(rho, &p));
    }
    Ok(GleasonReport {
        reconstruction: report,
        max_deviation: worst,
        samples,
    })
}
