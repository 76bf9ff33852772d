//! Recovering a density matrix from entropy-oracle queries alone.
//!
//! The pipeline:
//!
//! 1. find a maximal context `C_ρ = (P₁,…,Pₙ)` minimizing the oracle; the
//!    hidden state is diagonal there, `ρ = Σ λᵢ Pᵢ`;
//! 2. if the minimum is zero the state is one of the `Pᵢ`, singled out by
//!    querying `n` contexts rotated by unitaries that fix one `Pᵢ` each;
//! 3. otherwise query the two-outcome contexts `(Pᵢ, 1 − Pᵢ)`, invert the
//!    binary entropies into a table of pairs `(cᵢ, 1 − cᵢ)` and pick one
//!    entry per column summing to one. When the pick is ambiguous between
//!    `cPⱼ + (1−c)Pₖ` and `cPₖ + (1−c)Pⱼ`, a second table built from a
//!    unitary fixing `Pⱼ` decides.
//!
//! In dimension two the last step is impossible and both orderings are
//! returned.

use serde::Serialize;

use crate::derive_seed;
use crate::entropy::{invert_binary_entropy, EntropyOracle};
use crate::error::{Error, Result, Step};
use crate::linalg::{haar_like_unitary, trace_distance, unitary_exp, ComplexMatrix, C64};
use crate::quantum::{eigencontext, rotate_context, Context, DensityMatrix, Projector};

/// How Step 1 obtains its minimizing maximal context.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Proposer {
    /// Eigencontext of the oracle's hidden state. Test-harness shortcut:
    /// the returned value still comes from an oracle query.
    Spectral,
    /// Seeded random restarts followed by coordinate descent over
    /// two-plane rotations, using oracle queries only.
    Search { restarts: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionConfig {
    /// Tolerance for comparing table entries and sums.
    pub value_tol: f64,
    /// Minimal entropies at or below this are treated as zero (pure state).
    pub entropy_tol: f64,
    /// Rotation angle of the fixing unitaries, in radians.
    pub theta: f64,
    pub max_retries: usize,
    pub seed: u64,
    pub proposer: Proposer,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            value_tol: 1e-9,
            entropy_tol: 1e-9,
            theta: 0.37,
            max_retries: 8,
            seed: 0,
            proposer: Proposer::Spectral,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.value_tol > 0.0 && self.entropy_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.theta > 0.0 && self.theta < std::f64::consts::PI) {
            return Err(Error::InvalidConfig(format!(
                "theta {} is not in (0, π)",
                self.theta
            )));
        }
        if let Proposer::Search { restarts: 0 } = self.proposer {
            return Err(Error::InvalidConfig(
                "search needs at least one restart".into(),
            ));
        }
        Ok(())
    }
}

/// Two-row table of binary-entropy preimages `(cᵢ, 1 − cᵢ)`, `cᵢ ≤ ½`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionTable {
    columns: Vec<(f64, f64)>,
}

impl SolutionTable {
    /// Inverts each binary entropy into a column.
    pub fn from_entropies(entropies: &[f64]) -> Result<Self> {
        let columns = entropies
            .iter()
            .map(|&h| invert_binary_entropy(h).map(|c| (c, 1.0 - c)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { columns })
    }

    /// Builds a table directly from top-row entries, each clamped to `[0, ½]`.
    pub fn from_top_row(top: &[f64]) -> Self {
        Self {
            columns: top
                .iter()
                .map(|&c| {
                    let c = c.clamp(0.0, 0.5);
                    (c, 1.0 - c)
                })
                .collect(),
        }
    }

    pub fn columns(&self) -> &[(f64, f64)] {
        &self.columns
    }

    pub fn top_row(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.0).collect()
    }

    /// `S = Σ cᵢ`
    pub fn top_row_sum(&self) -> f64 {
        self.columns.iter().map(|c| c.0).sum()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Assignment {
    /// One entry per column; `flipped` names the column taken from the
    /// bottom row, if any.
    Unique {
        lambdas: Vec<f64>,
        flipped: Option<usize>,
    },
    /// `c·P_j + (1−c)·P_k` or `c·P_k + (1−c)·P_j`, all other entries zero.
    AmbiguousPair { j: usize, k: usize, c: f64 },
}

/// Picks one entry per column so that the picks sum to one.
pub fn select_assignment(table: &SolutionTable, cfg: &ReconstructionConfig) -> Result<Assignment> {
    let tol = cfg.value_tol;
    let n = table.len();
    let top = table.top_row();
    let s = table.top_row_sum();

    if (s - 1.0).abs() <= n as f64 * tol {
        return Ok(Assignment::Unique {
            lambdas: top,
            flipped: None,
        });
    }
    if s > 1.0 {
        return Err(Error::InvalidTable(format!("top row sums to {s} > 1")));
    }

    let target = s / 2.0;
    let matches: Vec<usize> = (0..n).filter(|&i| (top[i] - target).abs() <= tol).collect();
    match matches.as_slice() {
        [j] => {
            let mut lambdas = top;
            lambdas[*j] = 1.0 - lambdas[*j];
            Ok(Assignment::Unique {
                lambdas,
                flipped: Some(*j),
            })
        }
        [j, k] => {
            let stray = (0..n).find(|&i| i != *j && i != *k && top[i] > tol);
            match stray {
                Some(i) => Err(Error::InvalidTable(format!(
                    "value {target} appears twice but column {i} holds {}",
                    top[i]
                ))),
                None => Ok(Assignment::AmbiguousPair {
                    j: *j,
                    k: *k,
                    c: target,
                }),
            }
        }
        [] => Err(Error::InvalidTable(format!(
            "no top-row entry equals S/2 = {target}"
        ))),
        many => Err(Error::InvalidTable(format!(
            "S/2 = {target} appears {} times",
            many.len()
        ))),
    }
}

/// Step 1: a maximal context on which the oracle is (approximately)
/// minimal, together with the queried value there.
pub fn minimize_over_maximal_contexts(
    oracle: &EntropyOracle,
    proposer: Proposer,
    cfg: &ReconstructionConfig,
) -> Result<(Context, f64)> {
    match proposer {
        Proposer::Spectral => {
            let hidden = oracle.hidden_state().ok_or(Error::ProposerUnavailable)?;
            let ctx = eigencontext(hidden)?;
            let value = oracle.query(&ctx)?;
            Ok((ctx, value))
        }
        Proposer::Search { restarts } => search_minimum(oracle, restarts, cfg.seed),
    }
}

const SEARCH_MAX_SWEEPS: usize = 200;
const SEARCH_SWEEP_GAIN: f64 = 1e-13;
const LINE_GRID: usize = 8;
const LINE_TOL: f64 = 1e-9;

fn search_minimum(oracle: &EntropyOracle, restarts: usize, seed: u64) -> Result<(Context, f64)> {
    let n = oracle.dim();
    let mut best: Option<(ComplexMatrix, f64)> = None;
    for r in 0..restarts {
        let mut basis = haar_like_unitary(n, derive_seed(seed, r as u64));
        let mut value = oracle.query(&Context::from_basis(&basis)?)?;
        for _ in 0..SEARCH_MAX_SWEEPS {
            let before = value;
            for a in 0..n {
                for b in a + 1..n {
                    // real and imaginary plane rotations generate SU(2) on the plane
                    for phase in [0.0, std::f64::consts::FRAC_PI_2] {
                        let eval = |phi: f64| -> Result<f64> {
                            oracle.query(&Context::from_basis(&plane_rotation(
                                &basis, a, b, phi, phase,
                            ))?)
                        };
                        let (phi, v) = line_minimize(eval)?;
                        if v < value {
                            basis = plane_rotation(&basis, a, b, phi, phase);
                            value = v;
                        }
                    }
                }
            }
            if before - value <= SEARCH_SWEEP_GAIN {
                break;
            }
        }
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((basis, value));
        }
    }
    let (basis, value) = best.expect("at least one restart");
    Ok((Context::from_basis(&basis)?, value))
}

/// Mixes columns `a` and `b` of `basis` by angle `phi` with relative phase.
fn plane_rotation(
    basis: &ComplexMatrix,
    a: usize,
    b: usize,
    phi: f64,
    phase: f64,
) -> ComplexMatrix {
    let (s, c) = phi.sin_cos();
    let w = C64::from_polar(1.0, phase);
    ComplexMatrix::from_fn(basis.dim(), |i, j| {
        if j == a {
            basis.get(i, a) * c + basis.get(i, b) * w * s
        } else if j == b {
            -basis.get(i, a) * w.conj() * s + basis.get(i, b) * c
        } else {
            basis.get(i, j)
        }
    })
}

/// Minimizes over one rotation angle. Entropy is invariant under outcome
/// permutations, so a quarter turn is a full period.
fn line_minimize(mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let quarter = std::f64::consts::FRAC_PI_4;
    let step = 2.0 * quarter / LINE_GRID as f64;
    let mut best = (0.0, f(0.0)?);
    for k in 1..LINE_GRID {
        let phi = -quarter + k as f64 * step;
        let v = f(phi)?;
        if v < best.1 {
            best = (phi, v);
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > LINE_TOL {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    for cand in [(x1, f1), (x2, f2)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    Ok(best)
}

/// Unitary leaving `Pᵢ` of a maximal context invariant while rotating every
/// other projector off the context.
///
/// On the orthogonal complement of `Pᵢ` it is `exp(iθA)` with `A` the
/// all-ones off-diagonal generator in the context's basis. Each candidate
/// is checked afterwards and re-drawn with a perturbed angle on failure.
pub fn fixing_unitary(c: &Context, i: usize, cfg: &ReconstructionConfig) -> Result<ComplexMatrix> {
    let n = c.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall(n));
    }
    if i >= c.len() {
        return Err(Error::InvalidConfig(format!(
            "outcome index {i} out of range"
        )));
    }
    let basis = c
        .basis()
        .ok_or_else(|| Error::InvalidConfig("fixing unitary needs a maximal context".into()))?;
    let others: Vec<usize> = (0..n).filter(|&k| k != i).collect();
    let mut generator = ComplexMatrix::zeros(n);
    for &j in &others {
        for &k in &others {
            if j != k {
                let term =
                    ComplexMatrix::from_fn(n, |r, s| basis.get(r, j) * basis.get(s, k).conj());
                generator = &generator + &term;
            }
        }
    }
    let generator = generator.hermitian_part();
    let limit = 1.0 - 10.0 * cfg.value_tol;
    let fixed = c.projectors()[i].matrix();

    for attempt in 0..=cfg.max_retries {
        let theta = cfg.theta * (1.0 + 0.137 * attempt as f64);
        let u = unitary_exp(&generator, theta)?;
        if (&fixed.conjugate_by(&u) - fixed).max_abs() > 1e-10 {
            continue;
        }
        let generic = others.iter().all(|&j| {
            let moved = c.projectors()[j].matrix().conjugate_by(&u);
            c.projectors()
                .iter()
                .map(|p| moved.trace_product(p.matrix()).re)
                .fold(f64::MIN, f64::max)
                <= limit
        });
        if generic {
            return Ok(u);
        }
    }
    Err(Error::RetriesExhausted(cfg.max_retries + 1))
}

/// Pure branch: which projector of a zero-entropy maximal context is the
/// state. Issues exactly `n` queries.
pub fn identify_pure(
    oracle: &EntropyOracle,
    c_rho: &Context,
    cfg: &ReconstructionConfig,
) -> Result<Projector> {
    let n = c_rho.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall(n));
    }
    let unitaries = (0..n)
        .map(|i| fixing_unitary(c_rho, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(n);
    for u in &unitaries {
        values.push(oracle.query(&rotate_context(c_rho, u)?)?);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let (first, second) = (order[0], order[1]);
    if values[first] > cfg.entropy_tol {
        return Err(Error::NoZeroContext);
    }
    if values[second] <= cfg.entropy_tol {
        return Err(Error::AmbiguousZero(first, second));
    }
    Ok(c_rho.projectors()[first].clone())
}

fn binary_table(oracle: &EntropyOracle, projectors: &[Projector]) -> Result<SolutionTable> {
    let mut entropies = Vec::with_capacity(projectors.len());
    for p in projectors {
        entropies.push(oracle.query(&Context::two_outcome(p)?)?);
    }
    SolutionTable::from_entropies(&entropies)
}

/// Queries `(Pᵢ, 1 − Pᵢ)` for each projector of `c_rho` and inverts.
/// Exactly `n` queries.
pub fn eigenvalue_candidates(oracle: &EntropyOracle, c_rho: &Context) -> Result<SolutionTable> {
    if !c_rho.is_maximal() {
        return Err(Error::InvalidConfig(
            "candidate table needs a maximal context".into(),
        ));
    }
    binary_table(oracle, c_rho.projectors())
}

/// Unique assignment of the second table, read off contexts rotated by a
/// unitary fixing `P_j`.
pub(crate) fn second_table_assignment(
    oracle: &EntropyOracle,
    c_rho: &Context,
    j: usize,
    cfg: &ReconstructionConfig,
) -> Result<Vec<f64>> {
    let u = fixing_unitary(c_rho, j, cfg)?;
    let rotated = rotate_context(c_rho, &u)?;
    let table = binary_table(oracle, rotated.projectors())?;
    match select_assignment(&table, cfg)? {
        Assignment::Unique { lambdas, .. } => Ok(lambdas),
        Assignment::AmbiguousPair { .. } => Err(Error::SecondTableAmbiguous),
    }
}

/// Resolves `c·P_j + (1−c)·P_k` against `c·P_k + (1−c)·P_j`. Issues
/// exactly `n` queries.
pub fn disambiguate_b2(
    oracle: &EntropyOracle,
    c_rho: &Context,
    pair: &Assignment,
    cfg: &ReconstructionConfig,
) -> Result<Vec<f64>> {
    let Assignment::AmbiguousPair { j, k, c } = *pair else {
        return Err(Error::InvalidConfig(
            "disambiguation needs an ambiguous pair".into(),
        ));
    };
    let n = c_rho.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall(n));
    }
    let second = second_table_assignment(oracle, c_rho, j, cfg)?;
    // P_j is fixed by the rotation, so its weight is unchanged
    let found = second[j];
    let lambda_j = if (found - c).abs() <= cfg.value_tol {
        c
    } else if (found - (1.0 - c)).abs() <= cfg.value_tol {
        1.0 - c
    } else {
        return Err(Error::MatchFailure { found, c });
    };
    let mut lambdas = vec![0.0; n];
    lambdas[j] = lambda_j;
    lambdas[k] = 1.0 - lambda_j;
    Ok(lambdas)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Pure,
    MixedA,
    MixedB1,
    MixedB2,
    QubitAmbiguous,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Pure => "pure",
            Branch::MixedA => "mixed_a",
            Branch::MixedB1 => "mixed_b1",
            Branch::MixedB2 => "mixed_b2",
            Branch::QubitAmbiguous => "qubit_ambiguous",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    /// One state, or two for the qubit ambiguity.
    pub candidates: Vec<DensityMatrix>,
    pub branch: Branch,
    /// Queries issued during this reconstruction.
    pub query_count: u64,
    /// Of which Step 1 (the minimal-context search) issued these.
    pub step1_queries: u64,
    pub contexts_used: usize,
    /// Trace distance to the hidden state, when the oracle has one. With two
    /// candidates, the smaller distance.
    pub residual: Option<f64>,
    /// The minimizing maximal context the state is diagonal in.
    pub context: Context,
    /// Eigenvalues over `context`, for single-candidate reports.
    pub eigenvalues: Option<Vec<f64>>,
}

impl ReconstructionReport {
    pub fn state(&self) -> &DensityMatrix {
        &self.candidates[0]
    }

    /// Queries issued after Step 1.
    pub fn post_search_queries(&self) -> u64 {
        self.query_count - self.step1_queries
    }
}

/// `Σ λᵢ Pᵢ`, with the weights clamped and renormalized against round-off.
fn assemble(c: &Context, lambdas: &[f64]) -> Result<DensityMatrix> {
    let clamped: Vec<f64> = lambdas.iter().map(|l| l.clamp(0.0, 1.0)).collect();
    let total: f64 = clamped.iter().sum();
    let mut m = ComplexMatrix::zeros(c.dim());
    for (p, l) in c.projectors().iter().zip(&clamped) {
        m = &m + &p.matrix().scale(l / total);
    }
    DensityMatrix::new(m)
}

fn residual(oracle: &EntropyOracle, candidates: &[DensityMatrix]) -> Result<Option<f64>> {
    let Some(hidden) = oracle.hidden_state() else {
        return Ok(None);
    };
    let mut best = f64::INFINITY;
    for c in candidates {
        best = best.min(trace_distance(c, hidden)?);
    }
    Ok(Some(best))
}

/// Full reconstruction for dimension three and up.
pub fn reconstruct(
    oracle: &EntropyOracle,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionReport> {
    let n = oracle.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall(n));
    }
    cfg.validate()?;
    let start = oracle.query_count();
    let (c_rho, minimum) = minimize_over_maximal_contexts(oracle, cfg.proposer, cfg)
        .map_err(Error::at(Step::MinimalContext))?;
    let step1_queries = oracle.query_count() - start;

    let (state, branch, eigenvalues, contexts_used) = if minimum <= cfg.entropy_tol {
        let p = identify_pure(oracle, &c_rho, cfg).map_err(Error::at(Step::PureState))?;
        let state = DensityMatrix::new(p.matrix().clone())?;
        (state, Branch::Pure, None, 1 + n)
    } else {
        let table =
            eigenvalue_candidates(oracle, &c_rho).map_err(Error::at(Step::EigenvalueCandidates))?;
        let assignment = select_assignment(&table, cfg).map_err(Error::at(Step::Assignment))?;
        let (lambdas, branch, used) = match assignment {
            Assignment::Unique {
                lambdas,
                flipped: None,
            } => (lambdas, Branch::MixedA, 1 + n),
            Assignment::Unique {
                lambdas,
                flipped: Some(_),
            } => (lambdas, Branch::MixedB1, 1 + n),
            pair @ Assignment::AmbiguousPair { .. } => {
                let lambdas = disambiguate_b2(oracle, &c_rho, &pair, cfg)
                    .map_err(Error::at(Step::Disambiguation))?;
                (lambdas, Branch::MixedB2, 1 + 2 * n)
            }
        };
        (assemble(&c_rho, &lambdas)?, branch, Some(lambdas), used)
    };

    let candidates = vec![state];
    Ok(ReconstructionReport {
        residual: residual(oracle, &candidates)?,
        candidates,
        branch,
        query_count: oracle.query_count() - start,
        step1_queries,
        contexts_used,
        context: c_rho,
        eigenvalues,
    })
}

/// Dimension-two reconstruction: the state up to swapping its eigenvalues.
pub fn reconstruct_qubit(
    oracle: &EntropyOracle,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionReport> {
    let n = oracle.dim();
    if n != 2 {
        return Err(Error::DimensionMismatch(2, n));
    }
    cfg.validate()?;
    let start = oracle.query_count();
    let (c_rho, _) = minimize_over_maximal_contexts(oracle, cfg.proposer, cfg)
        .map_err(Error::at(Step::MinimalContext))?;
    let step1_queries = oracle.query_count() - start;
    let table =
        eigenvalue_candidates(oracle, &c_rho).map_err(Error::at(Step::EigenvalueCandidates))?;
    let assignment = select_assignment(&table, cfg).map_err(Error::at(Step::Assignment))?;

    let (candidates, branch, eigenvalues) = match assignment {
        Assignment::Unique { lambdas, .. } => (
            vec![assemble(&c_rho, &lambdas)?],
            Branch::MixedA,
            Some(lambdas),
        ),
        Assignment::AmbiguousPair { j, k, c } => {
            let mut first = vec![0.0; 2];
            first[j] = c;
            first[k] = 1.0 - c;
            let second = vec![first[1], first[0]];
            (
                vec![assemble(&c_rho, &first)?, assemble(&c_rho, &second)?],
                Branch::QubitAmbiguous,
                None,
            )
        }
    };
    Ok(ReconstructionReport {
        residual: residual(oracle, &candidates)?,
        candidates,
        branch,
        query_count: oracle.query_count() - start,
        step1_queries,
        contexts_used: 1 + n,
        context: c_rho,
        eigenvalues,
    })
}
