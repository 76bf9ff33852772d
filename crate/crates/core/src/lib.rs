//! Contextual entropy of finite-dimensional quantum states.
//!
//! For a state `ρ` on `ℂⁿ` and a measurement context `C = (P₁,…,Pₖ)` (a
//! resolution of the identity into orthogonal projectors) the contextual
//! entropy is the Shannon entropy of the Born distribution
//! `(tr ρP₁, …, tr ρPₖ)`. Over maximal contexts it is minimized exactly at
//! the eigenbasis of `ρ`, where it equals the von Neumann entropy, and it
//! never increases under coarse-graining.
//!
//! The crate also inverts the map: [`reconstruct()`] recovers `ρ` from an
//! [`EntropyOracle`] alone when `n ≥ 3`, and [`reconstruct_qubit`] recovers
//! a qubit up to swapping its eigenvalues.
//!
//! ```
//! use ctxent::{oracle_from_state, reconstruct, DensityMatrix, ReconstructionConfig};
//!
//! let hidden = DensityMatrix::random(3, 3, 7).unwrap();
//! let oracle = oracle_from_state(hidden);
//! let report = reconstruct(&oracle, &ReconstructionConfig::default()).unwrap();
//! assert!(report.residual.unwrap() < 1e-6);
//! ```

#![forbid(unsafe_code)]

pub mod entropy;
pub mod error;
pub mod gleason;
pub mod io;
pub mod linalg;
pub mod quantum;
pub mod reconstruct;

pub use entropy::{
    binary_entropy, contextual_entropy, invert_binary_entropy, majorizes, oracle_from_state,
    shannon, shannon_of, von_neumann, EntropyOracle,
};
pub use error::{Error, Result, Step};
pub use gleason::{
    check_measure, gleason_roundtrip, measure_from_state, oracle_from_measure, GleasonReport,
    MeasureKind, MeasureReport, ProjectionMeasure,
};
pub use linalg::{
    haar_like_unitary, hermitian_eigensystem, trace_distance, unitary_exp, ComplexMatrix, C64,
};
pub use quantum::{
    born, coarsen, eigencontext, is_coarsening, random_maximal_context, random_partition,
    rotate_context, Context, DensityMatrix, ProbabilityDistribution, Projector,
};
pub use reconstruct::{
    disambiguate_b2, eigenvalue_candidates, fixing_unitary, identify_pure,
    minimize_over_maximal_contexts, reconstruct, reconstruct_qubit, select_assignment, Assignment,
    Branch, Proposer, ReconstructionConfig, ReconstructionReport, SolutionTable,
};

/// Splits one seed into a stream of independent ones (SplitMix64).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
