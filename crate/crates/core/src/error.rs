use std::fmt;

use thiserror::Error;

/// Stage of the reconstruction pipeline at which an error surfaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// Finding a minimizing maximal context.
    MinimalContext,
    /// Locating the pure state among the minimizing context's projectors.
    PureState,
    /// Binary-entropy queries and inversion.
    EigenvalueCandidates,
    /// Picking one entry per column of the solution table.
    Assignment,
    /// Resolving the two-fold ambiguity with a second table.
    Disambiguation,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Step::MinimalContext => "minimal context search",
            Step::PureState => "pure-state identification",
            Step::EigenvalueCandidates => "eigenvalue candidates",
            Step::Assignment => "assignment selection",
            Step::Disambiguation => "two-fold disambiguation",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not a nonzero orthogonal projector (deviation {0:.3e})")]
    NotProjector(f64),

    #[error("projectors {0} and {1} are not orthogonal")]
    NotOrthogonal(usize, usize),

    #[error("projectors do not sum to the identity (deviation {0:.3e})")]
    IncompleteSum(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("eigensolver did not converge")]
    ConvergenceFailure,

    #[error("not a density matrix: {0}")]
    NotADensityMatrix(String),

    #[error("not a probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("value {0} is outside the binary-entropy range [0, ln 2]")]
    OutOfRange(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("spectral proposer needs a hidden state, but the oracle has none")]
    ProposerUnavailable,

    #[error("dimension {0} is too small: at least 3 is required")]
    DimensionTooSmall(usize),

    #[error("no generic fixing unitary found after {0} attempts")]
    RetriesExhausted(usize),

    #[error("no rotated context has zero entropy")]
    NoZeroContext,

    #[error("rotated contexts {0} and {1} both have zero entropy")]
    AmbiguousZero(usize, usize),

    #[error("solution table admits no valid assignment: {0}")]
    InvalidTable(String),

    #[error("second solution table is ambiguous again")]
    SecondTableAmbiguous,

    #[error("fixed eigenvalue {found} matches neither {c} nor its complement")]
    MatchFailure { found: f64, c: f64 },

    #[error("measure weights on a context sum to {0}, not 1")]
    NotADistribution(f64),

    #[error("{step}: {source}")]
    AtStep {
        step: Step,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(step: Step) -> impl FnOnce(Error) -> Error {
        move |e| match e {
            already @ Error::AtStep { .. } => already,
            other => Error::AtStep {
                step,
                source: Box::new(other),
            },
        }
    }

    /// The innermost error, with any step annotations peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
