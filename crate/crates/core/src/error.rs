use thiserror::Error;

/// Why a unit discrete log failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanFailure {
    /// The element has no inverse in the ring, so it is not a unit at all.
    NotAUnit,
    /// The element is a unit but no exponent vector within the search bound reproduces it.
    BoundExhausted,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("element is not a unit of the ring")]
    NotAUnit,
    #[error("level {level} is not coprime to the inverted modulus {modulus}")]
    LevelNotCoprime { level: u64, modulus: u64 },
    #[error("level {0} gives the zero ring")]
    DegenerateLevel(u64),
    #[error("element not in the span of the unit basis ({0:?})")]
    NotInSpan(SpanFailure),
    #[error("ambient rank mismatch: {left} vs {right}")]
    AmbientMismatch { left: usize, right: usize },
    #[error("no qualifying {what} found up to {bound}")]
    SearchExhausted { what: &'static str, bound: u64 },
    #[error("matrix is not invertible over the ring")]
    NonInvertible,
    #[error("matrix is not upper triangular")]
    NotTriangular,
    #[error("matrix is not unitriangular")]
    NotUnitriangular,
    #[error("matrix is upper triangular; no below-diagonal entry to separate by")]
    NotBelowDiagonal,
    #[error("closure exceeded budget {budget} (reached {partial} elements)")]
    ClosureBudgetExceeded { partial: usize, budget: usize },
    #[error("enumeration of {what} exceeds budget {budget}")]
    BudgetExceeded { what: &'static str, budget: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("strip-lattice saturation did not stabilise within {iterations} rounds; group may not be polycyclic")]
    NonPolycyclicSuspected { iterations: usize },
    #[error("decomposition failed: {0}")]
    DecompositionFailed(String),
    #[error("derived layer not computable: {0}")]
    LayerNotComputable(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Budget-type failures map to their own CLI exit status.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::ClosureBudgetExceeded { .. }
                | Error::BudgetExceeded { .. }
                | Error::SearchExhausted { .. }
                | Error::NonPolycyclicSuspected { .. }
        )
    }
}
