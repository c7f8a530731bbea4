use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid Lie algebra: {0}")]
    InvalidAlgebra(String),

    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),

    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("representation is not irreducible: filtration stabilizes at dimension {stalled_at} < {n}")]
    NotIrreducible { stalled_at: usize, n: usize },

    #[error("construction impossible: {0}")]
    ConstructionImpossible(String),

    #[error("parameters too large: metric not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    ParametersTooLarge { min_eigenvalue: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Innermost error, stripping stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}
