use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    Convergence { sweeps: usize, off: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular point: |x| = {norm:e}")]
    SingularPoint { norm: f64 },

    #[error("subspace basis is not orthonormal (residual {0:e})")]
    NotOrthonormal(f64),

    #[error("operator table is empty")]
    EmptyTable,

    #[error("{violations} of {pairs} sampled pairs violate the K-cone condition")]
    ConeViolation { violations: usize, pairs: usize },

    #[error("pencil is not strictly hyperbolic near theta = {theta}")]
    NotHyperbolic { theta: f64 },

    #[error("no point with F1 = 0 and F2 < 0 after {restarts} restarts (best F2 = {best:e})")]
    SearchFailure { restarts: usize, best: f64 },

    #[error("cubic form is identically zero")]
    ZeroForm,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}
