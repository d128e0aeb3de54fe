use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for {what} of length {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("quadrature did not converge: relative change {rel_change:.3e} with {nodes} nodes")]
    QuadratureNotConverged { rel_change: f64, nodes: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigendecomposition(String),

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:.3e})")]
    FixedPointNotConverged { iterations: usize, residual: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("spectral radius of L is {0:.6}, outside the region where (I - L) is invertible by Neumann series")]
    SpectralRadius(f64),

    #[error("zero receive vector")]
    ZeroReceiver,

    #[error("degenerate projection row: all entries are zero")]
    DegenerateRow,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
