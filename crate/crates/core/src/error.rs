use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: String,
        found: String,
    },

    #[error("{0} not symmetric")]
    NotSymmetric(String),

    #[error("{0} not positive definite")]
    NotPositiveDefinite(String),

    #[error("{0} not positive semidefinite")]
    NotPositiveSemidefinite(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("{source} (sensor {sensor})")]
    Sensor {
        sensor: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node {node} out of range for a network of {count} nodes")]
    NodeOutOfRange { node: usize, count: usize },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("could not generate a connected geometric graph after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("ADMM diverged at iteration {iteration} on node {node} (rho = {rho})")]
    Divergence {
        rho: f64,
        iteration: usize,
        node: usize,
    },

    #[error("scenario line {line}: {message}")]
    Scenario { line: usize, message: String },

    #[error("run {run}, step {step}{}: {source}", node.map(|n| format!(", node {n}")).unwrap_or_default())]
    Campaign {
        run: usize,
        step: usize,
        node: Option<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(
        context: impl Into<String>,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// Node index carried by the error, if any.
    pub fn node(&self) -> Option<usize> {
        match self {
            Error::Divergence { node, .. } => Some(*node),
            Error::NodeOutOfRange { node, .. } => Some(*node),
            Error::Campaign { node, .. } => *node,
            _ => None,
        }
    }
}
