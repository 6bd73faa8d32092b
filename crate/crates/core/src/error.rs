use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh too coarse: |k|·h = {kh:.3} exceeds {limit} (|k| = {k:.3} rad/m, h = {h:.4} m)")]
    ResolutionGuard { k: f64, h: f64, kh: f64, limit: f64 },

    #[error("singular system at {frequency:.6e} Hz (condition estimate {condition:.3e})")]
    SingularSystem { frequency: f64, condition: f64 },

    #[error("operator blocks belong to different frequencies ({0:.6e} vs {1:.6e})")]
    FrequencyMismatch(f64, f64),

    #[error("evaluation point {index} is {distance:.4} m from the surface (needs > {required:.4} m)")]
    PointTooClose { index: usize, distance: f64, required: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("parameter node {node}: {source}")]
    AtNode {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn at_node(node: usize, err: Error) -> Self {
        Error::AtNode {
            node,
            source: Box::new(err),
        }
    }
}
