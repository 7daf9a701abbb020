use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is not mean-zero: mean {mean:e}, max norm {norm:e}")]
    NotMeanZero { mean: f64, norm: f64 },

    #[error("input has content {content:e} on the null space of the wide Laplacian (max norm {norm:e})")]
    NotInRange { content: f64, norm: f64 },

    #[error("degenerate geometry: {0}")]
    GeometryDegenerate(String),

    #[error("no sign change on segment at node {node:?}, axis {axis}")]
    RootNotBracketed { node: [usize; 2], axis: usize },

    #[error("tangential derivative of the force density is not available")]
    MissingTangentialDerivative,

    #[error("node {node:?} changes side more than once in [{t0}, {t1}]")]
    MultipleCrossings { node: [usize; 2], t0: f64, t1: f64 },

    #[error("missing jump data: {0}")]
    MissingJumps(String),

    #[error("solution diverged at step {step}: max norm {norm:e}")]
    Diverged { step: usize, norm: f64 },

    #[error("manufactured case `{case}` failed validation: {reason}")]
    ConstructionInvalid { case: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips step context, returning the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }
}
