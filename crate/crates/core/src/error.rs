use alloc::string::String;
use alloc::vec::Vec;

use crate::tableaux::Violation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid tableau: {0:?}")]
    InvalidTableau(Vec<Violation>),

    #[error("unknown method `{name}`; available: {available}")]
    UnknownMethod { name: String, available: String },

    #[error("order conditions above order 3 are not encoded (requested {0})")]
    UnsupportedOrder(u32),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {found} values but the grid is {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular shifted solve: |1 - alpha*sigma| = {0:e} at some mode")]
    SingularSolve(f64),

    #[error("auxiliary-variable radicand is not positive ({0:e}); increase C")]
    NonPositiveRadicand(f64),

    #[error("stage {stage}: scalar elimination is singular (pivot {pivot:e})")]
    SingularStage { stage: usize, pivot: f64 },

    #[error("scheme is not linearly implicit in stage order: {0}")]
    NotStageSolvable(String),

    #[error("stage {stage}: residual {residual:e} exceeds tolerance {tolerance:e}")]
    StageResidual {
        stage: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("non-finite value produced at stage {0}")]
    NonFinite(usize),

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("observer aborted at step {step}: {message}")]
    Observer { step: usize, message: String },
}
