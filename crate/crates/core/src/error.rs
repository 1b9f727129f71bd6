use thiserror::Error;

use crate::expr::{EvalError, ParseError};

/// Errors produced by the library. Each display string starts with a stable
/// kebab-case tag so the CLI and FFI layers can report them verbatim.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid-too-coarse: {0}")]
    GridTooCoarse(String),

    #[error("invalid-grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported-order: {0}")]
    UnsupportedOrder(String),

    #[error("shape-mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite-sample: {what} at node {node} (t = {t})")]
    NonFiniteSample { what: String, node: usize, t: f64 },

    #[error("syntax-error: {0}")]
    Parse(#[from] ParseError),

    #[error("evaluation-error: {0}")]
    Eval(#[from] EvalError),

    #[error("integration-blowup: non-finite state at node {node}")]
    IntegrationBlowup { node: usize },

    #[error("anchor-off-grid: t0 = {0} is not a grid node")]
    AnchorOffGrid(f64),

    #[error("order-out-of-range: derivative order {order} exceeds {max}")]
    OrderOutOfRange { order: usize, max: usize },

    #[error("point-out-of-range: tau = {tau} outside [{a}, {b}]")]
    PointOutOfRange { tau: f64, a: f64, b: f64 },

    #[error("condition-0-fails: the limit problem is not uniquely solvable")]
    Condition0Fails,

    #[error("schema: {field}: {reason}")]
    Schema { field: String, reason: String },

    #[error("boundary-row-count: expected rm = {expected}, found {found}")]
    BoundaryRowCount { expected: usize, found: usize },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by malformed input rather than numerics.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::IntegrationBlowup { .. } | Error::Condition0Fails | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
