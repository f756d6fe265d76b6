use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Symbolic expansion would exceed the configured truncation or word-count caps.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A flow map or solver produced a non-finite value or failed to converge.
    /// `state` is the last accepted state.
    #[error("numerical failure: {msg} (last state {state:?})")]
    NumericalFailure { msg: String, state: Vec<f64> },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("sampler failure: {0}")]
    SamplerFailure(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{aborted} of {paths} paths aborted (limit {limit_pct}%)")]
    ExcessiveAborts {
        aborted: usize,
        paths: usize,
        limit_pct: f64,
    },

    #[error("no reference value available: {0}")]
    ReferenceUnavailable(String),
}

impl Error {
    pub(crate) fn numerical(msg: impl Into<String>, state: &[f64]) -> Self {
        Error::NumericalFailure {
            msg: msg.into(),
            state: state.to_vec(),
        }
    }
}

pub(crate) fn numerical(msg: impl Into<String>, state: &[f64]) -> Error {
    Error::numerical(msg, state)
}
