use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to
/// point at the offending input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("triangle inequality violated at ({i}, {j}, {k}): d(i,k) = {dik} > d(i,j) + d(j,k) = {sum}")]
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        dik: f64,
        sum: f64,
    },

    #[error("index {index} out of range for {len} points")]
    Index { index: usize, len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("graph is disconnected: {} components", components.len())]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("sampling too sparse: {0}")]
    Sampling(String),

    #[error("schema error at `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Param {
        name,
        reason: reason.into(),
    }
}
