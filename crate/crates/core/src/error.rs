use thiserror::Error;

use crate::samplers::SampleTrace;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported smoothness s = {0} (supported: 1, 2, 3)")]
    UnsupportedSmoothness(u32),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("degenerate measure: no accepted draw after {attempts} proposals")]
    DegenerateMeasure { attempts: u64 },

    #[error("non-positive pivot d = {0:e}")]
    NonPositivePivot(f64),

    #[error("rank exhausted after {selected} of {requested} nodes")]
    RankExhausted { selected: usize, requested: usize },

    #[error("acceptance stalled after {proposals} proposals ({} nodes selected)", partial.nodes.len())]
    AcceptanceStalled { proposals: u64, partial: Box<SampleTrace> },

    #[error("invalid envelope: alpha = {alpha:e} below observed residual ratio {ratio:e}")]
    InvalidEnvelope { alpha: f64, ratio: f64 },

    #[error("singular Gram matrix after regularization")]
    SingularGram,

    #[error("volume sampling initialization failed after {attempts} attempts")]
    DegenerateInitialization { attempts: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
