use alloc::string::String;

use crate::numerics::Shape;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    Shape {
        op: &'static str,
        lhs: Shape,
        rhs: Shape,
    },
    #[error("backward needs a scalar loss, got shape {0}")]
    NotScalar(Shape),
    #[error("tape already consumed by a backward pass")]
    TapeConsumed,
    #[error("empty audio input")]
    EmptyAudio,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("utterance has no segment embeddings")]
    EmptyUtterance,
    #[error("embedder mode mismatch: {0}")]
    ModeMismatch(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dim { expected: usize, found: usize },
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("dialogue has no utterances")]
    EmptyDialogue,
}
