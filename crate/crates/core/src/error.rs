use thiserror::Error;

/// Errors produced by the algebra, operator and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("letter count mismatch: {left} vs {right}")]
    LetterCount { left: usize, right: usize },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("letter x{letter} out of range for d = {d}")]
    LetterOutOfRange { letter: usize, d: usize },

    #[error("capacity exceeded: {requested} basis words requested, limit is {limit}")]
    Capacity { requested: usize, limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("infeasible: outer spectral radius {radius} exceeds 1")]
    Infeasible { radius: f64 },

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("ambiguous rank decision; borderline singular values {values:?}")]
    RankAmbiguous { values: Vec<f64> },

    #[error("normalization: {0}")]
    Normalization(String),

    #[error("invalid document: {0}")]
    Document(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
