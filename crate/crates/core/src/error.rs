use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("arity mismatch: expected {expected} arguments, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("non-finite value encountered in {0}")]
    Numeric(String),

    #[error("capacity exceeded: {what} = {requested} but the limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("letter {letter} is not in the alphabet (n = {n}, zeta = {has_zeta})")]
    Alphabet { letter: String, n: usize, has_zeta: bool },

    #[error("limit did not stabilize after {steps} steps (last difference {last_difference:e})")]
    Convergence { steps: usize, last_difference: f64 },

    #[error("polynomial is not orthogonally additive (residual {residual:e})")]
    NotRepresentable { residual: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}
