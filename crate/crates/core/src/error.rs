use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {what} = {value}")]
    InvalidDimension { what: &'static str, value: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sparsity {k} exceeds dimension {n}")]
    SparsityExceedsDim { k: usize, n: usize },
    #[error("empty vector")]
    EmptyVector,
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("enumeration needs {cost} inner solves, budget is {budget}")]
    BudgetExceeded { cost: u128, budget: u128 },
    #[error("operation requires a Bernoulli ensemble")]
    NotBernoulli,
    #[error("need at least {min} {what}, got {found}")]
    TooFew { what: &'static str, min: usize, found: usize },
    #[error("invalid sign entry {0}; expected +1 or -1")]
    InvalidSign(i8),
    #[error("reference vector is zero")]
    ZeroReference,
    #[error("invalid signal: {0}")]
    InvalidSignal(&'static str),
}
