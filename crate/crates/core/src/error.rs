use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invariant factors do not form a divisibility chain: {0} does not divide {1}")]
    NonDivisibleChain(String, String),
    #[error("invariant factor {0} is smaller than 2")]
    InvalidFactor(String),
    #[error("group of order {order} exceeds the enumeration cap {cap}")]
    GroupTooLarge { order: String, cap: u64 },
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("value {value} outside the range {range}")]
    OutOfRange { value: i64, range: String },
    #[error("subset has {got} elements, expected {expected}")]
    WrongCardinality { got: usize, expected: usize },
    #[error("sampler produced a singular selection after {attempts} attempts")]
    NumericalDegeneracy { attempts: u32 },
    #[error("enumeration needs {needed} steps, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("pair-convolution mass vanishes on the support of the type")]
    ZeroMu,
    #[error("point lies on the boundary of the simplex")]
    BoundaryPoint,
    #[error("perturbation sup-norm {norm} exceeds the window radius {radius}")]
    OutOfWindow { norm: f64, radius: f64 },
    #[error("element does not belong to the group: {0}")]
    NotAnElement(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
