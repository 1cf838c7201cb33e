use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("invalid boundary point: {0}")]
    InvalidPoint(String),

    #[error("invalid metric spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration of {requested} elements exceeds the cap of {cap}")]
    EnumerationCap { requested: u128, cap: u128 },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("depth {got} is too shallow, at least {needed} is required")]
    InsufficientDepth { needed: usize, got: usize },

    #[error("cylinders {0} and {1} are not separated")]
    NotSeparated(String, String),

    #[error("coincident boundary points in cross-ratio")]
    CoincidentPoints,

    #[error("cover check failed: {uncovered} cells uncovered")]
    CoverFailure { uncovered: usize },

    #[error("square root of {0} is not representable in the exact scalar field")]
    InexactSqrt(String),

    #[error("scalar conversion failed for {0}")]
    Conversion(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
