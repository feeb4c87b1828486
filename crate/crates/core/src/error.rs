use thiserror::Error;

/// Errors raised anywhere in the grading stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SrclError {
    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },
    #[error("dictionary needs at least 2 atoms, found {0}")]
    EmptyDictionary(usize),
    #[error("non-finite value in {0}")]
    NonFiniteData(&'static str),
    #[error("feature vector must not be empty")]
    EmptyVector,
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("histogram entry {index} is negative ({value})")]
    NegativeHistogramEntry { index: usize, value: f64 },
    #[error("LARS active set became rank deficient at step {step}")]
    NumericalBreakdown { step: usize },
    #[error("linear system is singular")]
    SingularSystem,
    #[error("inner solver did not converge within {0} iterations")]
    MaxInnerIterationsExceeded(usize),
    #[error("gamma must be nonnegative, got {0}")]
    NegativeGamma(f64),
    #[error("lambda must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("invalid group partition: {0}")]
    InvalidPartition(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),
    #[error("weights are degenerate (sum {0:e})")]
    DegenerateWeights(f64),
    #[error("method {method} requires {what}")]
    MissingRequirement {
        method: &'static str,
        what: &'static str,
    },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("image {height}x{width} is smaller than patch size {patch}")]
    ImageSmallerThanPatch {
        height: usize,
        width: usize,
        patch: usize,
    },
    #[error("need at least {needed} distinct patches for the codebook, found {found}")]
    TooFewPatches { needed: usize, found: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("metric needs at least {0} samples")]
    Empty(usize),
    #[error("vector has zero variance")]
    ConstantVector,
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: u64,
        column: usize,
        message: String,
    },
    #[error("grade column `{0}` is missing")]
    GradeMissing(String),
    #[error("dimension {0} is not a perfect square")]
    BadDimension(usize),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SrclError {
    fn from(err: std::io::Error) -> Self {
        SrclError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SrclError>;
