use crate::problem::Label;

/// Errors produced anywhere in the explanation pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("feature {feature} is categorical; only the l0 norm is defined over categorical features")]
    CategoricalNorm { feature: usize },

    #[error("value {value} of feature {feature} lies outside its domain")]
    DomainViolation { feature: usize, value: f64 },

    #[error("classifier predicts {predicted} for the instance, not {expected}")]
    PredictionMismatch { expected: Label, predicted: Label },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid classification problem: {0}")]
    InvalidProblem(String),

    #[error("invalid feature set: {0}")]
    InvalidFeatureSet(String),

    #[error("schema violation at {location}: {message}")]
    Schema { location: String, message: String },

    #[error("unknown classifier kind `{0}`")]
    UnknownClassifier(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("unsupported by this oracle: {0}")]
    Unsupported(String),

    #[error("candidate enumeration exceeded the cap of {cap} points")]
    CombinatorialLimit { cap: u64 },

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    #[error("oracle call cancelled")]
    Cancelled,

    #[error("oracle answers are not monotone: {0}")]
    OracleInconsistency(String),

    #[error("no explanation exists: the instance is robust within the given distance")]
    NoExplanation,

    #[error("size cap exceeded: {0}")]
    CapExceeded(String),

    #[error("seed engine overflow: more than {cap} blocking constraints")]
    SeedEngineOverflow { cap: usize },

    #[error("family is incomplete; duality can only be checked on exhausted enumerations")]
    IncompleteFamily,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
