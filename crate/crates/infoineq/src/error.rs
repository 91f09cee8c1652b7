use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),

    #[error("parameter {value} outside the open domain ({lo}, {hi}) in coordinate {coord}")]
    ThetaOutOfDomain { coord: usize, value: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge: error estimate {error_estimate:.3e} after {subdivisions} subdivisions")]
    QuadratureNonConvergence { error_estimate: f64, subdivisions: usize },

    #[error("NaN encountered while evaluating {0}")]
    NanEncountered(String),

    #[error("summation did not reach the tail-mass cutoff within {0} terms")]
    SummationTruncation(usize),

    #[error("divergent second moment: tail contribution {0:.3e} still growing at truncation")]
    DivergentMoment(f64),

    #[error("derivative: {0}")]
    Derivative(String),

    #[error("duplicate nodes at positions {0} and {1}")]
    DuplicateNodes(usize, usize),

    #[error("coincident coordinate values in divided-difference nodes (coordinate {0})")]
    CoincidentCoordinate(usize),

    #[error("matrix is not positive definite (failing pivot {pivot}, value {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix dimension {0} exceeds the supported maximum {1}")]
    DimensionTooLarge(usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("score covariance singular at order {order}")]
    SingularScoreCovariance { order: usize },

    #[error("support containment violated: node {node_index} has escort mass outside supp f(theta^0)")]
    SupportViolation { node_index: usize },

    #[error("no feasible node placement inside the parameter domain")]
    NoFeasibleNodes,

    #[error("no valid escort: {0}")]
    NoValidEscort(String),

    #[error("non-vanishing boundary term x0*g(x0) at x0 = {x0}: |x*f(x)| = {value:.3e}")]
    NonVanishingBoundary { x0: f64, value: f64 },

    #[error("normalizer solve failed: {0}")]
    PhiSolveFailed(String),

    #[error("missing closed form: {0}")]
    MissingClosedForm(String),

    #[error("no sampler wired for '{0}'")]
    NoSamplerWired(String),

    #[error("statistic '{0}' has no target functional")]
    MissingTarget(String),

    #[error("zero variance on one side of the equality-condition correlation")]
    ZeroVariance,

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
