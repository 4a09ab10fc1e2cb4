use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph is disconnected: vertex {0} is unreachable from vertex 0")]
    Disconnected(usize),

    #[error("edge ({u}, {v}) has non-positive weight {weight}")]
    NonPositiveWeight { u: usize, v: usize, weight: f64 },

    #[error("edge ({u}, {v}) weight {weight} is shorter than the Euclidean distance {euclidean} between its endpoints")]
    EdgeShorterThanEuclidean { u: usize, v: usize, weight: f64, euclidean: f64 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid output range: {0}")]
    InvalidRange(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("observation {0} has zero probability")]
    ZeroProbabilityObservation(usize),

    #[error("instance too large for brute force: {0} strategies")]
    InstanceTooLarge(f64),

    #[error("initial range violates constraint: Q^loss {qloss} > theta {theta}")]
    ConstraintViolated { qloss: f64, theta: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
