use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("weight vector has length {got}, graph has {expected} edges")]
    WeightLength { expected: usize, got: usize },
    #[error("edge {0} has negative weight {1}")]
    NegativeWeight(usize, f64),
    #[error("null-space basis is rank deficient (rank {0} < 6): configuration is collinear")]
    CollinearConfiguration(usize),
    #[error("agent {agent} has no packet from neighbor {neighbor}")]
    MissingNeighborPacket { agent: usize, neighbor: usize },
    #[error("agent {0} is an anchor this tick but received no relative-position payload")]
    StaleSpecialMeasurement(usize),
    #[error("estimators are still warming up")]
    EstimatorNotReady,
    #[error("scenario rejected: {0}")]
    ScenarioRejected(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
