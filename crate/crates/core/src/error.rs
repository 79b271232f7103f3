use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("invalid bipartite split: {0}")]
    InvalidSplit(String),
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("arity mismatch: channel acts on {expected} qubits, got {got} targets")]
    ArityMismatch { expected: usize, got: usize },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("qubits {0} and {1} are not paired")]
    NotPaired(usize, usize),
    #[error("shot aborted: {0}")]
    ShotAborted(String),
    #[error("dense oracle limited to {max} qubits, circuit has {got}")]
    TooManyQubits { max: usize, got: usize },
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
