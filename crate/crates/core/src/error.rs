use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("promise violation: {0}")]
    PromiseViolation(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("qubit index {index} out of range for a {qubits}-qubit register")]
    IndexOutOfRange { index: usize, qubits: usize },

    #[error("register is not in a basis state on qubit {0}")]
    NotBasisState(usize),

    #[error("algorithm emitted {emitted} outputs, expected {expected}")]
    OutputCountMismatch { emitted: usize, expected: usize },

    #[error("algorithm broke the step contract: {0}")]
    ProtocolViolation(String),

    #[error("malformed table: {0}")]
    MalformedTable(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("branch limit of {0} exceeded")]
    BranchLimitExceeded(u64),

    #[error("search space too large: {0}")]
    SpaceTooLarge(String),

    #[error("choice replay failed: {0}")]
    Replay(String),
}
