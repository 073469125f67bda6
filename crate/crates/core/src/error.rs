use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit index {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("operator is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid basis label `{0}`")]
    InvalidLabel(String),

    #[error("eigensystem is degenerate or unlabeled")]
    Unlabeled,

    #[error("drive frequency is unresolved (still `auto`)")]
    UnresolvedDrive,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("gap must be positive, got {0}")]
    NonPositiveGap(f64),

    #[error("signed gap must be nonzero")]
    ZeroGap,

    #[error("unsupported qubit count {0}")]
    UnsupportedQubitCount(usize),

    #[error("label has {found} qubits but the gate acts on {expected}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration failed at t = {t:.6e}: {reason}")]
    IntegrationFailed { t: f64, reason: String },

    #[error("expm oracle requires a time-independent Hamiltonian")]
    TimeDependentHamiltonian,

    #[error("no target flip detected within {horizon:.4e} time units")]
    NoFlipDetected { horizon: f64 },

    #[error("empty sweep grid")]
    EmptyGrid,

    #[error("simulation failed at gradient {gradient} T, initial state {state}: {source}")]
    SweepPoint {
        gradient: f64,
        state: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
