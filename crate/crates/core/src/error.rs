use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("mode index {mode} out of range for {modes} mode(s)")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("pair-coherent eigenvalue undefined: downconversion coupling g vanishes")]
    ZeroCoupling,

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("steady state is not unique: null space has dimension at least {dimension}")]
    DegenerateSteadyState { dimension: usize },

    #[error("steady state requires a time-independent Hamiltonian")]
    TimeDependent,

    #[error("integrator step size underflow at t = {time:.6e} (h = {step:.3e})")]
    StepUnderflow {
        time: f64,
        step: f64,
        /// Last accepted state, row-major.
        last_state: Box<ndarray::Array2<crate::C64>>,
    },

    #[error("outcome in null set (density {density:.3e})")]
    NullOutcome { density: f64 },

    #[error("commutator expectation vanishes ({value:.3e})")]
    VanishingCommutator { value: f64 },

    #[error("unphysical covariance matrix: symplectic eigenvalue {nu:.6} < 1")]
    UnphysicalCovariance { nu: f64 },

    #[error("quadrature grid does not resolve the distribution: integral {integral:.6} deviates from 1")]
    GridResolution { integral: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error at line {line}, column {column}: {message}")]
    ConfigSyntax { line: usize, column: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
