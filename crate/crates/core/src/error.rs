use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integer overflow in tom Dieck ring arithmetic")]
    RingOverflow,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate spectrum: eigenvalue {eigenvalue} lies within {tol:e} of {target}")]
    Degenerate {
        eigenvalue: f64,
        target: f64,
        tol: f64,
    },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNonConvergence { sweeps: usize, off_norm: f64 },

    #[error("eigenpair residual {residual:e} exceeds bound {bound:e}")]
    EigenResidual { residual: f64, bound: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("index at infinity unavailable: {0}")]
    MissingIndex(String),

    #[error("non-isolated resonance for k = {k} near lambda in [{lo}, {hi}]")]
    Tangency { k: u32, lo: f64, hi: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular augmented Jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },
}
