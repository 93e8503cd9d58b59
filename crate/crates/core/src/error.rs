use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("inadmissible triple (n={n}, p={p}, k={k}): {reason}")]
    InadmissibleTriple {
        n: u32,
        p: u32,
        k: u32,
        reason: &'static str,
    },

    #[error("degenerate cone angle: p*lambda^2 <= n")]
    DegenerateAngle,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("orbit left the bounded region at t = {t} (|state| = {norm})")]
    Divergence { t: f64, norm: f64 },

    #[error("step budget of {0} exhausted")]
    MaxStepsExceeded(usize),

    #[error("orbit is not oscillating: found {found} of {wanted} crossings")]
    NotOscillating { found: usize, wanted: usize },

    #[error("curve is not a graph over r (sample {index})")]
    NotAGraph { index: usize },

    #[error("operation requires a Type I triple")]
    WrongType,

    #[error("monotonicity violation: {0}")]
    MonotonicityViolation(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
