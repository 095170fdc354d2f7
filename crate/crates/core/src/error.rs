use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero polynomial")]
    ZeroPolynomial,

    #[error("improper transfer function: numerator degree {num_degree} exceeds denominator degree {den_degree}")]
    Improper { num_degree: usize, den_degree: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid agent parameters (agent {agent}): {reason}")]
    InvalidAgent { agent: usize, reason: String },

    /// Reference input outside the aggregate actuator range.
    #[error("infeasible reference in segment {segment}: u_r={u_r} {violated}")]
    Infeasible {
        segment: usize,
        u_r: f64,
        violated: String,
    },

    #[error("operation not defined for {0} controllers")]
    WrongKind(&'static str),

    #[error("unknown preset `{0}` (expected one of asc-cond1, asc-cond2, assc-cond1, integral-cond1)")]
    UnknownPreset(String),
}
