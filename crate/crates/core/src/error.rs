use thiserror::Error;

/// Errors raised by the numerical kernels and the bound pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("adaptive quadrature exceeded depth {max_depth} on [{lo}, {hi}]")]
    DepthExceeded { lo: f64, hi: f64, max_depth: usize },

    #[error("root is not bracketed: g({lo}) = {g_lo}, g({hi}) = {g_hi}")]
    NoBracket {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("argument outside the function domain: {0}")]
    DomainError(String),

    #[error("no sign change of g below {limit:e}; inputs are inconsistent")]
    BracketOverflow { limit: f64 },

    #[error("degenerate bound: {0}")]
    DegenerateBound(String),

    #[error("no feasible point in the search grid")]
    NoFeasiblePoint,

    #[error("cumulative profile integral {got} does not match ln(1 + a^2 Q1) = {expected}")]
    ProfileMismatch { got: f64, expected: f64 },

    #[error("relay denominator collapsed to {value:e} at step {step}")]
    DenominatorCollapse { step: usize, value: f64 },

    #[error("matrix is not numerically positive definite (pivot {pivot} = {value:e})")]
    FactorizationFailure { pivot: usize, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
