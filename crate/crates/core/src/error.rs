use thiserror::Error;

/// Errors produced by the numerics in this crate.
///
/// Variants split into two families: bad inputs (the caller asked for
/// something outside an operation's domain) and numeric diagnostics (an
/// iteration did not converge or a matrix lost a property it must have).
/// The CLI maps the first family to a usage/config exit code and the second
/// to the numeric-failure exit code.
#[derive(Debug, Error)]
pub enum HoroError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular time change: 1 - e^(-s) r t = {denominator:e}")]
    SingularTime { denominator: f64 },

    #[error("reduction did not terminate after {iterations} steps (cosh distance {cosh_dist:e})")]
    ReductionStalled { iterations: usize, cosh_dist: f64 },

    #[error("power iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("could not bracket pressure root: P(lo={lo}) = {p_lo}, P(hi={hi}) = {p_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        p_lo: f64,
        p_hi: f64,
    },

    #[error("argument {0} lies outside the sampled gradient range of the pressure curve")]
    OutOfDomain(String),

    #[error("hessian of the pressure at 0 is not positive definite (det {det:e})")]
    NotPositiveDefinite { det: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("subgroups are not commensurable (index {0})")]
    InfiniteIndex(String),

    #[error("enumeration would visit more than {limit} words")]
    TooManyWords { limit: u64 },

    #[error("word too short: need {needed} symbols, got {got}")]
    WordTooShort { needed: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HoroError {
    /// True for numeric diagnostics, false for input/config problems.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            HoroError::SingularTime { .. }
                | HoroError::ReductionStalled { .. }
                | HoroError::NoConvergence { .. }
                | HoroError::Bracket { .. }
                | HoroError::NotPositiveDefinite { .. }
                | HoroError::InfiniteIndex(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, HoroError>;
