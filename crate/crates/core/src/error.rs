use thiserror::Error;

/// Errors raised by the solvers and the domain constructors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inconsistent dimensions or otherwise malformed input.
    #[error("structural error: {0}")]
    Structural(String),

    /// Input that is well-formed but describes a degenerate problem
    /// (constant payoff matrix, vacuous switching costs, ...).
    #[error("degenerate game: {0}")]
    Degenerate(String),

    /// A probability vector that cannot be repaired by clamping.
    #[error("invalid mixed action: {0}")]
    InvalidProbability(String),

    /// An operation was called outside of its domain of validity.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Player 2 has a pure optimal action in the stage game, so every
    /// switching-cost weight leaves the value at `v(0)`.
    #[error("trivial game: column {column} is optimal for Player 2 without switching")]
    TrivialPure { column: usize },

    /// A configured enumeration cap would be exceeded.
    #[error("resource limit: {what} would exceed the cap of {cap}")]
    Resource { what: String, cap: usize },

    /// A numerical procedure failed to certify its answer.
    #[error("solver failure: {message} (best residual {residual:.3e})")]
    SolverFailure { message: String, residual: f64 },

    /// Game or tensor file could not be decoded.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn solver(message: impl Into<String>, residual: f64) -> Self {
        Error::SolverFailure {
            message: message.into(),
            residual,
        }
    }

    pub(crate) fn resource(what: impl Into<String>, cap: usize) -> Self {
        Error::Resource {
            what: what.into(),
            cap,
        }
    }
}
