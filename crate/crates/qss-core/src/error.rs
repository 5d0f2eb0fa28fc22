//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by scheme construction, analysis and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A requested composite system would exceed the amplitude guard.
    #[error("system of dimension {requested} exceeds the amplitude guard {guard}")]
    DimensionGuard { requested: u128, guard: usize },

    /// A local dimension below 2 or an empty dimension list.
    #[error("invalid system shape: {0}")]
    InvalidShape(String),

    /// Basis label not available for this dimension (composite dimensions
    /// only support the computational and Fourier bases).
    #[error("basis label {t} is not supported for dimension {q}")]
    UnsupportedBasis { q: usize, t: usize },

    /// Operation requires an ideal scheme (secret dimension = share dimension).
    #[error("operation requires an ideal scheme, but secret dimension {kappa} != share dimension {q}")]
    NonIdealScheme { kappa: usize, q: usize },

    /// A subset argument was empty where a non-empty one is required.
    #[error("subset of players must not be empty")]
    EmptySubset,

    /// Share positions out of range, duplicated, or otherwise unusable.
    #[error("invalid share positions: {0}")]
    InvalidPositions(String),

    /// A subset argument referenced players outside the active set.
    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    /// Operator or state dimensions do not line up.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Reed-Solomon construction needs more field elements than available.
    #[error("field of size {q} is too small for {n} evaluation points plus the secret point")]
    FieldTooSmall { q: usize, n: usize },

    /// A prime dimension was required.
    #[error("{q} is not prime")]
    NotPrime { q: usize },

    /// Decoder synthesis was requested for a set that cannot recover the secret.
    #[error("subset {subset:?} is not authorised (erasure residual {residual:.3e})")]
    NotAuthorized { subset: Vec<usize>, residual: f64 },

    /// Exhaustive subset analysis refused: too many players.
    #[error("{n} players exceed the exhaustive-analysis limit of {max}")]
    TooManyPlayers { n: usize, max: usize },

    /// Requested hash output longer than its input.
    #[error("requested output length {out_len} exceeds input length {in_len}")]
    LengthError { out_len: usize, in_len: usize },

    /// Scheme file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    /// A constructed or loaded object violates a type invariant.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// A report was paired with a scheme it does not describe.
    #[error("scheme mismatch: report is for '{expected}', got '{got}'")]
    SchemeMismatch { expected: String, got: String },

    /// Operation is only defined for pure (no discarded shares) schemes.
    #[error("operation '{0}' is only defined for pure schemes")]
    PureSchemeOnly(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
