use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("accuracy not guaranteed for E_({alpha},{beta})({z}): {reason}")]
    AccuracyNotGuaranteed {
        alpha: f64,
        beta: f64,
        z: f64,
        reason: &'static str,
    },

    #[error("invalid fuzzy number: {0}")]
    InvalidFuzzyNumber(String),

    #[error("level grids differ ({left} vs {right} levels); resample first")]
    GridMismatch { left: usize, right: usize },

    #[error("generalized Hukuhara difference does not exist")]
    GhDiffNotExists,

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("ordering violation at t = {t}: {detail}")]
    OrderingViolation { t: f64, detail: String },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("delay scenario without history")]
    MissingHistory,

    #[error("unsupported matrix: {0}")]
    UnsupportedMatrix(String),

    #[error("eigenbasis is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("matrix is not Hurwitz: Lyapunov solution is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotHurwitz { min_eig: f64 },

    #[error("Lyapunov equation solve failed: {0}")]
    LyapunovSolve(String),

    #[error("small-gain condition fails: gamma12 * gamma21 = {0} >= 1")]
    GainTooLarge(f64),

    #[error("converse construction not applicable: {0}")]
    ConverseNotApplicable(String),

    #[error("exponent a = {0} < 1 requires an explicit override")]
    ExponentBelowOne(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code: 2 for usage/config problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Io(_)
            | Error::Parse(_)
            | Error::InvalidArgument { .. }
            | Error::InvalidFuzzyNumber(_)
            | Error::GridMismatch { .. }
            | Error::MissingHistory
            | Error::ExponentBelowOne(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
