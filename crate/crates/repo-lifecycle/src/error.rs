use chrono::{DateTime, Utc};
use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are grouped by how an operator should react: data problems
/// (bad files, series that cannot be fitted), math-domain problems, and
/// network problems. The CLI maps these onto exit-code classes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("series too short: need at least {needed} months, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("{0}")]
    Domain(String),

    #[error("normalization undefined, alpha <= 0 (q <= p)")]
    NormalizationUndefined,

    #[error("engagement fit is invalid (p <= 0, q <= 0, or no admissible lifetime root)")]
    InvalidFit,

    #[error(
        "non-finite state at integration step {step} (gamma={gamma}, lambda={lambda}, phi={phi})"
    )]
    NonFiniteState {
        step: usize,
        gamma: f64,
        lambda: f64,
        phi: f64,
    },

    #[error("calibration failed: no start point produced a finite objective")]
    CalibrationFailed,

    #[error("zero developer-months: cannot form the growth-per-developer ratio")]
    ZeroDevMonths,

    #[error("authentication failed for {repo}: {hint}")]
    AuthFailed { repo: String, hint: String },

    #[error("repository not found: {repo}")]
    RepoNotFound { repo: String },

    #[error("rate limited fetching {repo}; retries exhausted, limit resets at {reset}")]
    RateLimited { repo: String, reset: DateTime<Utc> },

    #[error("http error fetching {url}: {message}")]
    Http { url: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Exit-code class for the CLI: 2 for data/fit errors, 3 for network errors.
    pub fn exit_class(&self) -> i32 {
        match self {
            Error::AuthFailed { .. }
            | Error::RepoNotFound { .. }
            | Error::RateLimited { .. }
            | Error::Http { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
