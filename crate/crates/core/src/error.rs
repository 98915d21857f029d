use thiserror::Error;

/// Errors produced by the numerics in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// Invalid estimator or solver configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An iterative procedure failed to bracket or converge.
    #[error("convergence failure in {what}: {detail}")]
    Convergence { what: &'static str, detail: String },

    /// The PDE iteration left the admissible range.
    #[error("solver instability at t={t}: value {value} at r={r}")]
    Instability { t: f64, r: f64, value: f64 },

    /// A least-squares fit had too few usable points.
    #[error("degenerate regression: {0}")]
    Degenerate(String),

    /// The potential does not belong to the class an experiment requires.
    #[error("potential is not in class {0}")]
    NotInClass(String),

    /// Malformed key-value configuration text.
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
