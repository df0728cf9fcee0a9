use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Solution magnitude exceeded the overflow guard.
    #[error("solution diverged at t = {t} (|y| = {magnitude:e})")]
    Divergence { t: f64, magnitude: f64 },

    #[error("no eigenvalue bracket for index {m} within [-{limit}, {limit}]")]
    SearchRange { m: usize, limit: f64 },

    #[error("solver did not converge after {iterations} iterations (max residual {residual:e}): {context}")]
    Convergence {
        iterations: usize,
        residual: f64,
        context: String,
    },

    /// A converged solution violates the nodal structure of the first two eigenfunctions.
    #[error("converged to the wrong branch: {0}")]
    WrongBranch(String),

    #[error("pendulum angle {theta} left (-pi, pi) at t = {t}")]
    PendulumRange { t: f64, theta: f64 },

    #[error("inadmissible solution: {0}")]
    Inadmissible(String),

    #[error("no sign change of the structure gap on [{rmin}, {rmax}]")]
    Bracket { rmin: f64, rmax: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::Divergence { .. }
            | Error::SearchRange { .. }
            | Error::Convergence { .. }
            | Error::Bracket { .. } => 3,
            Error::WrongBranch(_) | Error::PendulumRange { .. } | Error::Inadmissible(_) => 4,
        }
    }
}
