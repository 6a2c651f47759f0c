use thiserror::Error;

/// Errors raised across the toolkit.
///
/// The CLI maps each variant family onto a process exit code, see
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("graph still disconnected after {attempts} sampling attempts")]
    Disconnected { attempts: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("matrices are not simultaneously diagonalizable (commutator norm {commutator_norm:e})")]
    NotCommuting { commutator_norm: f64 },

    #[error("integration diverged at t = {time}{}", cell.as_ref().map(|c| format!(" ({c})")).unwrap_or_default())]
    Divergence { time: f64, cell: Option<String> },

    #[error("trajectory has no recorded samples")]
    EmptyTrajectory,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn hypothesis(msg: impl Into<String>) -> Self {
        Error::Hypothesis(msg.into())
    }

    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Hypothesis(_) | Error::NotCommuting { .. } => 3,
            Error::Divergence { .. } => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
