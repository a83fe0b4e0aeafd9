use thiserror::Error;

/// Errors raised by the flux models, solvers and verifier.
#[derive(Debug, Error)]
pub enum Error {
    #[error("density {value} outside [0, {max}]")]
    Domain { value: f64, max: f64 },

    #[error("flux level {level} outside [0, {max}]")]
    Level { level: f64, max: f64 },

    #[error("invalid flux: {0}")]
    InvalidFlux(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time step {dt} exceeds CFL bound {max}")]
    Cfl { dt: f64, max: f64 },

    #[error("time must be positive, got {0}")]
    Time(f64),

    #[error("slope {slope} at x = {x} leaves the Lipschitz class [0, {max}]")]
    SlopeOutOfClass { x: f64, slope: f64, max: f64 },

    #[error("invariant domain violated: density {value} in cell {cell}")]
    InvariantDomain { cell: usize, value: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("external semi-group protocol error: {0}")]
    Protocol(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than by a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::Level { .. }
                | Error::InvalidFlux(_)
                | Error::InvalidGrid(_)
                | Error::Config { .. }
                | Error::Json(_)
                | Error::Time(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
