use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M†| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("integration unstable at t = {time} ps: population {value:e} went negative; try a smaller dt (currently {dt} ps)")]
    IntegrationInstability { time: f64, value: f64, dt: f64 },

    #[error("trace drifted to {trace} at t = {time} ps; reduce dt (currently {dt} ps)")]
    TraceDrift { time: f64, trace: f64, dt: f64 },

    #[error("vibronic space too large: {dim} states (limit {limit}); {detail}")]
    DimensionTooLarge { dim: usize, limit: usize, detail: String },

    #[error("model error at `{path}`: {reason}")]
    Model { path: String, reason: String },

    #[error("every grid point of the landscape is missing")]
    EmptyLandscape,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }

    pub(crate) fn model(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Model { path: path.into(), reason: reason.into() }
    }

    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::IntegrationInstability { .. }
                | Error::TraceDrift { .. }
                | Error::EmptyLandscape
        )
    }
}
