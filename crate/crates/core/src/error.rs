use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("state vector has zero norm")]
    ZeroNorm,

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("unknown state label `{0}`")]
    UnknownLabel(String),

    #[error("label `{0}` needs a dressed frame")]
    MissingFrame(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("noise trace has {got} samples but the schedule has {expected} steps")]
    NoiseTraceLength { expected: usize, got: usize },

    #[error("calibration target not bracketed: T2 ranges over [{low:.4e}, {high:.4e}] s for target {target:.4e} s")]
    NotBracketed { target: f64, low: f64, high: f64 },

    #[error("fit did not converge after {iterations} iterations (chi2 {chi2:.4e})")]
    FitNotConverged { iterations: usize, chi2: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("Fock truncation breached: population {population:.3e} in top level {level} exceeds {limit:.1e} at t = {time:.4e} s")]
    FockTruncation { population: f64, level: usize, limit: f64, time: f64 },

    #[error("comb design error: {0}")]
    CombDesign(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
