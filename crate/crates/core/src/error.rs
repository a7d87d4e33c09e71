use std::path::PathBuf;

/// Errors produced by the analytic models, the simulator and the planner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for {len} subcarriers")]
    InvalidIndex { index: usize, len: usize },

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Convergence { estimate: f64, error_bound: f64 },

    #[error("root is not bracketed: f({lo}) = {f_lo:e}, f({hi}) = {f_hi:e}")]
    Bracketing { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("subcarrier {index} infeasible: no spectral efficiency >= {se_min} meets BER {ber_target:e}")]
    InfeasibleLeaf {
        index: usize,
        se_min: f64,
        ber_target: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("look-up table is not monotone at se={se}, loss={loss}: {detail}")]
    Monotonicity { se: f64, loss: f64, detail: String },

    #[error("query out of table range: {0}")]
    OutOfRange(String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("malformed file {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable category, used for process exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) | Error::InvalidIndex { .. } => "invalid-parameter",
            Error::Convergence { .. } | Error::Bracketing { .. } | Error::FitFailure(_) => "numeric",
            Error::Infeasible(_) | Error::InfeasibleLeaf { .. } => "infeasible",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Config(_) => "config",
            Error::Monotonicity { .. } | Error::Consistency(_) | Error::OutOfRange(_) => "consistency",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
