use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no intersection with the horizontal line at height {y}")]
    NoIntersection { y: f64 },

    #[error("map is not orientation preserving at ({x}, {y})")]
    Orientation { x: f64, y: f64 },

    #[error("almost-isometry violated: {0}")]
    CertViolation(String),

    #[error("regime violation: {0}")]
    Regime(String),

    #[error("scaling t = {t} is below the positivity threshold {threshold}")]
    BelowThreshold { t: f64, threshold: f64 },

    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("injectivity failure near |z| = {radius}")]
    Injectivity { radius: f64 },

    #[error("switch pairing failed: {0}")]
    Pairing(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
