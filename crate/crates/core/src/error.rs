use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the region where the quantity is defined (non-finite
    /// values, non-positive radius, angle outside a profile's domain).
    #[error("domain error: {0}")]
    Domain(String),

    /// The norm fails strong convexity at the point of evaluation.
    #[error("convexity lost: margin {margin:e} at t = {t}")]
    Convexity { t: f64, margin: f64 },

    /// A denominator vanished (spray vector field, s-parameter, or λ).
    #[error("singularity: {0}")]
    Singularity(String),

    /// Parameters violate a documented admissibility constraint.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name}: non-finite input")))
    }
}
