use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("steady-state system is singular (pivot ratio {pivot_ratio:.3e}); check decay rates")]
    SingularSystem { pivot_ratio: f64 },

    #[error("finite-difference slope did not converge: h and h/2 estimates differ by {relative:.3e} (relative)")]
    NonConverged { relative: f64 },

    #[error("half-power beamwidth undefined: beam wider than the visible region")]
    HpbwUndefined,

    #[error("spatial grid too coarse: {points_per_wavelength:.1} points per wavelength, need at least {required}")]
    ResolutionTooCoarse {
        points_per_wavelength: f64,
        required: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
