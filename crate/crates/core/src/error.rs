use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The sensitivity diverges because of the named parameter.
    #[error("divergent sensitivity: parameter `{parameter}` = {value} makes the phase sensitivity diverge")]
    Divergent { parameter: &'static str, value: f64 },

    /// The closed-form expressions do not cover this configuration; use the engine path.
    #[error("closed form not valid: {0}; use the Gaussian engine instead")]
    OutOfValidity(String),

    #[error("undefined sensitivity: signal slope {slope:e} is degenerate")]
    UndefinedSensitivity { slope: f64 },

    #[error("precision error: {0}")]
    Precision(String),

    /// Truncated Fock space too small for the requested state.
    #[error("cutoff {cutoff} too small: {detail}")]
    CutoffTooSmall { cutoff: usize, detail: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code of the command-line tool: 2 for configuration
    /// problems, 3 for everything raised by the computation.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub(crate) fn check_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn check_unit_interval(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in [0, 1], got {value}")))
    }
}
