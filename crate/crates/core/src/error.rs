use thiserror::Error;

/// Errors raised by the kinematics, dynamics, simulation and servo layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcmError {
    /// A parameter or configuration value violates its invariant.
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The ZYX Euler-rate map is singular (pitch at +-pi/2).
    #[error("Euler-rate map is singular at pitch {pitch} rad")]
    GimbalLock { pitch: f64 },

    /// The generalized mass matrix is numerically singular.
    #[error("mass matrix near-singular (condition estimate {condition:.3e})")]
    SingularDynamics { condition: f64 },

    /// The integrator produced a non-finite state.
    #[error("integration blew up at t = {time} s (step {step})")]
    Blowup { time: f64, step: usize },

    /// A tracked feature left the image or passed behind the camera.
    #[error("feature {index} lost at t = {time} s: {reason}")]
    FeatureLoss { index: usize, time: f64, reason: String },

    /// Vector or matrix sizes do not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Two traces cannot be compared sample-by-sample.
    #[error("misaligned traces: {0}")]
    Misaligned(String),

    #[error("unknown scenario `{name}`; valid names: {valid}")]
    UnknownScenario { name: String, valid: String },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl AcmError {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        AcmError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for AcmError {
    fn from(e: std::io::Error) -> Self {
        AcmError::Io(e.to_string())
    }
}

impl From<csv::Error> for AcmError {
    fn from(e: csv::Error) -> Self {
        AcmError::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for AcmError {
    fn from(e: serde_json::Error) -> Self {
        AcmError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, AcmError>;
