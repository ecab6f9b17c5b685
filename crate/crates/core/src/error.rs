use thiserror::Error;

use crate::fock::ModeLabel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode {0} appears in both operands")]
    ModeOverlap(ModeLabel),
    #[error("output mode {0} is already present in the state")]
    ModeCollision(ModeLabel),
    #[error("duplicate mode {0} in transform")]
    DuplicateMode(ModeLabel),
    #[error("transform matrix is not an isometry (deviation {0:.3e})")]
    NotIsometric(f64),
    #[error("transform matrix has shape {got:?}, expected {expected:?}")]
    ShapeMismatch { got: usize, expected: (usize, usize) },
    #[error("element needs two distinct spatial modes, got {0} twice")]
    SameSpatialMode(u32),
    #[error("{name} = {value} is not a probability in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("negative or NaN branch weight {0}")]
    InvalidWeight(f64),
    #[error("only number-resolving detectors are supported")]
    UnsupportedDetector,
    #[error("detection pattern {0} is not a heralding pattern of the circuit")]
    UnknownPattern(String),
    #[error("no local Pauli correction maps pattern {0} onto the reference output")]
    NoCorrection(String),
    #[error("correction search over {0} spatial modes is too large")]
    SearchTooLarge(usize),
    #[error("invalid tree spec: {0}")]
    InvalidTreeSpec(String),
    #[error("fusion success probability must be positive, got {0}")]
    ZeroSuccessProbability(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects values outside [0, 1] (including NaN).
pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}
