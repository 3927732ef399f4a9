use thiserror::Error;
use twocomp_core::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    Config(String),
    #[error("invalid initial density: {0}")]
    InvalidDensity(String),
    #[error("reflection sweep did not restore the cyclic order at step {step} (t = {t}); dt is too large")]
    SweepFailed { step: u64, t: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}
