use thiserror::Error;
use twocomp_core::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("at t = {t}: {source}")]
    Model {
        t: f64,
        #[source]
        source: ModelError,
    },
    #[error("explicit step dt = {dt} exceeds the stability limit {limit} at t = {t}")]
    Unstable { dt: f64, limit: f64, t: f64 },
    #[error("solution blew up at t = {t} (value {value})")]
    BlowUp { t: f64, value: f64 },
    #[error("linear system singular at t = {t}")]
    Singular { t: f64 },
}

impl SolveError {
    pub(crate) fn model(t: f64) -> impl Fn(ModelError) -> SolveError {
        move |source| SolveError::Model { t, source }
    }
}
