use thiserror::Error;
use twocomp_core::expr::ProfileError;
use twocomp_core::ModelError;
use twocomp_particles::SimError;
use twocomp_pde::SolveError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("reading configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("initial profile: {0}")]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("replica {replica} (seed {seed}): {source}")]
    Replica { replica: usize, seed: u64, source: SimError },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("PDE solve: {0}")]
    Solve(#[from] SolveError),
    #[error("epsilon = {epsilon} is below 2 dx = {two_dx}; the kernel is not resolved on the comparison grid")]
    GridMismatch { epsilon: f64, two_dx: f64 },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

pub(crate) fn csv_err(path: &std::path::Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.display().to_string(), source }
}
