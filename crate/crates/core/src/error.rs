use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("negative density ({rho1}, {rho2})")]
    NegativeDensity { rho1: f64, rho2: f64 },
    #[error("degenerate denominator: lambda + rho1/sigma1^2 + rho2/sigma2^2 = {0}")]
    DegenerateDenominator(f64),
    #[error("two-color matrix undefined at total density {0}")]
    ZeroTotalDensity(f64),
    #[error("singular Maxwell-Stefan system: f(u1, u2) = {0}")]
    SingularSystem(f64),
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
}
