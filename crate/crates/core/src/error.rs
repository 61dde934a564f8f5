use thiserror::Error;

/// Errors raised by the numerical modules and the command-line driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("singular configuration: bodies {0} and {1} coincide under a potential unbounded at the origin")]
    SingularConfiguration(usize, usize),
    #[error("potential is not locally integrable against Gaussian states: {0}")]
    NonIntegrable(String),
    #[error("sampling failure: {0}")]
    Sampling(String),
    #[error("split condition fails: 3*omega/4 = {quarter_omega} < eps_U = {eps_u}")]
    SplitCondition { quarter_omega: f64, eps_u: f64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("degenerate Jacobian: {0}")]
    Degenerate(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("operator not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 1 for validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Parameter(_) | Error::Shape(_) | Error::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Parameter(msg()))
    }
}
