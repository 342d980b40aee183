use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function (negative speed,
    /// point outside the rectangle, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A constructor rejected its parameters.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An operation produced or received data breaking a contract
    /// (negative diffusivity, non-finite values).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged {
        iterations: usize,
        residual: f64,
        residual_history: Vec<f64>,
    },

    #[error("{what} did not converge: {detail}")]
    NonConvergence {
        what: &'static str,
        detail: String,
        history: Vec<f64>,
    },

    #[error("time step {index} (t = {t:.6e}) failed: {source}")]
    Step {
        index: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("ladder member eps = {epsilon:.6e} failed: {source}")]
    Ladder {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Residual history attached to convergence failures, if any.
    pub fn residual_history(&self) -> Option<&[f64]> {
        match self {
            Error::SolverDiverged {
                residual_history, ..
            } => Some(residual_history),
            Error::NonConvergence { history, .. } => Some(history),
            Error::Step { source, .. } | Error::Ladder { source, .. } => source.residual_history(),
            _ => None,
        }
    }

    /// True for numerical failures, false for bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SolverDiverged { .. } | Error::NonConvergence { .. } | Error::Contract(_) => true,
            Error::Step { source, .. } | Error::Ladder { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
