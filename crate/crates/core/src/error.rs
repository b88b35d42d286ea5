use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("prior log-density curvature diverges near θ = {theta}")]
    UnboundedCurvature { theta: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureDivergence(String),

    #[error("degenerate response g = {g} at θ = {theta}; Fisher information undefined")]
    DegenerateResponse { theta: f64, g: f64 },

    #[error("curve grid [{grid_lo}, {grid_hi}] does not cover prior support [{lo}, {hi}]")]
    SupportMismatch {
        grid_lo: f64,
        grid_hi: f64,
        lo: f64,
        hi: f64,
    },

    #[error("covariance is not positive definite for N = {n}, ρ = {rho}")]
    SingularCovariance { n: usize, rho: f64 },

    #[error("boundary value problem did not converge: {0}")]
    NoConvergence(String),

    #[error("stationary point is not a maximum: perturbation raised the objective from {base} to {perturbed}")]
    NotAMaximum { base: f64, perturbed: f64 },

    #[error("noise spectrum underflows on every frequency carrying signal energy")]
    SpectrumUnderflow,

    #[error("search space has {size} points, limit is {limit}")]
    TooLarge { size: f64, limit: f64 },

    #[error("quantizer level count must be at least 2, got {0}")]
    InvalidLevels(u32),

    #[error("candidate {index} uses {bits} bits, budget is {budget}")]
    InfeasibleCandidate {
        index: usize,
        bits: u64,
        budget: u64,
    },

    #[error("configuration domain mismatch: {0}")]
    ConfigDomainMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnboundedCurvature { .. }
                | Error::QuadratureDivergence(_)
                | Error::DegenerateResponse { .. }
                | Error::NoConvergence(_)
                | Error::NotAMaximum { .. }
                | Error::SpectrumUnderflow
                | Error::SingularCovariance { .. }
        )
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
