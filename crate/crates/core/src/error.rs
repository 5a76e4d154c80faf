use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid of {got} points is too small for band limit {k_max} (need at least {need})")]
    GridTooSmall { got: usize, need: usize, k_max: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("field band limit {field} violates flow requirement: {reason}")]
    BandLimit { field: usize, reason: String },
    #[error("blowup at t = {time}: monitored norm {norm} exceeds {bound}")]
    Blowup { time: f64, norm: f64, bound: f64 },
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    #[error("resolution guard: {0}")]
    Resolution(String),
    #[error("eigen-solver failure: {0}")]
    Eigen(String),
    #[error("ground state not positive on the grid (min {min})")]
    GroundStateNotPositive { min: f64 },
    #[error("Newton refinement diverged (residual {residual})")]
    NewtonDivergence { residual: f64 },
    #[error("inverse residual {residual} above tolerance {tol}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("P0(V) = {0} is not positive")]
    NonPositiveMean(f64),
    #[error("contraction failure at iteration {iteration}: update grew from {previous} to {current}")]
    ContractionFailure { iteration: usize, previous: f64, current: f64 },
    #[error("quadrature self-convergence failed: refinement changed the result by {difference}")]
    QuadratureTooCoarse { difference: f64 },
    #[error("directional limits of sigma4 disagree at {point:?}: spread {spread}")]
    LimitDisagreement { point: [i64; 4], spread: f64 },
    #[error("flow {0} has no associated Hamiltonian")]
    NoHamiltonian(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }
}
