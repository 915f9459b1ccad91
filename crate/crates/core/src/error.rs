use thiserror::Error;

/// A parameter outside its admissible range.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid parameter `{field}` = {value}: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub value: f64,
    pub reason: &'static str,
}

impl ParamError {
    pub fn new(field: &'static str, value: f64, reason: &'static str) -> Self {
        Self { field, value, reason }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("system `{label}` is {found} at this state, expected parabolic")]
    NotParabolic { label: String, found: String },
    #[error("time-derivative coefficient matrix is singular at q = {q}")]
    SingularTimeMatrix { q: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("field layers are inconsistent: {0}")]
    Layout(String),
    #[error("singular 2x2 pivot at grid index {index}; the time step is too large for the frozen coefficients")]
    SingularPivot { index: usize },
    #[error("linear solve residual {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },
    #[error("Picard iteration did not converge in {iterations} iterations (last change {last_change:e})")]
    IterationFailed {
        iterations: usize,
        last_change: f64,
        /// Sup-norm of the last unconverged iterate.
        last_sup: f64,
    },
    #[error("solution blew up: sup-norm {sup:e} exceeds {limit:e}")]
    Diverged { sup: f64, limit: f64 },
    #[error("CFL number {cfl} outside (0, {max}]")]
    Cfl { cfl: f64, max: f64 },
    #[error("non-finite value in the explicit reference solution at t = {t}")]
    NonFinite { t: f64 },
    #[error("log-density range {value:e} exceeds the guard of {limit}")]
    LogOverflow { value: f64, limit: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("μ = 0: the amplification equation degenerates to −4η + 1 = 0 with the single root {root}")]
    DegenerateLeading { root: f64 },
    #[error(transparent)]
    Param(#[from] ParamError),
}
