use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("flux violates the wall condition: |qy| = {value:e} on row {row}")]
    WallCondition { row: usize, value: f64 },
    #[error("right-hand side has nonzero mean {mean:e} (tolerance {tol:e})")]
    NonZeroMean { mean: f64, tol: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("structural assumption violated: {0}")]
    Assumption(String),
    #[error("singular banded system (pivot {pivot} at row {row})")]
    SingularBand { row: usize, pivot: f64 },
    #[error("non-finite value detected at step {step}")]
    NonFinite { step: u64 },
    #[error("time step {dt:e} exceeds the stability ceiling {ceiling:e}")]
    StepTooLarge { dt: f64, ceiling: f64 },
    #[error("step {step} at t = {t}: {source}")]
    AtStep {
        step: u64,
        t: f64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("Newton solver hit {iterations} iterations, last residual {residual:e}")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("singular Jacobian in the stationary solve")]
    SingularJacobian,
    #[error("decay fit: {0}")]
    Fit(String),
}
