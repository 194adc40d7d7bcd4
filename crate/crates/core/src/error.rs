use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter {
        field: &'static str,
        reason: &'static str,
    },
    #[error("adiabatic cavity field undefined: Δpc and κ are both zero")]
    SingularCavity,
    #[error("Lyapunov potential requires a lossless cavity (κ = 0)")]
    LossyCavity,
    #[error("state has {got} groups, parameters have {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step size underflow at τ = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-finite state at τ = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {steps} exhausted at τ = {t}")]
    TooManySteps { t: f64, steps: usize },
    #[error(
        "Newton iteration did not converge: residual {residual:e} after {iterations} iterations"
    )]
    NoConvergence {
        residual: f64,
        iterations: usize,
        last: Vec<f64>,
    },
    #[error("{0}")]
    Unsupported(&'static str),
}
