use thiserror::Error;

/// Failures reported by the solvers, oracles and validators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("operator is singular at zero slope for alpha = {alpha} < 0; use the flux formulation")]
    SingularSlope { alpha: f64 },

    #[error("non-finite value in local quadrature at r = {r}")]
    QuadratureFailure { r: f64 },

    #[error("Picard iteration did not converge after {iterations} iterations (last sup change {sup_change:e})")]
    NoConvergence { iterations: usize, sup_change: f64 },

    #[error("solution vanishes at a critical point")]
    ZeroValueAtCritical,

    #[error("flux |v| = {v:e} is inside the critical handoff band at r = {r}")]
    CriticalProximity { r: f64, v: f64 },

    #[error("step size underflow at r = {r} (h = {h:e})")]
    StepFailure { r: f64, h: f64 },

    #[error("segment junction mismatch {mismatch:e} at r = {r} exceeds tolerance {tol:e}")]
    StitchMismatch { r: f64, mismatch: f64, tol: f64 },

    #[error("found {found} of {wanted} zeros before the radius cap {r_max}")]
    OscillationTimeout { r_max: f64, found: usize, wanted: usize },

    #[error("eigenvalue index {k} outside 1..={max}")]
    IndexOutOfRange { k: usize, max: usize },

    #[error("no sign change of the shooting residual in [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("policy iteration revisited a previous policy without converging")]
    PolicyCycleDetected,

    #[error("{method} did not converge: {detail}")]
    NonConvergence { method: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
