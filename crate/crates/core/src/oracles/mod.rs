//! Independent reference computations used to check the shooting solver.

use serde::{Deserialize, Serialize};

pub mod bessel;
pub mod energy;
pub mod fd_pucci;
pub mod rayleigh;

pub use bessel::{bessel_j, bessel_mu, bessel_zeros};
pub use energy::{energy, pseudo_plap_spacing};
pub use fd_pucci::{fd_pucci_mu1, FdResult};
pub use rayleigh::{parabola_bound, rayleigh_lambda_eq, RadialDomain, RayleighResult};

/// A reference value with the method that produced it and, when known, a
/// bound on its error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub method: String,
    pub certified_error: Option<f64>,
}

impl OracleResult {
    pub fn new(value: f64, method: &str, certified_error: Option<f64>) -> Self {
        OracleResult { value, method: method.to_string(), certified_error }
    }
}
