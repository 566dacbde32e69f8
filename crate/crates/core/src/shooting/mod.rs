//! Global solutions `w±` of the radial initial value problem.
//!
//! Away from critical points the equation is integrated in the flux
//! variables `(w, v)`:
//!
//! ```text
//! w' = phi(v),    v' = (1 + alpha) M( -|w|^alpha w - m(v) (N - 1) / r )
//! ```
//!
//! Near a critical point `|v|` drops below a band proportional to
//! `|w|^(alpha+1)`, the integrator stops and [`picard`](crate::picard)
//! segments carry the solution across.

mod integrator;
pub mod rk;
mod solve;
mod trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::picard::PicardConfig;
use crate::radial_operator::{big_m, flux_to_slope, slope_to_flux, small_m, FluxState, Params};

pub use integrator::{integrate_until_event, Arc, Limits, Termination};
pub use solve::{extend_through_critical, first_zero_estimate, solve_from, solve_w, Stop};
pub use trajectory::{
    CriticalDiagnostics, Event, EventKind, PicardInfo, Segment, SegmentKind, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Handoff band `|v| < handoff * |w|^(alpha+1)`.
    pub handoff: f64,
    /// Zero localization tolerance, scaled by `max(1, r)`.
    pub zero_tol: f64,
    /// Largest relative junction mismatch accepted at a critical point.
    pub stitch_tol: f64,
    /// Largest estimated quadrature error of a right Picard segment,
    /// relative to `|k_o|`.
    pub picard_grid_tol: f64,
    pub max_step: f64,
    pub picard: PicardConfig,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            rtol: 1e-10,
            atol: 1e-12,
            handoff: 1e-6,
            zero_tol: 1e-12,
            stitch_tol: 1e-8,
            picard_grid_tol: 1e-11,
            max_step: 1.0,
            picard: PicardConfig::default(),
        }
    }
}

impl ShootConfig {
    /// Handoff threshold for a state with value `w`.
    pub fn band(&self, w: f64, p: &Params) -> f64 {
        self.handoff * p.flux_scale(w)
    }

    /// Copy with every tolerance divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        ShootConfig {
            rtol: self.rtol / factor,
            atol: self.atol / factor,
            zero_tol: self.zero_tol / factor,
            picard_grid_tol: self.picard_grid_tol / factor,
            picard: PicardConfig { tol: self.picard.tol / factor, ..self.picard },
            ..*self
        }
    }
}

/// Argument of `M` in the flux equation.
pub fn bracket(r: f64, w: f64, v: f64, p: &Params) -> f64 {
    let g2 = if v > 0.0 { p.upper } else { p.lower };
    -slope_to_flux(w, p.alpha) - g2 * (p.dim as f64 - 1.0) * v / r
}

/// Flux-form derivatives with the coefficients written out:
/// `v' = (1 + alpha) X / G1`, `X = -|w|^alpha w - G2 (N - 1) v / r`.
pub fn rhs_unchecked(r: f64, w: f64, v: f64, p: &Params) -> [f64; 2] {
    let x = bracket(r, w, v, p);
    let g1 = if x > 0.0 { p.upper } else { p.lower };
    [flux_to_slope(v, p.alpha), (1.0 + p.alpha) * x / g1]
}

/// Derivatives `(dw/dr, dv/dr)`; refuses states inside the handoff band.
pub fn rhs(state: &FluxState, p: &Params, cfg: &ShootConfig) -> Result<(f64, f64)> {
    if !(state.r > 0.0) {
        return Err(Error::InvalidParams(format!("radius must be positive, got {}", state.r)));
    }
    if state.v.abs() < cfg.band(state.w, p) || state.v == 0.0 {
        return Err(Error::CriticalProximity { r: state.r, v: state.v });
    }
    let [dw, dv] = rhs_unchecked(state.r, state.w, state.v, p);
    Ok((dw, dv))
}

/// Same derivatives through the slope: `w'' = M(-m(w')(N-1)/r - |w|^alpha w / |w'|^alpha)`
/// and `v' = (1 + alpha) |w'|^alpha w''`.
pub fn rhs_via_slope(state: &FluxState, p: &Params) -> Result<(f64, f64)> {
    if !(state.r > 0.0) || state.v == 0.0 {
        return Err(Error::CriticalProximity { r: state.r, v: state.v });
    }
    let s = state.slope(p.alpha);
    let weight = s.abs().powf(p.alpha);
    let inner = -small_m(s, p) * (p.dim as f64 - 1.0) / state.r
        - slope_to_flux(state.w, p.alpha) / weight;
    let curvature = big_m(inner, p);
    Ok((s, (1.0 + p.alpha) * weight * curvature))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sinc_derivatives() {
        let p = Params::laplacian(0.0, 3).unwrap();
        let r: f64 = 1.0;
        let st = FluxState::new(r, r.sin(), r.cos() - r.sin());
        let (dw, dv) = rhs(&st, &p, &ShootConfig::default()).unwrap();
        // d/dr sin(r)/r and its derivative at r = 1
        assert!((dw - (r.cos() - r.sin())).abs() < 1e-15);
        let d2 = -r.sin() - 2.0 * r.cos() + 2.0 * r.sin();
        assert!((dv - d2).abs() < 1e-15);
    }

    #[test]
    fn coefficient_choice() {
        let p = Params::new(0.0, 1.0, 2.0, 3).unwrap();
        // w > 0, v < 0 small: bracket negative, a is used
        let x = bracket(1.0, 1.0, -0.1, &p);
        assert!(x < 0.0);
        assert_eq!(rhs_unchecked(1.0, 1.0, -0.1, &p)[1], x);
        let y = bracket(1.0, -1.0, 0.1, &p);
        assert!(y > 0.0);
        assert_eq!(rhs_unchecked(1.0, -1.0, 0.1, &p)[1], y / 2.0);
    }

    #[test]
    fn handoff_band_is_refused() {
        let p = Params::new(1.0, 1.0, 2.0, 3).unwrap();
        let cfg = ShootConfig::default();
        let st = FluxState::new(2.0, 0.5, 1e-9);
        assert!(matches!(rhs(&st, &p, &cfg), Err(Error::CriticalProximity { .. })));
        assert!(rhs(&FluxState::new(2.0, 0.5, 1e-3), &p, &cfg).is_ok());
    }

    proptest! {
        #[test]
        fn odd_when_symmetric(r in 0.01f64..50.0, w in -3.0f64..3.0, v in -3.0f64..3.0, alpha in -0.9f64..3.0, a in 0.2f64..4.0) {
            let p = Params::new(alpha, a, a, 2).unwrap();
            let f = rhs_unchecked(r, w, v, &p);
            let g = rhs_unchecked(r, -w, -v, &p);
            prop_assert!((f[0] + g[0]).abs() <= 1e-15 * f[0].abs());
            prop_assert!((f[1] + g[1]).abs() <= 1e-15 * f[1].abs().max(1e-300));
        }

        #[test]
        fn slope_form_agrees(
            r in 0.01f64..50.0, w in -3.0f64..3.0, v in -3.0f64..3.0,
            alpha in -0.9f64..3.0, a in 0.2f64..4.0, extra in 0.0f64..4.0, n in 1u32..6,
        ) {
            prop_assume!(v.abs() > 1e-6);
            let p = Params::new(alpha, a, a + extra, n).unwrap();
            let st = FluxState::new(r, w, v);
            let (dw, dv) = rhs(&st, &p, &ShootConfig { handoff: 0.0, ..Default::default() }).unwrap();
            let (dw2, dv2) = rhs_via_slope(&st, &p).unwrap();
            let scale = (1.0 + alpha) * (w.abs().powf(alpha + 1.0) + (a + extra) * (n as f64 - 1.0) * v.abs() / r) / a;
            prop_assert!((dw - dw2).abs() <= 1e-12 * dw.abs());
            prop_assert!((dv - dv2).abs() <= 1e-12 * scale);
        }
    }
}
