//! Problem parameters and pointwise evaluation of the radial operator
//!
//! ```text
//! F(r, s, c) = |s|^alpha * (G1 * c + G2 * (N - 1) * s / r)
//! ```
//!
//! where `s = w'`, `c = w''`, `G1` is `A` when `c > 0` and `a` when `c < 0`,
//! and `G2` is `A` when `s > 0` and `a` when `s < 0`.
//!
//! Solvers never call [`eval_operator`]: they work with the flux
//! `v = |w'|^alpha w'`, in which the equation stays regular even for
//! `alpha < 0`. The pointwise form is kept for diagnostics and tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent, ellipticity constants and spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub alpha: f64,
    /// Lower ellipticity constant `a`.
    pub lower: f64,
    /// Upper ellipticity constant `A`.
    pub upper: f64,
    pub dim: u32,
}

impl Params {
    pub fn new(alpha: f64, lower: f64, upper: f64, dim: u32) -> Result<Self> {
        let p = Params { alpha, lower, upper, dim };
        p.validate()?;
        Ok(p)
    }

    /// `a = A = 1`: the radial `|u'|^alpha`-weighted Laplacian.
    pub fn laplacian(alpha: f64, dim: u32) -> Result<Self> {
        Self::new(alpha, 1.0, 1.0, dim)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha <= -1.0 {
            return Err(Error::InvalidParams("alpha must exceed -1".into()));
        }
        if !self.lower.is_finite() || self.lower <= 0.0 {
            return Err(Error::InvalidParams("a must be positive".into()));
        }
        if !self.upper.is_finite() || self.upper < self.lower {
            return Err(Error::InvalidParams("A must satisfy A >= a".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        Ok(())
    }

    /// Conjugate exponent `p' = (alpha + 2) / (alpha + 1)`.
    pub fn p_prime(&self) -> f64 {
        (self.alpha + 2.0) / (self.alpha + 1.0)
    }

    /// Weight exponent `N0 = (N - 1)(1 + alpha)`.
    pub fn n0(&self) -> f64 {
        (self.dim as f64 - 1.0) * (1.0 + self.alpha)
    }

    /// `N+ = N0 * A / a`.
    pub fn n_plus(&self) -> f64 {
        self.n0() * self.upper / self.lower
    }

    /// `N- = N0 * a / A`.
    pub fn n_minus(&self) -> f64 {
        self.n0() * self.lower / self.upper
    }

    /// The operator is odd under `w -> -w` exactly when `a == A`.
    pub fn is_symmetric(&self) -> bool {
        self.lower == self.upper
    }

    /// `N = 1` is admitted only so that the closed-form one-dimensional
    /// oracle can be exercised; reports flag it.
    pub fn is_oracle_mode(&self) -> bool {
        self.dim == 1
    }

    /// The flux `|w|^(alpha+1)` scale of a solution value, used to make
    /// tolerances independent of the amplitude.
    pub fn flux_scale(&self, w: f64) -> f64 {
        w.abs().powf(self.alpha + 1.0)
    }
}

/// Which of the two half-problems: `w(0) = 1` or `w(0) = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        })
    }
}

/// Point state of a radial solution, carried in the flux variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxState {
    pub r: f64,
    pub w: f64,
    /// `v = |w'|^alpha w'`.
    pub v: f64,
}

impl FluxState {
    pub fn new(r: f64, w: f64, v: f64) -> Self {
        FluxState { r, w, v }
    }

    pub fn slope(&self, alpha: f64) -> f64 {
        flux_to_slope(self.v, alpha)
    }
}

/// Pucci coefficient pair selected by the signs of `w''` and `w'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCoeffs {
    /// Multiplies `w''`.
    pub gamma1: f64,
    /// Multiplies `(N - 1) w' / r`.
    pub gamma2: f64,
}

impl RegimeCoeffs {
    /// Single-valued selection. At `c == 0` (resp. `s == 0`) the coefficient
    /// multiplies zero, so the choice of `a` there does not change `F`.
    pub fn select(s: f64, c: f64, p: &Params) -> Self {
        RegimeCoeffs {
            gamma1: if c > 0.0 { p.upper } else { p.lower },
            gamma2: if s > 0.0 { p.upper } else { p.lower },
        }
    }

    /// Every admissible pair of the multivalued selection: one pair away
    /// from the sign boundaries, two or four on them.
    pub fn candidates(s: f64, c: f64, p: &Params) -> Vec<Self> {
        let choices = |x: f64| -> Vec<f64> {
            if x > 0.0 {
                vec![p.upper]
            } else if x < 0.0 {
                vec![p.lower]
            } else if p.is_symmetric() {
                vec![p.lower]
            } else {
                vec![p.lower, p.upper]
            }
        };
        let mut out = Vec::new();
        for &gamma1 in &choices(c) {
            for &gamma2 in &choices(s) {
                out.push(RegimeCoeffs { gamma1, gamma2 });
            }
        }
        out
    }
}

/// Slope `w'` recovered from the flux: `|v|^(p'-2) v`.
pub fn flux_to_slope(v: f64, alpha: f64) -> f64 {
    if alpha == 0.0 || v == 0.0 {
        return v;
    }
    v.signum() * v.abs().powf(1.0 / (1.0 + alpha))
}

/// Flux `|s|^alpha s` of a slope.
pub fn slope_to_flux(s: f64, alpha: f64) -> f64 {
    if alpha == 0.0 || s == 0.0 {
        return s;
    }
    s.signum() * s.abs().powf(1.0 + alpha)
}

/// `x / A` for `x > 0`, `x / a` for `x < 0`.
pub fn big_m(x: f64, p: &Params) -> f64 {
    if x > 0.0 {
        x / p.upper
    } else if x < 0.0 {
        x / p.lower
    } else {
        0.0
    }
}

/// `A x` for `x > 0`, `a x` for `x < 0`.
pub fn small_m(x: f64, p: &Params) -> f64 {
    if x > 0.0 {
        p.upper * x
    } else if x < 0.0 {
        p.lower * x
    } else {
        0.0
    }
}

/// Pointwise value of the radial operator for slope `s` and curvature `c`.
///
/// At `s == 0` the weight `|s|^alpha` is `0` for `alpha > 0`, `1` for
/// `alpha == 0` and undefined for `alpha < 0`, which is reported as
/// [`Error::SingularSlope`].
pub fn eval_operator(r: f64, s: f64, c: f64, p: &Params) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("radius must be positive, got {r}")));
    }
    let g = RegimeCoeffs::select(s, c, p);
    let bracket = g.gamma1 * c + g.gamma2 * (p.dim as f64 - 1.0) * s / r;
    if s == 0.0 {
        return match p.alpha {
            a if a > 0.0 => Ok(0.0),
            a if a == 0.0 => Ok(bracket),
            a => Err(Error::SingularSlope { alpha: a }),
        };
    }
    Ok(s.abs().powf(p.alpha) * bracket)
}

/// Values of the operator over every admissible coefficient pair; equal
/// entries away from the sign boundaries.
pub fn one_sided_values(r: f64, s: f64, c: f64, p: &Params) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("radius must be positive, got {r}")));
    }
    if s == 0.0 && p.alpha < 0.0 {
        return Err(Error::SingularSlope { alpha: p.alpha });
    }
    let weight = if s == 0.0 {
        if p.alpha > 0.0 { 0.0 } else { 1.0 }
    } else {
        s.abs().powf(p.alpha)
    };
    Ok(RegimeCoeffs::candidates(s, c, p)
        .into_iter()
        .map(|g| weight * (g.gamma1 * c + g.gamma2 * (p.dim as f64 - 1.0) * s / r))
        .collect())
}

/// `F(r, w', c) + mu |w|^alpha w`, zero on exact eigen-solutions.
pub fn residual(state: &FluxState, curvature: f64, mu: f64, p: &Params) -> Result<f64> {
    let s = state.slope(p.alpha);
    let f = eval_operator(state.r, s, curvature, p)?;
    Ok(f + mu * slope_to_flux(state.w, p.alpha))
}
