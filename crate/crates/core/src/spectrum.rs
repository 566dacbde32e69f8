//! Half-eigenvalues of the unit ball and first half-eigenvalues of annuli.
//!
//! If `w` solves the initial value problem with `mu = 1` and vanishes at
//! `beta`, then `u(r) = w(beta r)` is an eigenfunction on the unit ball for
//! `mu = beta^(2+alpha)`. On the annulus `rho < r < 1` the same scaling
//! turns the eigenvalue search into a root search in `beta`.

use std::sync::Arc;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial_operator::{FluxState, Params, Sign};
use crate::shooting::{solve_from, solve_w, ShootConfig, Stop, Trajectory};

/// Largest number of eigenvalues computed in one call.
pub const MAX_K: usize = 512;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub params: Params,
    pub sign: Sign,
    pub betas: Vec<f64>,
    pub mus: Vec<f64>,
    #[serde(skip)]
    pub trajectory: Option<Arc<Trajectory>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// `mu_k` for `1 <= k <= K`.
    pub fn mu(&self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        Ok(self.mus[k - 1])
    }

    pub fn beta(&self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        Ok(self.betas[k - 1])
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.len() {
            return Err(Error::IndexOutOfRange { k, max: self.len() });
        }
        Ok(())
    }

    /// Smallest spacing `mu_{k+1} - mu_k`.
    pub fn min_gap(&self) -> Option<f64> {
        self.mus.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }
}

/// `mu = beta^(2 + alpha)`.
pub fn mu_from_beta(beta: f64, alpha: f64) -> f64 {
    beta.powf(2.0 + alpha)
}

pub fn beta_from_mu(mu: f64, alpha: f64) -> f64 {
    mu.powf(1.0 / (2.0 + alpha))
}

/// First `k_count` half-eigenvalues of the unit ball for one sign.
pub fn eigenvalues_ball(p: &Params, sign: Sign, k_count: usize, cfg: &ShootConfig) -> Result<Spectrum> {
    if k_count == 0 || k_count > MAX_K {
        return Err(Error::InvalidParams(format!("number of eigenvalues must be in 1..={MAX_K}, got {k_count}")));
    }
    let traj = solve_w(p, sign, Stop::Zeros(k_count), cfg)?;
    let betas = traj.zeros();
    let mus = betas.iter().map(|&b| mu_from_beta(b, p.alpha)).collect();
    Ok(Spectrum { params: *p, sign, betas, mus, trajectory: Some(Arc::new(traj)) })
}

/// Both half-spectra, computed concurrently.
pub fn eigenvalues_both(p: &Params, k_count: usize, cfg: &ShootConfig) -> Result<(Spectrum, Spectrum)> {
    let (plus, minus) = rayon::join(
        || eigenvalues_ball(p, Sign::Plus, k_count, cfg),
        || eigenvalues_ball(p, Sign::Minus, k_count, cfg),
    );
    Ok((plus?, minus?))
}

/// `u_k(r) = w(beta_k r)` on `0 <= r <= 1`.
pub fn eigenfunction(spec: &Spectrum, k: usize, r: f64) -> Result<f64> {
    Ok(eigenfunction_state(spec, k, r)?.w)
}

/// Value and flux of `w` at `beta_k r`.
pub fn eigenfunction_state(spec: &Spectrum, k: usize, r: f64) -> Result<FluxState> {
    let beta = spec.beta(k)?;
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParams(format!("radius {r} outside [0, 1]")));
    }
    let traj = spec
        .trajectory
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("spectrum carries no trajectory".into()))?;
    traj.eval(beta * r)
        .ok_or_else(|| Error::InvalidParams(format!("radius {} outside the trajectory", beta * r)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusProblem {
    pub rho: f64,
    pub params: Params,
    pub sign: Sign,
}

impl AnnulusProblem {
    pub fn new(rho: f64, params: Params, sign: Sign) -> Result<Self> {
        params.validate()?;
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParams(format!("inner radius must lie in (0, 1), got {rho}")));
        }
        Ok(AnnulusProblem { rho, params, sign })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusEigen {
    pub lambda: f64,
    pub beta: f64,
    /// Final bracket in `beta`.
    pub bracket: (f64, f64),
    pub evaluations: usize,
    /// Whether the bracket came from the uniform fallback scan.
    pub fallback_scan: bool,
}

/// Radius of the first zero after `rho` of the solution that leaves `rho`
/// with zero value and flux `±1`, for the scaled parameter `beta`.
pub fn annulus_zeta(prob: &AnnulusProblem, beta: f64, cfg: &ShootConfig) -> Result<f64> {
    let start = FluxState::new(prob.rho * beta, 0.0, prob.sign.value());
    let traj = solve_from(&prob.params, prob.sign, start, Stop::Zeros(1), cfg)?;
    let z = traj.zeros()[0];
    Ok(z / beta)
}

const GROWTH: f64 = 1.1;
const MAX_SCAN: usize = 400;
const FALLBACK_NODES: usize = 64;

/// First half-eigenvalue of the annulus `rho < r < 1` by shooting from the
/// inner boundary.
pub fn annulus_first(prob: &AnnulusProblem, cfg: &ShootConfig) -> Result<AnnulusEigen> {
    let p = &prob.params;
    let mut evals = 0usize;
    let mut f = |beta: f64| -> Result<f64> {
        evals += 1;
        Ok(annulus_zeta(prob, beta, cfg)? - 1.0)
    };

    // the annulus eigenvalue exceeds the ball one, so start below it
    let ball = solve_w(p, prob.sign, Stop::Zeros(1), cfg)?.zeros()[0];
    let mut lo = ball;
    let mut f_lo = f(lo)?;
    let mut steps = 0;
    while f_lo <= 0.0 && steps < MAX_SCAN {
        lo /= GROWTH;
        f_lo = f(lo)?;
        steps += 1;
    }
    let mut bracket = None;
    let mut monotone = true;
    let mut hi = lo;
    let mut f_prev = f_lo;
    for _ in 0..MAX_SCAN {
        let next = hi * GROWTH;
        let f_next = f(next)?;
        if f_next > f_prev {
            monotone = false;
        }
        if f_next <= 0.0 {
            bracket = Some((hi, next));
            break;
        }
        hi = next;
        f_prev = f_next;
    }
    let mut fallback = false;
    let (mut a, mut b) = match (bracket, monotone) {
        (Some(br), true) => br,
        (found, _) => {
            // uniform rescan of the window for the first sign change
            fallback = true;
            let top = found.map_or(hi, |br| br.1);
            let mut cell = None;
            let mut prev = (lo, f_lo);
            for i in 1..=FALLBACK_NODES {
                let x = lo + (top - lo) * i as f64 / FALLBACK_NODES as f64;
                let fx = f(x)?;
                if prev.1 > 0.0 && fx <= 0.0 {
                    cell = Some((prev.0, x));
                    break;
                }
                prev = (x, fx);
            }
            cell.ok_or(Error::BracketFailure { lo, hi: top })?
        }
    };
    while b - a > 1e-14 * b {
        let m = 0.5 * (a + b);
        if f(m)? > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let beta = 0.5 * (a + b);
    debug!("annulus rho = {}: beta = {beta} after {evals} shots", prob.rho);
    Ok(AnnulusEigen {
        lambda: mu_from_beta(beta, p.alpha),
        beta,
        bracket: (a, b),
        evaluations: evals,
        fallback_scan: fallback,
    })
}

pub fn annulus_first_eigenvalue(prob: &AnnulusProblem, cfg: &ShootConfig) -> Result<f64> {
    Ok(annulus_first(prob, cfg)?.lambda)
}

/// Least-squares line through `(log k, log mu_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub k_from: usize,
    pub k_to: usize,
    /// `2 + alpha`.
    pub expected: f64,
}

/// Fits `log mu_k` against `log k` for `k_from <= k <= K`.
pub fn growth_fit(mus: &[f64], k_from: usize, alpha: f64) -> Option<GrowthFit> {
    let k_to = mus.len();
    if k_from == 0 || k_to < k_from + 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = (k_from..=k_to).map(|k| ((k as f64).ln(), mus[k - 1].ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Some(GrowthFit { slope, intercept: my - slope * mx, k_from, k_to, expected: 2.0 + alpha })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub params: Params,
    pub oracle_mode: bool,
    pub betas_plus: Vec<f64>,
    pub mus_plus: Vec<f64>,
    pub betas_minus: Vec<f64>,
    pub mus_minus: Vec<f64>,
    /// `mu_{k+1}^+ - mu_k^-` for `k = 1..K-1`.
    pub interlacing_plus_over_minus: Vec<f64>,
    /// `mu_{k+1}^- - mu_k^+`.
    pub interlacing_minus_over_plus: Vec<f64>,
    /// `mu_1^- / mu_1^+` and `mu_2^- / mu_2^+`.
    pub gap_ratios: Option<(f64, f64)>,
    pub min_gap_plus: Option<f64>,
    pub min_gap_minus: Option<f64>,
    pub growth_plus: Option<GrowthFit>,
    pub growth_minus: Option<GrowthFit>,
}

pub fn spectrum_report(plus: &Spectrum, minus: &Spectrum) -> SpectrumReport {
    let k = plus.len().min(minus.len());
    let (mp, mm) = (&plus.mus[..k], &minus.mus[..k]);
    let inter_pm = (0..k.saturating_sub(1)).map(|i| mp[i + 1] - mm[i]).collect();
    let inter_mp = (0..k.saturating_sub(1)).map(|i| mm[i + 1] - mp[i]).collect();
    let gap_ratios = (k >= 2).then(|| (mm[0] / mp[0], mm[1] / mp[1]));
    let alpha = plus.params.alpha;
    SpectrumReport {
        params: plus.params,
        oracle_mode: plus.params.is_oracle_mode(),
        betas_plus: plus.betas[..k].to_vec(),
        mus_plus: mp.to_vec(),
        betas_minus: minus.betas[..k].to_vec(),
        mus_minus: mm.to_vec(),
        interlacing_plus_over_minus: inter_pm,
        interlacing_minus_over_plus: inter_mp,
        gap_ratios,
        min_gap_plus: plus.min_gap(),
        min_gap_minus: minus.min_gap(),
        growth_plus: growth_fit(mp, 4, alpha),
        growth_minus: growth_fit(mm, 4, alpha),
    }
}
