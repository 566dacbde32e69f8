//! Numerical checks of the spectral inequalities and limits, collected into
//! a serializable report.
//!
//! Every check records a margin (positive when the inequality holds) and a
//! tolerance. A non-strict inequality passes when `margin >= -tol`. A strict
//! one passes when `margin > tol`, fails when `margin < -tol` and is
//! inconclusive in between: strictness below solver accuracy cannot be
//! certified.

use std::time::{SystemTime, UNIX_EPOCH};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::oracles::{rayleigh_lambda_eq, RadialDomain};
use crate::radial_operator::{Params, Sign};
use crate::shooting::{rhs_unchecked, rhs_via_slope, ShootConfig, Trajectory};
use crate::spectrum::{annulus_first, eigenvalues_both, growth_fit, AnnulusProblem, Spectrum};

/// Relative slack applied to strict inequalities.
pub const STRICT_SLACK: f64 = 1e-9;
/// Cells of the coarsest Rayleigh mesh used for `lambda_eq`.
pub const RAYLEIGH_CELLS: usize = 100;
/// Largest Picard contraction ratio accepted.
pub const MAX_CONTRACTION: f64 = 0.5;
/// Agreement required between the two forms of the flux equation.
pub const RHS_AGREEMENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub params: Params,
    /// SHA-256 of the JSON encoding of everything the check depends on.
    pub inputs_digest: String,
    pub margin: f64,
    pub tol: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    fn new(name: impl Into<String>, params: &Params, inputs: &impl Serialize, margin: f64, tol: f64, strict: bool) -> Self {
        let tol = tol.max(f64::MIN_POSITIVE);
        let status = if !margin.is_finite() {
            Status::Fail
        } else if strict {
            if margin > tol {
                Status::Pass
            } else if margin < -tol {
                Status::Fail
            } else {
                Status::Inconclusive
            }
        } else if margin >= -tol {
            Status::Pass
        } else {
            Status::Fail
        };
        CheckRecord {
            name: name.into(),
            params: *params,
            inputs_digest: digest(inputs),
            margin: if margin.is_finite() { margin } else { -f64::MAX },
            tol,
            status,
            detail: None,
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// A check that could not be evaluated because a computation failed.
    fn failed(name: impl Into<String>, params: &Params, inputs: &impl Serialize, err: &Error) -> Self {
        CheckRecord::new(name, params, inputs, f64::NAN, 1.0, false).with_detail(err.to_string())
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

fn digest(inputs: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(inputs).unwrap_or_default();
    hex::encode(Sha256::digest(&bytes))
}

fn slack(a: f64, b: f64) -> f64 {
    STRICT_SLACK * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub solver: ShootConfig,
    pub version: String,
    pub created_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckRecord>,
    pub metadata: Metadata,
}

impl ValidationReport {
    pub fn new(checks: Vec<CheckRecord>, cfg: &ShootConfig) -> Self {
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        ValidationReport {
            checks,
            metadata: Metadata { solver: *cfg, version: env!("CARGO_PKG_VERSION").to_string(), created_unix },
        }
    }

    pub fn count(&self, status: Status) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckRecord::passed)
    }
}

#[derive(Serialize)]
struct SpectrumInputs<'a> {
    params: &'a Params,
    k: usize,
    cfg: &'a ShootConfig,
}

/// `mu_k^- < mu_{k+1}^+` and `mu_k^+ < mu_{k+1}^-` for `k < K`.
pub fn check_interlacing(p: &Params, k_count: usize, cfg: &ShootConfig) -> Result<Vec<CheckRecord>> {
    if k_count < 2 {
        return Err(Error::InvalidParams("interlacing needs K >= 2".into()));
    }
    let inputs = SpectrumInputs { params: p, k: k_count, cfg };
    Ok(match eigenvalues_both(p, k_count, cfg) {
        Ok((plus, minus)) => interlacing_records(&plus, &minus, &inputs),
        Err(e) => vec![CheckRecord::failed("interlacing", p, &inputs, &e)],
    })
}

fn interlacing_records(plus: &Spectrum, minus: &Spectrum, inputs: &SpectrumInputs) -> Vec<CheckRecord> {
    let p = &plus.params;
    let k = plus.len().min(minus.len());
    let mut out = Vec::new();
    for i in 0..k - 1 {
        let (lo, hi) = (minus.mus[i], plus.mus[i + 1]);
        out.push(CheckRecord::new(format!("interlacing.minus{}_below_plus{}", i + 1, i + 2), p, inputs, hi - lo, slack(lo, hi), true));
        let (lo, hi) = (plus.mus[i], minus.mus[i + 1]);
        out.push(CheckRecord::new(format!("interlacing.plus{}_below_minus{}", i + 1, i + 2), p, inputs, hi - lo, slack(lo, hi), true));
    }
    out
}

/// `mu_1^- / mu_1^+ >= mu_2^- / mu_2^+`.
pub fn check_gap(p: &Params, cfg: &ShootConfig) -> CheckRecord {
    let inputs = SpectrumInputs { params: p, k: 2, cfg };
    match eigenvalues_both(p, 2, cfg) {
        Ok((plus, minus)) => gap_record(&plus, &minus, &inputs),
        Err(e) => CheckRecord::failed("gap_ratio", p, &inputs, &e),
    }
}

fn gap_record(plus: &Spectrum, minus: &Spectrum, inputs: &SpectrumInputs) -> CheckRecord {
    let first = minus.mus[0] / plus.mus[0];
    let second = minus.mus[1] / plus.mus[1];
    CheckRecord::new("gap_ratio", &plus.params, inputs, first - second, slack(first, second), false)
        .with_detail(format!("ratios {first} and {second}"))
}

/// `mu_1^+ <= a lambda_eq < A lambda_eq <= mu_1^-`, with `lambda_eq` from
/// the Rayleigh oracle and its error bound folded into the tolerance.
pub fn check_first_bounds(p: &Params, cfg: &ShootConfig) -> Vec<CheckRecord> {
    let inputs = SpectrumInputs { params: p, k: 1, cfg };
    let (spectra, oracle) = rayon::join(
        || eigenvalues_both(p, 1, cfg),
        || rayleigh_lambda_eq(p.alpha, p.dim, RadialDomain::Ball { radius: 1.0 }, RAYLEIGH_CELLS),
    );
    let oracle = match oracle {
        Ok(o) => o,
        Err(e) => return vec![CheckRecord::failed("first_bounds", p, &inputs, &e)],
    };
    match spectra {
        Ok((plus, minus)) => {
            let leq = oracle.estimate.value;
            let leq_err = oracle.estimate.certified_error.unwrap_or(0.0);
            first_bounds_records(plus.mus[0], minus.mus[0], leq, leq_err, p, &inputs)
        }
        Err(e) => vec![CheckRecord::failed("first_bounds", p, &inputs, &e)],
    }
}

fn first_bounds_records(mu_plus: f64, mu_minus: f64, leq: f64, leq_err: f64, p: &Params, inputs: &SpectrumInputs) -> Vec<CheckRecord> {
    let (lo, hi) = (p.lower * leq, p.upper * leq);
    let detail = format!("lambda_eq = {leq} +- {leq_err}");
    let mut out = vec![
        CheckRecord::new("first_bounds.plus_below_a_lambda_eq", p, inputs, lo - mu_plus, p.lower * leq_err + slack(lo, mu_plus), false)
            .with_detail(detail.clone()),
        CheckRecord::new("first_bounds.upper_lambda_eq_below_minus", p, inputs, mu_minus - hi, p.upper * leq_err + slack(hi, mu_minus), false)
            .with_detail(detail),
    ];
    if p.lower < p.upper {
        out.push(CheckRecord::new("first_bounds.a_below_upper", p, inputs, hi - lo, slack(lo, hi), true));
    } else {
        // a = A: both half-eigenvalues coincide with lambda_eq
        out.push(CheckRecord::new("first_bounds.symmetric_equality", p, inputs, -(mu_plus - mu_minus).abs(), slack(mu_plus, mu_minus), false));
    }
    out
}

#[derive(Serialize)]
struct AnnulusInputs<'a> {
    params: &'a Params,
    sign: Sign,
    rhos: &'a [f64],
    cfg: &'a ShootConfig,
}

/// `lambda^±` of the annulus `rho < r < 1` strictly increasing in `rho`.
pub fn check_domain_monotonicity(p: &Params, rhos: &[f64], cfg: &ShootConfig) -> Result<Vec<CheckRecord>> {
    if rhos.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("inner radii must be strictly increasing".into()));
    }
    let mut out = Vec::new();
    for sign in [Sign::Plus, Sign::Minus] {
        let inputs = AnnulusInputs { params: p, sign, rhos, cfg };
        let name = format!("domain_monotonicity.{sign}");
        if rhos.len() < 2 {
            out.push(CheckRecord::new(name, p, &inputs, 0.0, 1.0, false).with_detail("vacuous"));
            continue;
        }
        let lambdas: Result<Vec<f64>> = rhos
            .par_iter()
            .map(|&rho| Ok(annulus_first(&AnnulusProblem::new(rho, *p, sign)?, cfg)?.lambda))
            .collect();
        match lambdas {
            Ok(l) => {
                for (i, w) in l.windows(2).enumerate() {
                    out.push(
                        CheckRecord::new(format!("{name}.rho{}", i + 1), p, &inputs, w[1] - w[0], slack(w[0], w[1]), true)
                            .with_detail(format!("rho {} -> {}: lambda {} -> {}", rhos[i], rhos[i + 1], w[0], w[1])),
                    );
                }
            }
            Err(e) => out.push(CheckRecord::failed(name, p, &inputs, &e)),
        }
    }
    Ok(out)
}

/// Parameter moved by a continuity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Alpha,
    Lower,
}

impl Direction {
    fn apply(self, p: &Params, h: f64) -> Result<Params> {
        match self {
            Direction::Alpha => Params::new(p.alpha + h, p.lower, p.upper, p.dim),
            Direction::Lower => Params::new(p.alpha, p.lower + h, p.upper, p.dim),
        }
    }
}

#[derive(Serialize)]
struct SweepInputs<'a> {
    center: &'a Params,
    k: usize,
    direction: Direction,
    steps: &'a [f64],
    cfg: &'a ShootConfig,
}

/// Deviations `|mu_k^±(center + h) - mu_k^±(center)|` along `steps` must
/// decrease and end below `1e-2 mu_k^±`.
pub fn continuity_sweep(center: &Params, k: usize, direction: Direction, steps: &[f64], cfg: &ShootConfig) -> Result<Vec<CheckRecord>> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    if steps.is_empty() || steps.windows(2).any(|w| w[1].abs() >= w[0].abs()) {
        return Err(Error::InvalidParams("perturbation sizes must strictly decrease".into()));
    }
    let inputs = SweepInputs { center, k, direction, steps, cfg };
    let tag = match direction {
        Direction::Alpha => "alpha",
        Direction::Lower => "a",
    };
    let runs: Result<Vec<(Spectrum, Spectrum)>> = std::iter::once(0.0)
        .chain(steps.iter().copied())
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&h| eigenvalues_both(&direction.apply(center, h)?, k, cfg))
        .collect();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return Ok(vec![CheckRecord::failed(format!("continuity.{tag}"), center, &inputs, &e)]),
    };
    let mut out = Vec::new();
    for (si, sign) in [Sign::Plus, Sign::Minus].into_iter().enumerate() {
        let pick = |run: &(Spectrum, Spectrum)| if si == 0 { run.0.mus[k - 1] } else { run.1.mus[k - 1] };
        let base = pick(&runs[0]);
        let devs: Vec<f64> = runs[1..].iter().map(|r| (pick(r) - base).abs()).collect();
        let name = format!("continuity.{tag}.{sign}{k}");
        for (i, w) in devs.windows(2).enumerate() {
            out.push(
                CheckRecord::new(format!("{name}.decrease{}", i + 1), center, &inputs, w[0] - w[1], slack(0.0, base), true)
                    .with_detail(format!("h {} -> {}: deviation {} -> {}", steps[i], steps[i + 1], w[0], w[1])),
            );
        }
        let last = *devs.last().unwrap_or(&0.0);
        out.push(
            CheckRecord::new(format!("{name}.smallest"), center, &inputs, 1e-2 * base - last, slack(0.0, base), false)
                .with_detail(format!("deviation {last} at h = {}", steps[steps.len() - 1])),
        );
    }
    Ok(out)
}

#[derive(Serialize)]
struct GrowthInputs<'a> {
    params: &'a Params,
    sign: Sign,
    mus: &'a [f64],
}

/// Log-log slope of `mu_k` on `4 <= k <= K` at most `1.02 (2 + alpha)`;
/// the distance to `2 + alpha` is reported in the detail only.
pub fn check_growth(spec: &Spectrum) -> Result<CheckRecord> {
    if spec.len() < 32 {
        return Err(Error::InvalidParams(format!("growth check needs K >= 32, got {}", spec.len())));
    }
    let p = &spec.params;
    let inputs = GrowthInputs { params: p, sign: spec.sign, mus: &spec.mus };
    let fit = growth_fit(&spec.mus, 4, p.alpha).ok_or_else(|| Error::InvalidParams("too few eigenvalues to fit".into()))?;
    let bound = 1.02 * fit.expected;
    Ok(CheckRecord::new(format!("growth.{}", spec.sign), p, &inputs, bound - fit.slope, slack(0.0, bound), false).with_detail(
        format!("slope {} over k = {}..{}, relative distance to {} is {}", fit.slope, fit.k_from, fit.k_to, fit.expected, (fit.slope - fit.expected).abs() / fit.expected),
    ))
}

#[derive(Serialize)]
struct TrajectoryInputs<'a> {
    params: &'a Params,
    sign: Sign,
    zeros: Vec<f64>,
}

/// Alternation, sign changes and monotonicity of a trajectory, Picard
/// contraction at the accepted step, critical stitching and agreement of
/// the two forms of the flux equation along the samples.
pub fn check_structure(traj: &Trajectory, cfg: &ShootConfig) -> Vec<CheckRecord> {
    let p = &traj.params;
    let inputs = TrajectoryInputs { params: p, sign: traj.sign, zeros: traj.zeros() };
    let sign = traj.sign;
    let violations = traj.invariant_violations();
    let mut inv = CheckRecord::new(format!("structure.{sign}.invariants"), p, &inputs, -(violations.len() as f64), 0.5, false);
    if !violations.is_empty() {
        inv = inv.with_detail(violations.join("; "));
    }
    let contraction = traj.max_contraction();
    let stitch = traj.max_stitch_mismatch();
    let mut worst = 0.0f64;
    for s in traj.samples() {
        if s.r <= 0.0 || s.v.abs() < cfg.band(s.w, p) {
            continue;
        }
        let [dw, dv] = rhs_unchecked(s.r, s.w, s.v, p);
        if let Ok((sw, sv)) = rhs_via_slope(&s, p) {
            let d = ((dw - sw).abs() / dw.abs().max(1.0)).max((dv - sv).abs() / dv.abs().max(1.0));
            worst = worst.max(d);
        }
    }
    vec![
        inv,
        CheckRecord::new(format!("structure.{sign}.picard_contraction"), p, &inputs, MAX_CONTRACTION - contraction, slack(0.0, 1.0), false)
            .with_detail(format!("largest measured ratio {contraction}")),
        CheckRecord::new(format!("structure.{sign}.stitch"), p, &inputs, cfg.stitch_tol - stitch, slack(0.0, 1.0), false)
            .with_detail(format!("largest relative mismatch {stitch:e}")),
        CheckRecord::new(format!("structure.{sign}.rhs_agreement"), p, &inputs, RHS_AGREEMENT - worst, f64::EPSILON, false)
            .with_detail(format!("largest difference {worst:e}")),
    ]
}

/// What [`validate`] runs besides the interlacing, gap and first
/// eigenvalue checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateOptions {
    pub k: usize,
    pub rhos: Vec<f64>,
    /// Run the growth check (needs `k >= 32`).
    pub growth: bool,
    /// Steps of a continuity sweep in `alpha` and in `a`, if any.
    pub continuity_steps: Vec<f64>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { k: 4, rhos: vec![0.3, 0.5, 0.7], growth: false, continuity_steps: Vec::new() }
    }
}

/// Runs every check for `p` concurrently and collects the report.
pub fn validate(p: &Params, opts: &ValidateOptions, cfg: &ShootConfig) -> Result<ValidationReport> {
    p.validate()?;
    let k = if opts.growth { opts.k.max(32) } else { opts.k.max(2) };
    type Job<'a> = Box<dyn Fn() -> Result<Vec<CheckRecord>> + Send + Sync + 'a>;
    let mut jobs: Vec<Job> = vec![
        Box::new(|| {
            let inputs = SpectrumInputs { params: p, k, cfg };
            let (plus, minus) = match eigenvalues_both(p, k, cfg) {
                Ok(s) => s,
                Err(e) => return Ok(vec![CheckRecord::failed("spectrum", p, &inputs, &e)]),
            };
            let mut out = interlacing_records(&plus, &minus, &inputs);
            out.push(gap_record(&plus, &minus, &inputs));
            for s in [&plus, &minus] {
                if let Some(t) = &s.trajectory {
                    out.extend(check_structure(t, cfg));
                }
                if opts.growth {
                    out.push(check_growth(s)?);
                }
            }
            Ok(out)
        }),
        Box::new(|| Ok(check_first_bounds(p, cfg))),
        Box::new(|| check_domain_monotonicity(p, &opts.rhos, cfg)),
    ];
    if !opts.continuity_steps.is_empty() {
        for dir in [Direction::Alpha, Direction::Lower] {
            let steps = match dir {
                Direction::Alpha => opts.continuity_steps.clone(),
                // keep a > 0
                Direction::Lower => opts.continuity_steps.iter().map(|h| -h.abs()).collect(),
            };
            jobs.push(Box::new(move || {
                let mut out = Vec::new();
                for kk in 1..=opts.k.max(1) {
                    out.extend(continuity_sweep(p, kk, dir, &steps, cfg)?);
                }
                Ok(out)
            }));
        }
    }
    let parts: Result<Vec<Vec<CheckRecord>>> = jobs.par_iter().map(|j| j()).collect();
    let checks: Vec<CheckRecord> = parts?.into_iter().flatten().collect();
    let report = ValidationReport::new(checks, cfg);
    info!(
        "validation: {} pass, {} fail, {} inconclusive",
        report.count(Status::Pass),
        report.count(Status::Fail),
        report.count(Status::Inconclusive)
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::eigenvalues_ball;
    use std::f64::consts::PI;

    fn cfg() -> ShootConfig {
        ShootConfig::default()
    }

    #[test]
    fn status_rules() {
        let p = Params::laplacian(0.0, 3).unwrap();
        assert_eq!(CheckRecord::new("x", &p, &1, 1.0, 1e-9, true).status, Status::Pass);
        assert_eq!(CheckRecord::new("x", &p, &1, 1e-12, 1e-9, true).status, Status::Inconclusive);
        assert_eq!(CheckRecord::new("x", &p, &1, -1.0, 1e-9, true).status, Status::Fail);
        assert_eq!(CheckRecord::new("x", &p, &1, -1e-12, 1e-9, false).status, Status::Pass);
        assert_eq!(CheckRecord::new("x", &p, &1, f64::NAN, 1e-9, false).status, Status::Fail);
        let r = CheckRecord::new("x", &p, &1, f64::NAN, 0.0, false);
        assert!(r.margin.is_finite() && r.tol > 0.0);
    }

    #[test]
    fn digest_depends_on_inputs() {
        assert_eq!(digest(&(1, 2.0)), digest(&(1, 2.0)));
        assert_ne!(digest(&(1, 2.0)), digest(&(1, 2.5)));
        assert_eq!(digest(&0).len(), 64);
    }

    #[test]
    fn interlacing_margins_of_the_laplacian() {
        let p = Params::laplacian(0.0, 3).unwrap();
        let recs = check_interlacing(&p, 4, &cfg()).unwrap();
        assert_eq!(recs.len(), 6);
        for (i, r) in recs.iter().enumerate() {
            let k = (i / 2 + 1) as f64;
            let want = (2.0 * k + 1.0) * PI * PI;
            assert!((r.margin - want).abs() < 1e-7 * want, "{}: {}", r.name, r.margin);
            assert!(r.passed());
        }
    }

    #[test]
    fn interlacing_for_pucci_operators() {
        for p in [Params::new(0.0, 1.0, 2.0, 3).unwrap(), Params::new(1.0, 1.0, 2.0, 2).unwrap()] {
            assert!(check_interlacing(&p, 4, &cfg()).unwrap().iter().all(CheckRecord::passed));
        }
        assert!(check_interlacing(&Params::laplacian(0.0, 3).unwrap(), 1, &cfg()).is_err());
    }

    #[test]
    fn gap_ratio() {
        let sym = check_gap(&Params::laplacian(0.0, 3).unwrap(), &cfg());
        assert!(sym.passed() && sym.margin.abs() < 1e-12);
        for p in [Params::new(0.0, 1.0, 2.0, 3).unwrap(), Params::new(-0.5, 1.0, 4.0, 2).unwrap()] {
            let r = check_gap(&p, &cfg());
            assert!(r.passed() && r.margin > 0.0, "{r:?}");
        }
    }

    #[test]
    fn first_eigenvalue_sandwich() {
        let recs = check_first_bounds(&Params::laplacian(0.0, 3).unwrap(), &cfg());
        assert!(recs.iter().all(CheckRecord::passed), "{recs:?}");
        assert!(recs.iter().all(|r| r.margin.abs() < 1e-4));
        for p in [Params::new(0.0, 1.0, 2.0, 3).unwrap(), Params::new(1.0, 1.0, 3.0, 2).unwrap()] {
            let recs = check_first_bounds(&p, &cfg());
            assert_eq!(recs.len(), 3);
            assert!(recs.iter().all(CheckRecord::passed), "{recs:?}");
        }
    }

    #[test]
    fn domain_monotonicity_in_one_dimension() {
        let p = Params::laplacian(0.0, 1).unwrap();
        let recs = check_domain_monotonicity(&p, &[0.25, 0.5, 0.75], &cfg()).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().all(CheckRecord::passed));
        // lambda(rho) = pi^2 / (1 - rho)^2
        let l = |rho: f64| PI * PI / ((1.0 - rho) * (1.0 - rho));
        let want = l(0.5) - l(0.25);
        assert!((recs[0].margin - want).abs() < 1e-8 * want);
        let single = check_domain_monotonicity(&p, &[0.5], &cfg()).unwrap();
        assert!(single.iter().all(CheckRecord::passed));
        assert!(check_domain_monotonicity(&p, &[0.5, 0.4], &cfg()).is_err());
    }

    #[test]
    fn domain_monotonicity_for_pucci() {
        let p = Params::new(0.0, 1.0, 2.0, 3).unwrap();
        assert!(check_domain_monotonicity(&p, &[0.3, 0.6], &cfg()).unwrap().iter().all(CheckRecord::passed));
    }

    #[test]
    fn continuity_in_alpha_and_a() {
        let lap = Params::laplacian(0.0, 3).unwrap();
        let recs = continuity_sweep(&lap, 1, Direction::Alpha, &[1e-1, 1e-2, 1e-3], &cfg()).unwrap();
        assert!(recs.iter().all(CheckRecord::passed), "{recs:?}");
        let p = Params::new(0.0, 1.0, 2.0, 3).unwrap();
        let recs = continuity_sweep(&p, 1, Direction::Lower, &[-1e-2, -1e-3, -1e-4], &cfg()).unwrap();
        assert!(recs.iter().all(CheckRecord::passed), "{recs:?}");
        assert!(continuity_sweep(&p, 1, Direction::Alpha, &[1e-3, 1e-2], &cfg()).is_err());
    }

    #[test]
    fn growth_slopes() {
        let p = Params::laplacian(0.0, 3).unwrap();
        let s = eigenvalues_ball(&p, Sign::Plus, 32, &cfg()).unwrap();
        let r = check_growth(&s).unwrap();
        assert!(r.passed());
        // slope of log((k pi)^2) against log k is exactly 2
        assert!((0.04 - r.margin).abs() < 1e-8);
        // zeros at (k - 1/2) times the spacing: the fit over 4..32 is 3.1420
        let p = Params::laplacian(1.0, 1).unwrap();
        let s = eigenvalues_ball(&p, Sign::Plus, 32, &cfg()).unwrap();
        let r = check_growth(&s).unwrap();
        assert!((3.06 - r.margin - 3.142_028).abs() < 1e-5, "{}", r.margin);
        let short = eigenvalues_ball(&p, Sign::Plus, 8, &cfg()).unwrap();
        assert!(check_growth(&short).is_err());
    }

    #[test]
    fn structure_of_solves() {
        let p = Params::new(-0.5, 1.0, 3.0, 3).unwrap();
        let s = eigenvalues_ball(&p, Sign::Minus, 6, &cfg()).unwrap();
        let recs = check_structure(s.trajectory.as_ref().unwrap(), &cfg());
        assert!(recs.iter().all(CheckRecord::passed), "{recs:?}");
    }

    #[test]
    fn full_report_serializes() {
        let p = Params::new(0.0, 1.0, 2.0, 3).unwrap();
        let report = validate(&p, &ValidateOptions::default(), &cfg()).unwrap();
        assert!(report.all_passed(), "{:?}", report.checks.iter().filter(|c| !c.passed()).collect::<Vec<_>>());
        let json = serde_json::to_string(&report).unwrap();
        let back: ValidationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        assert!(json.contains("\"status\":\"pass\""));
    }
}
