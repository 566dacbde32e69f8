use serde::{Deserialize, Serialize};

use super::rk::{self, DenseStep, State};
use super::{bracket, rhs_unchecked, ShootConfig};
use crate::error::{Error, Result};
use crate::radial_operator::{FluxState, Params};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub r_max: f64,
    /// Stop exactly on this many zeros of `w`, if set.
    pub max_zeros: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// `|v|` entered the handoff band; the arc ends at the band edge.
    CriticalProximity,
    RadiusLimit,
    ZeroCount,
}

/// Output of [`integrate_until_event`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub steps: Vec<DenseStep>,
    /// Start point followed by every accepted step end.
    pub samples: Vec<FluxState>,
    pub zeros: Vec<FluxState>,
    /// Radii where the bracket changed sign and a step was landed.
    pub kinks: Vec<f64>,
    pub end: FluxState,
    pub termination: Termination,
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Landing {
    Kink,
    Handoff,
    Zero,
    LastZero,
}

fn bisect<P: Fn(f64) -> bool>(mut lo: f64, mut hi: f64, inside: P, tol: f64) -> f64 {
    // invariant: !inside(lo), inside(hi)
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// First radius in `(r0, r1]` where `inside` holds, scanning the dense
/// output in sixteen pieces before bisecting.
fn first_inside<P: Fn(f64) -> bool>(r0: f64, r1: f64, inside: P, tol: f64) -> Option<f64> {
    const PIECES: usize = 16;
    let mut prev = r0;
    for i in 1..=PIECES {
        let r = if i == PIECES { r1 } else { r0 + (r1 - r0) * i as f64 / PIECES as f64 };
        if inside(r) {
            return Some(bisect(prev, r, &inside, tol));
        }
        prev = r;
    }
    None
}

/// Adaptive integration of the flux system from a regular point.
///
/// Zeros of `w` are localized on the dense output and recorded; the arc
/// stops at the handoff band edge, at `limits.r_max`, or on the requested
/// zero. Sign changes of the bracket are landed on exactly so that no step
/// straddles a switch of `M`.
pub fn integrate_until_event(
    start: FluxState,
    p: &Params,
    limits: &Limits,
    cfg: &ShootConfig,
) -> Result<Arc> {
    if !(start.r > 0.0) {
        return Err(Error::InvalidParams("integration must start at r > 0".into()));
    }
    let mut arc = Arc {
        steps: Vec::new(),
        samples: vec![start],
        zeros: Vec::new(),
        kinks: Vec::new(),
        end: start,
        termination: Termination::RadiusLimit,
        rejected: 0,
    };
    if start.v.abs() < cfg.band(start.w, p) || start.v == 0.0 {
        arc.termination = Termination::CriticalProximity;
        return Ok(arc);
    }
    if limits.max_zeros == Some(0) {
        arc.termination = Termination::ZeroCount;
        return Ok(arc);
    }

    let f = |r: f64, y: &State| rhs_unchecked(r, y[0], y[1], p);
    let asymmetric = !p.is_symmetric();
    let v_sign = start.v.signum();
    let in_band = |y: &State| y[1] * v_sign <= 0.0 || y[1].abs() < cfg.band(y[0], p);

    let mut r = start.r;
    let mut y: State = [start.w, start.v];
    let mut k1 = f(r, &y);
    let mut h = rk::initial_step(&y, &k1, cfg.rtol, cfg.atol, cfg.max_step);
    let mut landing: Option<(f64, Landing)> = None;
    let mut skip_kink = false;

    loop {
        let tiny = 1e-14 * r.abs().max(1.0);
        if r >= limits.r_max - tiny {
            arc.termination = Termination::RadiusLimit;
            break;
        }
        let (target, kind) = match landing {
            Some((t, k)) if t < limits.r_max => (t, Some(k)),
            _ => (limits.r_max, None),
        };
        let hitting = h >= target - r;
        let h_try = if hitting { target - r } else { h.min(cfg.max_step) };
        if h_try <= tiny * 1e-2 {
            return Err(Error::StepFailure { r, h: h_try });
        }

        let trial = rk::step(&f, r, &y, &k1, h_try, cfg.rtol, cfg.atol);
        if trial.err > 1.0 {
            arc.rejected += 1;
            h = h_try * rk::step_factor(trial.err);
            if h < 1e-14 * r.abs().max(1.0) {
                return Err(Error::StepFailure { r, h });
            }
            continue;
        }
        let r1 = r + h_try;
        let dense = trial.dense;
        let landed = if hitting { kind } else { None };
        let loc_tol = cfg.zero_tol * r1.abs().max(1.0);

        // earliest event that must be landed on
        let mut first: Option<(f64, Landing)> = None;
        let mut consider = |re: f64, k: Landing| {
            if first.map_or(true, |(f0, _)| re < f0) {
                first = Some((re, k));
            }
        };
        if asymmetric && !skip_kink && landed != Some(Landing::Kink) {
            let x0 = bracket(r, y[0], y[1], p);
            if x0 != 0.0 {
                let flips = |rr: f64| {
                    let s = dense.eval(rr);
                    bracket(rr, s[0], s[1], p) * x0 < 0.0
                };
                if flips(r1) {
                    if let Some(rk) = first_inside(r, r1, flips, loc_tol) {
                        consider(rk, Landing::Kink);
                    }
                }
            }
        }
        if landed != Some(Landing::Handoff) && in_band(&trial.y1) {
            if let Some(rh) = first_inside(r, r1, |rr| in_band(&dense.eval(rr)), loc_tol) {
                consider(rh, Landing::Handoff);
            }
        }
        let zero = if y[0] != 0.0 && y[0] * trial.y1[0] <= 0.0 {
            let w0 = y[0];
            first_inside(r, r1, |rr| dense.eval(rr)[0] * w0 <= 0.0, loc_tol)
        } else {
            None
        };
        let wants_last = limits.max_zeros.map_or(false, |k| arc.zeros.len() + 1 >= k);
        // the source term is not smooth in w at w = 0, so zeros are landed on too
        if let Some(z) = zero {
            if landed != Some(Landing::LastZero) && landed != Some(Landing::Zero) {
                consider(z, if wants_last { Landing::LastZero } else { Landing::Zero });
            }
        }

        if let Some((re, k)) = first {
            if re < r1 - loc_tol {
                if re - r <= tiny {
                    // event at the current point: act on it without stepping
                    match k {
                        Landing::Kink => {
                            skip_kink = true;
                            landing = None;
                            continue;
                        }
                        Landing::Handoff => {
                            arc.termination = Termination::CriticalProximity;
                            break;
                        }
                        Landing::Zero => {
                            arc.zeros.push(FluxState::new(r, 0.0, y[1]));
                            y[0] = 0.0;
                            k1 = f(r, &y);
                            landing = None;
                            continue;
                        }
                        Landing::LastZero => {
                            arc.zeros.push(FluxState::new(r, 0.0, y[1]));
                            arc.termination = Termination::ZeroCount;
                            break;
                        }
                    }
                }
                landing = Some((re, k));
                h = re - r;
                continue;
            }
        }
        let event_here = landed.or(first.map(|(_, k)| k));

        let mut y1 = trial.y1;
        let mut k7 = trial.k7;
        if matches!(landed, Some(Landing::Zero | Landing::LastZero)) {
            arc.zeros.push(FluxState::new(r1, 0.0, y1[1]));
            if landed == Some(Landing::Zero) {
                y1[0] = 0.0;
                k7 = f(r1, &y1);
            }
        } else if let Some(z) = zero {
            let s = dense.eval(z);
            arc.zeros.push(FluxState::new(z, 0.0, s[1]));
        }
        arc.steps.push(dense);
        arc.samples.push(FluxState::new(r1, y1[0], y1[1]));
        r = r1;
        y = y1;
        k1 = k7;
        landing = None;
        if !hitting {
            h = h_try * rk::step_factor(trial.err);
        }
        skip_kink = event_here == Some(Landing::Kink);
        match event_here {
            Some(Landing::Kink) => arc.kinks.push(r),
            Some(Landing::Handoff) => {
                arc.termination = Termination::CriticalProximity;
                break;
            }
            Some(Landing::LastZero) => {
                arc.termination = Termination::ZeroCount;
                break;
            }
            Some(Landing::Zero) | None => {}
        }
        if limits.max_zeros.map_or(false, |k| arc.zeros.len() >= k) {
            arc.termination = Termination::ZeroCount;
            break;
        }
    }
    arc.end = FluxState::new(r, y[0], y[1]);
    Ok(arc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_zero_of_sinc() {
        let p = Params::laplacian(0.0, 3).unwrap();
        let r: f64 = 0.5;
        let start = FluxState::new(r, r.sin() / r, r.cos() / r - r.sin() / (r * r));
        let lim = Limits { r_max: 4.0, max_zeros: None };
        let arc = integrate_until_event(start, &p, &lim, &ShootConfig::default()).unwrap();
        assert_eq!(arc.zeros.len(), 1);
        assert!((arc.zeros[0].r - std::f64::consts::PI).abs() < 1e-10, "{}", arc.zeros[0].r);
        assert_eq!(arc.termination, Termination::RadiusLimit);
        assert!((arc.end.r - 4.0).abs() < 1e-14);
    }

    #[test]
    fn stops_on_requested_zero() {
        let p = Params::laplacian(0.0, 3).unwrap();
        let r: f64 = 0.5;
        let start = FluxState::new(r, r.sin() / r, r.cos() / r - r.sin() / (r * r));
        let lim = Limits { r_max: 10.0, max_zeros: Some(1) };
        let arc = integrate_until_event(start, &p, &lim, &ShootConfig::default()).unwrap();
        assert_eq!(arc.termination, Termination::ZeroCount);
        assert!((arc.end.r - std::f64::consts::PI).abs() < 1e-10);
        assert!(arc.end.w.abs() < 1e-10);
    }

    #[test]
    fn handoff_before_critical_point() {
        // the derivative of sin(r)/r vanishes at 4.4934..., the first root of tan x = x
        let p = Params::laplacian(0.0, 3).unwrap();
        let r: f64 = 3.5;
        let start = FluxState::new(r, r.sin() / r, r.cos() / r - r.sin() / (r * r));
        let lim = Limits { r_max: 10.0, max_zeros: None };
        let cfg = ShootConfig::default();
        let arc = integrate_until_event(start, &p, &lim, &cfg).unwrap();
        assert_eq!(arc.termination, Termination::CriticalProximity);
        let end = arc.end;
        assert!(end.r < 4.493_409_457_909_064);
        assert!(4.493_409_457_909_064 - end.r < 1e-4);
        let band = cfg.band(end.w, &p);
        assert!((end.v.abs() - band).abs() < 1e-3 * band, "v = {} band = {band}", end.v);
    }

    #[test]
    fn start_inside_band() {
        let p = Params::laplacian(1.0, 2).unwrap();
        let start = FluxState::new(1.0, 0.8, 1e-9);
        let lim = Limits { r_max: 10.0, max_zeros: None };
        let arc = integrate_until_event(start, &p, &lim, &ShootConfig::default()).unwrap();
        assert_eq!(arc.termination, Termination::CriticalProximity);
        assert!(arc.steps.is_empty());
        assert_eq!(arc.end, start);
    }

    #[test]
    fn lands_on_bracket_sign_changes() {
        let p = Params::new(0.0, 1.0, 2.0, 3).unwrap();
        let start = FluxState::new(1.0, 0.6, -0.3);
        let lim = Limits { r_max: 3.0, max_zeros: None };
        let arc = integrate_until_event(start, &p, &lim, &ShootConfig::default()).unwrap();
        assert!(!arc.kinks.is_empty());
        for &rk in &arc.kinks {
            let s = arc.samples.iter().find(|s| s.r == rk).unwrap();
            let x = bracket(s.r, s.w, s.v, &p);
            assert!(x.abs() < 1e-9, "bracket {x} at kink {rk}");
        }
    }
}
