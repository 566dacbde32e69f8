use log::debug;
use serde::{Deserialize, Serialize};

use super::integrator::{integrate_until_event, Arc, Limits, Termination};
use super::trajectory::{CriticalDiagnostics, Event, EventKind, PicardInfo, Segment, SegmentKind, Trajectory};
use super::{bracket, rhs_unchecked, ShootConfig};
use crate::error::{Error, Result};
use crate::picard::{picard_delta, select_regime, solve_local, LocalProblem, LocalSolution, PicardConfig, Regime, Side};
use crate::radial_operator::{FluxState, Params, Sign};

/// When to stop a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Stop {
    /// After this many zeros, ending exactly on the last one.
    Zeros(usize),
    /// At this radius.
    Radius(f64),
}

const MAX_HALVINGS: usize = 40;
const CAP_DOUBLINGS: usize = 10;

/// Rough, deliberately generous estimate of the first zero of `w`.
pub fn first_zero_estimate(p: &Params) -> f64 {
    p.upper.powf(1.0 / (2.0 + p.alpha)) * (2.0 + p.n0())
}

/// Solves the initial value problem `w(0) = ±1`, `w'(0) = 0`.
pub fn solve_w(p: &Params, sign: Sign, stop: Stop, cfg: &ShootConfig) -> Result<Trajectory> {
    p.validate()?;
    check_stop(stop)?;
    let mut traj = Trajectory::new(*p, sign);
    let k_o = sign.value();
    traj.events.push(Event { kind: EventKind::CriticalPoint, r: 0.0, w: k_o });
    let limit = stop_radius(stop);
    let start = right_picard(&mut traj, 0.0, k_o, limit, cfg)?;
    march(&mut traj, start, stop, cfg)?;
    Ok(traj)
}

/// Continues a solution from a regular point `start` (`v != 0`).
pub fn solve_from(p: &Params, sign: Sign, start: FluxState, stop: Stop, cfg: &ShootConfig) -> Result<Trajectory> {
    p.validate()?;
    check_stop(stop)?;
    if start.v == 0.0 {
        return Err(Error::CriticalProximity { r: start.r, v: start.v });
    }
    let mut traj = Trajectory::new(*p, sign);
    march(&mut traj, start, stop, cfg)?;
    Ok(traj)
}

fn check_stop(stop: Stop) -> Result<()> {
    match stop {
        Stop::Zeros(0) => Err(Error::InvalidParams("need at least one zero".into())),
        Stop::Radius(r) if !(r > 0.0) => Err(Error::InvalidParams("stop radius must be positive".into())),
        _ => Ok(()),
    }
}

fn stop_radius(stop: Stop) -> f64 {
    match stop {
        Stop::Radius(r) => r,
        Stop::Zeros(_) => f64::INFINITY,
    }
}

fn push_arc(traj: &mut Trajectory, arc: &Arc) {
    if !arc.steps.is_empty() {
        traj.segments.push(Segment {
            kind: SegmentKind::Integrator,
            samples: arc.samples.clone(),
            dense: arc.steps.clone(),
            picard: None,
        });
    }
    for z in &arc.zeros {
        traj.events.push(Event { kind: EventKind::Zero, r: z.r, w: 0.0 });
    }
}

fn march(traj: &mut Trajectory, mut state: FluxState, stop: Stop, cfg: &ShootConfig) -> Result<()> {
    let p = traj.params;
    let (wanted, mut limit) = match stop {
        Stop::Zeros(k) => (Some(k), state.r + 4.0 * (k as f64 + 1.0) * first_zero_estimate(&p)),
        Stop::Radius(r) => (None, r),
    };
    let base = state.r;
    let mut doublings = 0;
    loop {
        if let Stop::Radius(r) = stop {
            if state.r >= r {
                return Ok(());
            }
        }
        let found = traj.zeros().len();
        let limits = Limits { r_max: limit, max_zeros: wanted.map(|k| k - found) };
        let arc = integrate_until_event(state, &p, &limits, cfg)?;
        push_arc(traj, &arc);
        state = arc.end;
        match arc.termination {
            Termination::ZeroCount => return Ok(()),
            Termination::RadiusLimit => {
                let Some(k) = wanted else { return Ok(()) };
                if doublings == CAP_DOUBLINGS {
                    return Err(Error::OscillationTimeout { r_max: limit, found: traj.zeros().len(), wanted: k });
                }
                doublings += 1;
                limit = base + 2.0 * (limit - base);
                debug!("raising radius cap to {limit}");
            }
            Termination::CriticalProximity => {
                let cap = if wanted.is_some() { f64::INFINITY } else { limit };
                state = extend_through_critical(traj, state, cap, cfg)?;
            }
        }
    }
}

/// `|x|^p' / p'`, the antiderivative of the slope in terms of the flux.
fn flux_potential(v: f64, alpha: f64) -> f64 {
    let pp = (alpha + 2.0) / (alpha + 1.0);
    v.abs().powf(pp) / pp
}

/// Carries the solution across the critical point ahead of the handoff
/// state `h`: locates `r*`, verifies the arc with a left solve, records
/// the event and returns the end of the right Picard segment.
pub fn extend_through_critical(traj: &mut Trajectory, h: FluxState, r_limit: f64, cfg: &ShootConfig) -> Result<FluxState> {
    let p = traj.params;
    let dv = rhs_unchecked(h.r, h.w, h.v, &p)[1];
    if !(dv * h.v < 0.0) {
        return Err(Error::CriticalProximity { r: h.r, v: h.v });
    }
    // v is linear to second order across the band
    let r_star = h.r - h.v / dv;
    let w_star = h.w - flux_potential(h.v, p.alpha) / dv;
    select_regime(w_star, Side::Right)?;

    let mut diag = CriticalDiagnostics { r_handoff: h.r, r_star, w_star, stitch_mismatch: 0.0, left: None };
    let gap = r_star - h.r;
    if gap > 1e-15 * r_star {
        let regime = select_regime(w_star, Side::Left)?;
        let prob = LocalProblem::new(r_star, w_star, regime, Side::Left, gap)?;
        let sol = solve_local(&prob, &p, &cfg.picard)?;
        let end = sol.endpoint;
        let mismatch = ((end.w - h.w).abs() / w_star.abs())
            .max((end.v - h.v).abs() / p.flux_scale(w_star));
        if mismatch > cfg.stitch_tol {
            return Err(Error::StitchMismatch { r: h.r, mismatch, tol: cfg.stitch_tol });
        }
        diag.stitch_mismatch = mismatch;
        diag.left = Some(PicardInfo::from_solution(&sol, 0.0));
        let mut seg = Segment::picard(&sol, 0.0);
        seg.samples[0].r = h.r;
        traj.segments.push(seg);
    }
    traj.criticals.push(diag);
    traj.events.push(Event { kind: EventKind::CriticalPoint, r: r_star, w: w_star });
    right_picard(traj, r_star, w_star, r_limit, cfg)
}

/// Largest value of `|v|` relative to the flux scale accepted at the end
/// of a right segment, as a multiple of the handoff band.
const EXIT_MARGIN: f64 = 10.0;

fn spacing_hint(traj: &Trajectory) -> f64 {
    let ev = &traj.events;
    if ev.len() >= 2 {
        2.0 * (ev[ev.len() - 1].r - ev[ev.len() - 2].r)
    } else {
        first_zero_estimate(&traj.params)
    }
}

fn solve_checked(prob: &LocalProblem, p: &Params, cfg: &ShootConfig) -> Result<(LocalSolution, f64)> {
    let fine = solve_local(prob, p, &cfg.picard)?;
    let coarse_cfg = PicardConfig { samples: (cfg.picard.samples - 1) / 2 + 1, ..cfg.picard };
    let coarse = solve_local(prob, p, &coarse_cfg)?;
    let (a, b) = (fine.endpoint, coarse.endpoint);
    let err = ((a.w - b.w).abs() / prob.k_o.abs()).max((a.v - b.v).abs() / p.flux_scale(prob.k_o)) / 3.0;
    Ok((fine, err))
}

fn acceptable(sol: &LocalSolution, regime: Regime, grid_error: f64, p: &Params, cfg: &ShootConfig) -> bool {
    let end = sol.endpoint;
    let k_o = sol.problem.k_o;
    let keeps_sign = sol.samples.iter().all(|s| s.w * k_o > 0.0);
    let x = bracket(end.r, end.w, end.v, p);
    let regime_holds = match regime {
        Regime::Eq2 => x < 0.0,
        Regime::Eq4 => x > 0.0,
        _ => true,
    };
    sol.contraction <= 0.5 && grid_error <= cfg.picard_grid_tol && keeps_sign && regime_holds
}

fn right_picard(traj: &mut Trajectory, r_o: f64, k_o: f64, r_limit: f64, cfg: &ShootConfig) -> Result<FluxState> {
    let p = traj.params;
    let regime = select_regime(k_o, Side::Right)?;
    let mut delta = picard_delta(&p, regime, k_o).min(0.1 * spacing_hint(traj));
    let room = r_limit - r_o;
    let clipped = room < delta;
    if clipped {
        delta = room;
    }
    let mut last_err = None;
    for _ in 0..MAX_HALVINGS {
        let prob = LocalProblem::new(r_o, k_o, regime, Side::Right, delta)?;
        match solve_checked(&prob, &p, cfg) {
            Ok((sol, grid_error)) if acceptable(&sol, regime, grid_error, &p, cfg) => {
                let end = sol.endpoint;
                let exit_ok = end.v.abs() >= EXIT_MARGIN * cfg.band(end.w, &p);
                if !exit_ok && !(clipped && delta == room) {
                    return Err(Error::CriticalProximity { r: end.r, v: end.v });
                }
                debug!("picard at r = {r_o}: delta {delta:.3e}, {} iterations, grid error {grid_error:.1e}", sol.iterations);
                traj.segments.push(Segment::picard(&sol, grid_error));
                return Ok(end);
            }
            Ok((sol, grid_error)) => {
                last_err = Some(Error::NoConvergence { iterations: sol.iterations, sup_change: grid_error });
            }
            Err(e @ Error::NoConvergence { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
        delta *= 0.5;
    }
    Err(last_err.unwrap_or(Error::NoConvergence { iterations: 0, sup_change: f64::NAN }))
}
