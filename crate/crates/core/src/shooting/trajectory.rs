use serde::{Deserialize, Serialize};

use super::rk::DenseStep;
use crate::picard::{eval_samples, LocalSolution, Regime, Side};
use crate::radial_operator::{FluxState, Params, Sign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    Picard,
    Integrator,
}

/// Diagnostics of one accepted Picard solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardInfo {
    pub r_o: f64,
    pub k_o: f64,
    pub regime: Regime,
    pub side: Side,
    pub delta: f64,
    pub iterations: usize,
    pub sup_change: f64,
    pub contraction: f64,
    /// Estimated quadrature error of the endpoint, relative to `|k_o|`.
    pub grid_error: f64,
}

impl PicardInfo {
    pub fn from_solution(sol: &LocalSolution, grid_error: f64) -> Self {
        PicardInfo {
            r_o: sol.problem.r_o,
            k_o: sol.problem.k_o,
            regime: sol.problem.regime,
            side: sol.problem.side,
            delta: sol.problem.delta,
            iterations: sol.iterations,
            sup_change: sol.sup_change,
            contraction: sol.contraction,
            grid_error,
        }
    }
}

/// A sampled arc of the solution, ordered by increasing `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub samples: Vec<FluxState>,
    /// Continuous output of integrator segments; empty for Picard ones.
    pub dense: Vec<DenseStep>,
    pub picard: Option<PicardInfo>,
}

impl Segment {
    pub fn picard(sol: &LocalSolution, grid_error: f64) -> Self {
        let mut samples = sol.samples.clone();
        if sol.problem.side == Side::Left {
            samples.reverse();
        }
        Segment {
            kind: SegmentKind::Picard,
            samples,
            dense: Vec::new(),
            picard: Some(PicardInfo::from_solution(sol, grid_error)),
        }
    }

    pub fn r_start(&self) -> f64 {
        self.samples[0].r
    }

    pub fn r_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].r
    }

    pub fn eval(&self, r: f64, alpha: f64) -> Option<FluxState> {
        match self.kind {
            SegmentKind::Picard => eval_samples(&self.samples, r, alpha),
            SegmentKind::Integrator => {
                if self.dense.is_empty() || r < self.r_start() || r > self.r_end() {
                    return None;
                }
                let i = self.dense.partition_point(|s| s.r1() < r).min(self.dense.len() - 1);
                let y = self.dense[i].eval(r);
                Some(FluxState::new(r, y[0], y[1]))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Zero,
    CriticalPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub r: f64,
    /// `0` at zeros, the local extremum at critical points.
    pub w: f64,
}

/// What happened at one interior critical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalDiagnostics {
    pub r_handoff: f64,
    pub r_star: f64,
    pub w_star: f64,
    /// Relative mismatch between the left verification solve and the
    /// integrator at the handoff radius.
    pub stitch_mismatch: f64,
    pub left: Option<PicardInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: Params,
    pub sign: Sign,
    pub segments: Vec<Segment>,
    pub events: Vec<Event>,
    pub criticals: Vec<CriticalDiagnostics>,
}

impl Trajectory {
    pub fn new(params: Params, sign: Sign) -> Self {
        Trajectory { params, sign, segments: Vec::new(), events: Vec::new(), criticals: Vec::new() }
    }

    pub fn r_start(&self) -> f64 {
        self.segments.first().map_or(0.0, Segment::r_start)
    }

    pub fn r_end(&self) -> f64 {
        self.segments.last().map_or(0.0, Segment::r_end)
    }

    /// State at `r` from the segment covering it.
    pub fn eval(&self, r: f64) -> Option<FluxState> {
        let i = self.segments.partition_point(|s| s.r_end() < r);
        let seg = self.segments.get(i)?;
        seg.eval(r, self.params.alpha).or_else(|| {
            // rounding at the far end of the last segment
            let last = self.segments.last()?;
            let end = last.samples[last.samples.len() - 1];
            ((r - end.r).abs() <= 1e-12 * end.r.max(1.0)).then_some(end)
        })
    }

    pub fn zeros(&self) -> Vec<f64> {
        self.events.iter().filter(|e| e.kind == EventKind::Zero).map(|e| e.r).collect()
    }

    pub fn critical_points(&self) -> Vec<Event> {
        self.events.iter().copied().filter(|e| e.kind == EventKind::CriticalPoint).collect()
    }

    /// Every stored sample in order of increasing `r`, junction duplicates removed.
    pub fn samples(&self) -> Vec<FluxState> {
        let mut out: Vec<FluxState> = Vec::new();
        for seg in &self.segments {
            for s in &seg.samples {
                if out.last().map_or(true, |l| s.r > l.r) {
                    out.push(*s);
                }
            }
        }
        out
    }

    pub fn picard_infos(&self) -> impl Iterator<Item = &PicardInfo> {
        self.segments.iter().filter_map(|s| s.picard.as_ref())
    }

    /// Largest contraction ratio measured in any Picard solve.
    pub fn max_contraction(&self) -> f64 {
        self.picard_infos().map(|i| i.contraction).fold(0.0, f64::max)
    }

    pub fn max_stitch_mismatch(&self) -> f64 {
        self.criticals.iter().map(|c| c.stitch_mismatch).fold(0.0, f64::max)
    }

    /// Violations of the structural invariants, empty when all hold.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for pair in self.events.windows(2) {
            if pair[1].r <= pair[0].r {
                bad.push(format!("events not increasing at r = {}", pair[1].r));
            }
        }
        for e in &self.events {
            if e.kind == EventKind::CriticalPoint && e.w == 0.0 {
                bad.push(format!("critical point with w = 0 at r = {}", e.r));
            }
        }
        // zeros and critical points alternate, extrema alternate in sign
        for pair in self.events.windows(2) {
            if pair[0].kind == pair[1].kind {
                bad.push(format!("two consecutive {:?} events at r = {}", pair[1].kind, pair[1].r));
            }
        }
        let crits = self.critical_points();
        for pair in crits.windows(2) {
            if pair[0].w * pair[1].w >= 0.0 {
                bad.push(format!("no sign change between extrema at {} and {}", pair[0].r, pair[1].r));
            }
        }
        for z in self.zeros() {
            let h = 1e-6 * z.max(1.0);
            if let (Some(a), Some(b)) = (self.eval(z - h), self.eval(z + h)) {
                if a.w * b.w >= 0.0 {
                    bad.push(format!("w does not change sign at zero {z}"));
                }
            }
        }
        for pair in self.segments.windows(2) {
            if pair[1].r_start() != pair[0].r_end() {
                bad.push(format!("segments do not abut at r = {}", pair[0].r_end()));
            }
        }
        // monotone from the centre to the first interior extremum
        if let Some(first) = crits.iter().find(|c| c.r > 0.0) {
            let s = self.sign.value();
            let samples = self.samples();
            let head: Vec<_> = samples.iter().take_while(|x| x.r <= first.r).collect();
            for pair in head.windows(2) {
                let rounding = 1e-14 * pair[0].w.abs();
                if s * (pair[1].w - pair[0].w) > rounding {
                    bad.push(format!("w not monotone on (0, {}) near r = {}", first.r, pair[1].r));
                    break;
                }
            }
        }
        bad
    }
}
