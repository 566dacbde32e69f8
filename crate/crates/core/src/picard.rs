//! Local solutions next to a critical point (`w' = 0`) by Picard iteration.
//!
//! On each side of a critical radius `r_o` the signs of `w'` and `w''` are
//! fixed, so the equation takes one of four constant-coefficient divergence
//! forms
//!
//! ```text
//! d/dr (r^m v) = -(1 + alpha) / c * r^m |k|^alpha k,     v = |k'|^alpha k'
//! ```
//!
//! with `(c, m)` one of `(a, N0)`, `(a, N+)`, `(A, N0)`, `(A, N-)`. Integrating
//! twice gives the fixed-point map
//!
//! ```text
//! T(k)(r) = k_o - int_{r_o}^{r} phi( (1 + alpha) / (c s^m) int_{r_o}^{s} t^m |k|^alpha k dt ) ds
//! ```
//!
//! with `phi(x) = |x|^(p'-2) x`, which is a contraction for small intervals.
//!
//! Both integrals use piecewise-linear product rules on a uniform grid: the
//! weight `t^m` is integrated exactly against linear `|k|^alpha k`, and
//! `phi` is integrated exactly against the linear interpolant of the inner
//! average. Both are second order, like the composite trapezoid rule they
//! reduce to when `alpha = 0` and `m = 0`, but stay second order when
//! `phi` or `t^m` are not smooth at `r_o`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial_operator::{flux_to_slope, slope_to_flux, FluxState, Params};

/// The four constant-coefficient forms of the radial equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `w' < 0`, `w'' < 0`: coefficient `a`, weight `N0`.
    Eq2,
    /// `w' > 0`, `w'' < 0`: coefficient `a`, weight `N+`.
    Eq3,
    /// `w' > 0`, `w'' > 0`: coefficient `A`, weight `N0`.
    Eq4,
    /// `w' < 0`, `w'' > 0`: coefficient `A`, weight `N-`.
    Eq5,
}

impl Regime {
    /// Coefficient of the `d/dr` term.
    pub fn coeff(self, p: &Params) -> f64 {
        match self {
            Regime::Eq2 | Regime::Eq3 => p.lower,
            Regime::Eq4 | Regime::Eq5 => p.upper,
        }
    }

    /// Exponent of the radial weight in the divergence form.
    pub fn weight(self, p: &Params) -> f64 {
        match self {
            Regime::Eq2 | Regime::Eq4 => p.n0(),
            Regime::Eq3 => p.n_plus(),
            Regime::Eq5 => p.n_minus(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProblem {
    pub r_o: f64,
    pub k_o: f64,
    pub regime: Regime,
    pub side: Side,
    pub delta: f64,
}

impl LocalProblem {
    pub fn new(r_o: f64, k_o: f64, regime: Regime, side: Side, delta: f64) -> Result<Self> {
        if k_o == 0.0 {
            return Err(Error::ZeroValueAtCritical);
        }
        if !(r_o >= 0.0) || !(delta > 0.0) || !k_o.is_finite() {
            return Err(Error::InvalidParams(format!(
                "local problem needs r_o >= 0 and delta > 0 (r_o = {r_o}, delta = {delta})"
            )));
        }
        if side == Side::Left && delta > r_o {
            return Err(Error::InvalidParams(format!(
                "left interval [{}, {r_o}] leaves the half-line",
                r_o - delta
            )));
        }
        Ok(LocalProblem { r_o, k_o, regime, side, delta })
    }

    /// Uniform grid from `r_o` towards the interval end, `samples` points.
    pub fn grid(&self, samples: usize) -> Vec<f64> {
        let n = samples.max(2) - 1;
        let h = self.delta / n as f64;
        let dir = self.side.sign();
        (0..=n)
            .map(|i| {
                if i == n {
                    self.r_o + dir * self.delta
                } else {
                    self.r_o + dir * h * i as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    /// Grid points per local interval.
    pub samples: usize,
    pub max_iterations: usize,
    /// Acceptance threshold on the sup-norm update, relative to `|k_o|`.
    pub tol: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig { samples: 257, max_iterations: 200, tol: 1e-13 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSolution {
    pub problem: LocalProblem,
    /// `(r, k, v)` ordered away from `r_o`.
    pub samples: Vec<FluxState>,
    pub endpoint: FluxState,
    pub iterations: usize,
    pub sup_change: f64,
    /// Largest observed ratio of successive sup-norm updates.
    pub contraction: f64,
}

/// Image of one application of the fixed-point map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapImage {
    pub values: Vec<f64>,
    /// Flux `v` from the inner integral.
    pub flux: Vec<f64>,
}

/// Interval length at which the map provably contracts with factor 1/3 on
/// the ball `|k - k_o| <= |k_o| / 2`.
pub fn picard_delta_bound(p: &Params, regime: Regime) -> f64 {
    let pp = p.p_prime();
    let c1 = ((p.alpha + 1.0) / (regime.coeff(p) * (regime.weight(p) + 1.0))).powf(pp - 1.0);
    (1.0 / (3f64.powf(p.alpha.abs() + 1.0) * c1)).powf(1.0 / pp)
}

/// Half of [`picard_delta_bound`].
///
/// Both sides of the equation are homogeneous of degree `alpha + 1` in `w`,
/// so `T(c k) = c T(k)` and the bound does not depend on `|k_o|`.
pub fn picard_delta(p: &Params, regime: Regime, k_o: f64) -> f64 {
    debug_assert!(k_o != 0.0);
    0.5 * picard_delta_bound(p, regime)
}

/// Regime that continues a solution from a critical point with value `w`.
pub fn select_regime(w_at_critical: f64, side: Side) -> Result<Regime> {
    if w_at_critical == 0.0 || !w_at_critical.is_finite() {
        return Err(Error::ZeroValueAtCritical);
    }
    let positive = w_at_critical > 0.0;
    Ok(match (side, positive) {
        (Side::Right, true) => Regime::Eq2,
        (Side::Right, false) => Regime::Eq4,
        (Side::Left, true) => Regime::Eq3,
        (Side::Left, false) => Regime::Eq5,
    })
}

/// `(hi^e - lo^e) / e` without cancellation for `hi` close to `lo`.
fn power_diff(lo: f64, hi: f64, e: f64) -> f64 {
    if lo == 0.0 {
        hi.powf(e) / e
    } else {
        lo.powf(e) * (e * ((hi - lo) / lo).ln_1p()).exp_m1() / e
    }
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// `int_{ta}^{tb} t^m f(t) dt` for `f` linear between `f(ta) = fa` and `f(tb) = fb`.
fn weighted_cell(ta: f64, tb: f64, fa: f64, fb: f64, m: f64) -> f64 {
    if m == 0.0 {
        return 0.5 * (tb - ta) * (fa + fb);
    }
    let (lo, hi, flo, fhi, sign) =
        if ta <= tb { (ta, tb, fa, fb, 1.0) } else { (tb, ta, fb, fa, -1.0) };
    let h = hi - lo;
    let p0 = power_diff(lo, hi, m + 1.0);
    // int t^m (t - lo) dt; the closed form cancels badly for lo >> h
    let p1 = if lo > 10.0 * h {
        GAUSS4
            .iter()
            .map(|&(x, wt)| {
                let s = 0.5 * h * (x + 1.0);
                wt * (lo + s).powf(m) * s
            })
            .sum::<f64>()
            * 0.5
            * h
    } else {
        power_diff(lo, hi, m + 2.0) - lo * p0
    };
    sign * (flo * p0 + (fhi - flo) / h * p1)
}

/// `int_{sa}^{sb} phi(x(s)) ds` for `x` linear between `xa` and `xb`.
fn phi_cell(sa: f64, sb: f64, xa: f64, xb: f64, alpha: f64) -> f64 {
    let ds = sb - sa;
    let dx = xb - xa;
    let scale = xa.abs().max(xb.abs());
    if scale == 0.0 {
        return 0.0;
    }
    if alpha == 0.0 || dx.abs() <= 1e-7 * scale {
        return ds * flux_to_slope(0.5 * (xa + xb), alpha);
    }
    let pp = (alpha + 2.0) / (alpha + 1.0);
    let big_phi = |x: f64| x.abs().powf(pp) / pp;
    ds * (big_phi(xb) - big_phi(xa)) / dx
}

/// One application of the fixed-point map to samples `k` on `grid`.
pub fn apply_t(grid: &[f64], k: &[f64], prob: &LocalProblem, p: &Params) -> Result<MapImage> {
    if grid.len() != k.len() || grid.len() < 2 {
        return Err(Error::InvalidParams("samples must match the grid".into()));
    }
    let alpha = p.alpha;
    let c = prob.regime.coeff(p);
    let m = prob.regime.weight(p);
    let src: Vec<f64> = k.iter().map(|&x| slope_to_flux(x, alpha)).collect();

    let n = grid.len();
    let mut inner = 0.0;
    let mut avg = vec![0.0; n];
    for i in 1..n {
        inner += weighted_cell(grid[i - 1], grid[i], src[i - 1], src[i], m);
        let r = grid[i];
        avg[i] = if m == 0.0 {
            (alpha + 1.0) / c * inner
        } else {
            (alpha + 1.0) / (c * r.powf(m)) * inner
        };
        if !avg[i].is_finite() {
            return Err(Error::QuadratureFailure { r });
        }
    }

    let mut values = vec![prob.k_o; n];
    let mut outer = 0.0;
    for i in 1..n {
        outer += phi_cell(grid[i - 1], grid[i], avg[i - 1], avg[i], alpha);
        values[i] = prob.k_o - outer;
        if !values[i].is_finite() {
            return Err(Error::QuadratureFailure { r: grid[i] });
        }
    }
    let flux = avg.iter().map(|x| -x).collect();
    Ok(MapImage { values, flux })
}

/// Iterates the map from the constant `k_o` until the sup-norm update drops
/// below `cfg.tol * |k_o|`.
pub fn solve_local(prob: &LocalProblem, p: &Params, cfg: &PicardConfig) -> Result<LocalSolution> {
    let grid = prob.grid(cfg.samples);
    let scale = prob.k_o.abs();
    let noise = 1e3 * f64::EPSILON * scale;
    let mut k = vec![prob.k_o; grid.len()];
    let mut prev_change = f64::NAN;
    let mut contraction: f64 = 0.0;
    let mut change = f64::INFINITY;

    for it in 1..=cfg.max_iterations {
        let img = apply_t(&grid, &k, prob, p)?;
        change = img
            .values
            .iter()
            .zip(&k)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if prev_change > noise && change > noise {
            contraction = contraction.max(change / prev_change);
        }
        prev_change = change;
        k = img.values;
        if change <= cfg.tol * scale {
            let samples: Vec<FluxState> = grid
                .iter()
                .zip(&k)
                .zip(&img.flux)
                .map(|((&r, &w), &v)| FluxState::new(r, w, v))
                .collect();
            let mut samples = samples;
            // v(r_o) = 0 and k(r_o) = k_o hold exactly by construction
            samples[0] = FluxState::new(prob.r_o, prob.k_o, 0.0);
            let endpoint = *samples.last().unwrap();
            return Ok(LocalSolution {
                problem: *prob,
                samples,
                endpoint,
                iterations: it,
                sup_change: change,
                contraction,
            });
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iterations, sup_change: change })
}

/// Value of a local solution at `r` inside its interval.
pub fn eval_local(sol: &LocalSolution, r: f64, alpha: f64) -> Option<FluxState> {
    let mut s = sol.samples.clone();
    if sol.problem.side == Side::Left {
        s.reverse();
    }
    eval_samples(&s, r, alpha)
}

/// Evaluates Picard samples ordered by increasing `r`: the flux is
/// interpolated linearly and `w` integrates `phi` of it exactly from the
/// left grid point, matching the quadrature used in [`apply_t`].
pub fn eval_samples(s: &[FluxState], r: f64, alpha: f64) -> Option<FluxState> {
    let (lo, hi) = (s.first()?.r, s.last()?.r);
    let slack = 1e-14 * hi.abs().max(1.0);
    if s.len() < 2 || r < lo - slack || r > hi + slack {
        return None;
    }
    let i = s.partition_point(|x| x.r <= r).clamp(1, s.len() - 1) - 1;
    let (a, b) = (s[i], s[i + 1]);
    let t = if b.r != a.r { (r - a.r) / (b.r - a.r) } else { 0.0 };
    let v = a.v + t * (b.v - a.v);
    // v = -x in the map, and w' = phi(v)
    let w = a.w + phi_cell(a.r, r, a.v, v, alpha);
    Some(FluxState::new(r, w, v))
}

/// `int phi(v)` over `[ra, rb]` for `v` linear between `va` and `vb`.
pub fn phi_integral(ra: f64, rb: f64, va: f64, vb: f64, alpha: f64) -> f64 {
    phi_cell(ra, rb, va, vb, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(alpha: f64, a: f64, big_a: f64, n: u32) -> Params {
        Params::new(alpha, a, big_a, n).unwrap()
    }

    #[test]
    fn delta_examples() {
        let p3 = params(0.0, 1.0, 1.0, 3);
        assert!((picard_delta_bound(&p3, Regime::Eq2) - 1.0).abs() < 1e-15);
        assert!((picard_delta(&p3, Regime::Eq2, 1.0) - 0.5).abs() < 1e-15);
        let p1 = params(0.0, 1.0, 1.0, 1);
        assert!((picard_delta_bound(&p1, Regime::Eq2) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((picard_delta(&p1, Regime::Eq2, 1.0) - 0.288_675_134_594_812_9).abs() < 1e-12);
        for &(alpha, a, b, n) in &[(1.0, 1.0, 2.0, 2), (-0.5, 0.5, 3.0, 4), (2.0, 1.0, 1.0, 1)] {
            let q = params(alpha, a, b, n);
            for reg in [Regime::Eq2, Regime::Eq3, Regime::Eq4, Regime::Eq5] {
                let d = picard_delta(&q, reg, 1.0);
                assert!(d < picard_delta_bound(&q, reg));
                assert_eq!(d, picard_delta(&q, reg, -7.5));
            }
        }
    }

    #[test]
    fn regime_tables() {
        let q = params(1.0, 1.0, 3.0, 2);
        assert_eq!(Regime::Eq2.coeff(&q), 1.0);
        assert_eq!(Regime::Eq3.coeff(&q), 1.0);
        assert_eq!(Regime::Eq4.coeff(&q), 3.0);
        assert_eq!(Regime::Eq5.coeff(&q), 3.0);
        assert_eq!(Regime::Eq2.weight(&q), 2.0);
        assert_eq!(Regime::Eq3.weight(&q), 6.0);
        assert_eq!(Regime::Eq4.weight(&q), 2.0);
        assert!((Regime::Eq5.weight(&q) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn regime_selection() {
        assert_eq!(select_regime(1.0, Side::Right).unwrap(), Regime::Eq2);
        assert_eq!(select_regime(-0.7, Side::Right).unwrap(), Regime::Eq4);
        assert_eq!(select_regime(0.3, Side::Left).unwrap(), Regime::Eq3);
        assert_eq!(select_regime(-0.3, Side::Left).unwrap(), Regime::Eq5);
        assert_eq!(select_regime(0.0, Side::Right), Err(Error::ZeroValueAtCritical));
    }

    #[test]
    fn map_of_constant_is_quadratic() {
        for (n, denom) in [(3u32, 6.0), (1, 2.0)] {
            let q = params(0.0, 1.0, 1.0, n);
            let prob = LocalProblem::new(0.0, 1.0, Regime::Eq2, Side::Right, 0.4).unwrap();
            let grid = prob.grid(33);
            let img = apply_t(&grid, &vec![1.0; grid.len()], &prob, &q).unwrap();
            for (r, t) in grid.iter().zip(&img.values) {
                assert!((t - (1.0 - r * r / denom)).abs() < 1e-15, "r={r} t={t}");
            }
            assert_eq!(img.values[0], 1.0);
        }
    }

    #[test]
    fn map_fixes_value_at_center() {
        let q = params(1.3, 0.5, 2.0, 3);
        for reg in [Regime::Eq2, Regime::Eq3, Regime::Eq4, Regime::Eq5] {
            let prob = LocalProblem::new(2.0, -0.4, reg, Side::Left, 0.1).unwrap();
            let grid = prob.grid(17);
            let img = apply_t(&grid, &vec![-0.4; 17], &prob, &q).unwrap();
            assert_eq!(img.values[0], -0.4);
        }
    }

    #[test]
    fn local_solution_matches_sinc() {
        let q = params(0.0, 1.0, 1.0, 3);
        let prob = LocalProblem::new(0.0, 1.0, Regime::Eq2, Side::Right, 0.5).unwrap();
        let sol = solve_local(&prob, &q, &PicardConfig::default()).unwrap();
        let exact = 0.5f64.sin() / 0.5;
        assert!((sol.endpoint.w - exact).abs() < 1e-6, "{}", sol.endpoint.w);
        // v = w' = cos(r)/r - sin(r)/r^2
        let dexact = 0.5f64.cos() / 0.5 - 0.5f64.sin() / 0.25;
        assert!((sol.endpoint.v - dexact).abs() < 1e-6);
        assert!(sol.sup_change <= 1e-13);
        assert!(sol.contraction < 1.0 / 3.0);
        assert_eq!(sol.samples[0].w, 1.0);
        assert_eq!(sol.samples[0].v, 0.0);
    }

    #[test]
    fn grid_refinement_is_second_order() {
        let q = params(0.0, 1.0, 1.0, 3);
        let prob = LocalProblem::new(0.0, 1.0, Regime::Eq2, Side::Right, 0.5).unwrap();
        let exact = 0.5f64.sin() / 0.5;
        let err = |samples| {
            let cfg = PicardConfig { samples, ..Default::default() };
            (solve_local(&prob, &q, &cfg).unwrap().endpoint.w - exact).abs()
        };
        let ratio = err(65) / err(129);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn initial_decay_and_concavity() {
        for &(alpha, a, n) in &[(0.0, 1.0, 3u32), (1.0, 2.0, 2), (-0.5, 1.0, 3), (2.0, 1.0, 1)] {
            let q = params(alpha, a, 3.0, n);
            let delta = picard_delta(&q, Regime::Eq2, 1.0);
            let prob = LocalProblem::new(0.0, 1.0, Regime::Eq2, Side::Right, delta).unwrap();
            let sol = solve_local(&prob, &q, &PicardConfig::default()).unwrap();
            let limit = -(1.0 + alpha) / (a * (q.n0() + 1.0));
            let first = sol.samples[1];
            assert!((first.v / first.r - limit).abs() < 1e-3 * limit.abs());
            for pair in sol.samples.windows(2) {
                assert!(pair[1].w < pair[0].w);
                assert!(pair[1].v < pair[0].v, "flux must keep decreasing");
            }
        }
    }

    #[test]
    fn odd_symmetry_when_a_equals_big_a() {
        let q = params(0.7, 1.5, 1.5, 3);
        let d = picard_delta(&q, Regime::Eq2, 1.0);
        let cfg = PicardConfig::default();
        let plus = solve_local(&LocalProblem::new(0.0, 1.0, Regime::Eq2, Side::Right, d).unwrap(), &q, &cfg).unwrap();
        let minus = solve_local(&LocalProblem::new(0.0, -1.0, Regime::Eq4, Side::Right, d).unwrap(), &q, &cfg).unwrap();
        for (x, y) in plus.samples.iter().zip(&minus.samples) {
            assert!((x.w + y.w).abs() < 1e-15);
            assert!((x.v + y.v).abs() < 1e-15);
        }
    }

    #[test]
    fn left_side_increases_towards_maximum() {
        let q = params(0.5, 1.0, 2.0, 3);
        let prob = LocalProblem::new(3.0, 0.8, Regime::Eq3, Side::Left, 0.05).unwrap();
        let sol = solve_local(&prob, &q, &PicardConfig::default()).unwrap();
        assert!(sol.endpoint.r < 3.0);
        assert!(sol.endpoint.w < 0.8);
        assert!(sol.endpoint.v > 0.0);
        assert!(LocalProblem::new(0.01, 1.0, Regime::Eq3, Side::Left, 0.02).is_err());
    }

    #[test]
    fn contraction_at_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(alpha, n) in &[(0.0, 3u32), (1.0, 2), (-0.5, 3), (2.0, 1)] {
            let q = params(alpha, 1.0, 2.0, n);
            let delta = picard_delta_bound(&q, Regime::Eq2);
            let prob = LocalProblem::new(0.0, 1.0, Regime::Eq2, Side::Right, delta).unwrap();
            let grid = prob.grid(257);
            for _ in 0..20 {
                let mut draw = || -> Vec<f64> {
                    let (a1, f1, a2, f2) = (rng.gen_range(-0.25..0.25), rng.gen_range(0.0..20.0), rng.gen_range(-0.25..0.25), rng.gen_range(0.0..20.0));
                    grid.iter().map(|&r| 1.0 + a1 * (f1 * r).sin() + a2 * (f2 * r).cos()).collect()
                };
                let (u, v) = (draw(), draw());
                let tu = apply_t(&grid, &u, &prob, &q).unwrap().values;
                let tv = apply_t(&grid, &v, &prob, &q).unwrap().values;
                let sup = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let ratio = sup(&tu, &tv) / sup(&u, &v);
                assert!(ratio <= 1.0 / 3.0 + 1e-3, "alpha {alpha}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn eval_local_reproduces_samples() {
        let q = params(2.0, 1.0, 1.0, 1);
        let prob = LocalProblem::new(1.0, 0.5, Regime::Eq2, Side::Right, 0.05).unwrap();
        let sol = solve_local(&prob, &q, &PicardConfig::default()).unwrap();
        for s in sol.samples.iter().step_by(16) {
            let e = eval_local(&sol, s.r, q.alpha).unwrap();
            assert!((e.w - s.w).abs() < 1e-14);
        }
        assert!(eval_local(&sol, 2.0, q.alpha).is_none());
    }
}
