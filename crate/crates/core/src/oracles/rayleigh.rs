//! Weighted Rayleigh quotient
//!
//! ```text
//! Q(u) = int |u'|^q r^N0 dr / int |u|^q r^N0 dr,     q = alpha + 2
//! ```
//!
//! minimized over continuous piecewise-linear functions on a uniform mesh.
//! A minimizer satisfies `(r^N0 |u'|^alpha u')' = -Q r^N0 |u|^alpha u`,
//! which is `|u'|^alpha (u'' + (N-1) u'/r) = -(Q / (1 + alpha)) |u|^alpha u`:
//! the eigenvalue of `|u'|^alpha Delta u` is `Q / (1 + alpha)`.
//!
//! The minimization uses gradient steps preconditioned by the weighted
//! stiffness matrix of the current iterate, with an exact line search on
//! the great circle through the iterate and the step.

use serde::{Deserialize, Serialize};

use super::OracleResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadialDomain {
    /// `0 <= r < radius`, no condition at the centre.
    Ball { radius: f64 },
    /// `inner < r < outer`, zero at both ends.
    Annulus { inner: f64, outer: f64 },
}

impl RadialDomain {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            RadialDomain::Ball { radius } => (0.0, radius),
            RadialDomain::Annulus { inner, outer } => (inner, outer),
        }
    }

    fn validate(&self) -> Result<()> {
        let (c, b) = self.bounds();
        if !(c >= 0.0 && b > c && b.is_finite()) {
            return Err(Error::InvalidParams(format!("empty radial domain ({c}, {b})")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighResult {
    /// Mesh-extrapolated eigenvalue of `|u'|^alpha Delta u`.
    pub estimate: OracleResult,
    /// Value on the finest mesh; a discrete trial function, hence an
    /// upper bound up to the quadrature error of the denominator.
    pub upper_bound: f64,
    /// `(cells, minimal quotient)` for each mesh.
    pub quotients: Vec<(usize, f64)>,
    pub observed_order: Option<f64>,
}

const GAUSS: [(f64, f64); 6] = [
    (0.033_765_242_898_423_99, 0.085_662_246_189_585_17),
    (0.169_395_306_766_867_7, 0.180_380_786_524_069_3),
    (0.380_690_406_958_401_5, 0.233_956_967_286_345_5),
    (0.619_309_593_041_598_5, 0.233_956_967_286_345_5),
    (0.830_604_693_233_132_3, 0.180_380_786_524_069_3),
    (0.966_234_757_101_576, 0.085_662_246_189_585_17),
];

struct Mesh {
    q: f64,
    h: f64,
    nodes: Vec<f64>,
    /// Exact `int r^N0` over each cell.
    cell_weight: Vec<f64>,
    /// `r^N0` at the Gauss points of each cell, times the Gauss weight and `h`.
    gauss_weight: Vec<[f64; 6]>,
    free: Vec<bool>,
}

impl Mesh {
    fn new(alpha: f64, dim: u32, domain: RadialDomain, cells: usize) -> Self {
        let (c, b) = domain.bounds();
        let n0 = (dim as f64 - 1.0) * (1.0 + alpha);
        let h = (b - c) / cells as f64;
        let nodes: Vec<f64> = (0..=cells).map(|i| if i == cells { b } else { c + h * i as f64 }).collect();
        let cell_weight = (0..cells)
            .map(|i| (nodes[i + 1].powf(n0 + 1.0) - nodes[i].powf(n0 + 1.0)) / (n0 + 1.0))
            .collect();
        let gauss_weight = (0..cells)
            .map(|i| {
                let mut g = [0.0; 6];
                for (k, &(x, w)) in GAUSS.iter().enumerate() {
                    g[k] = w * h * (nodes[i] + x * h).powf(n0);
                }
                g
            })
            .collect();
        let mut free = vec![true; cells + 1];
        free[cells] = false;
        if let RadialDomain::Annulus { .. } = domain {
            free[0] = false;
        }
        Mesh { q: alpha + 2.0, h, nodes, cell_weight, gauss_weight, free }
    }

    fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    fn num_den(&self, u: &[f64]) -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.cells() {
            let s = (u[i + 1] - u[i]) / self.h;
            num += self.cell_weight[i] * s.abs().powf(self.q);
            for (k, &(x, _)) in GAUSS.iter().enumerate() {
                let val = u[i] + x * (u[i + 1] - u[i]);
                den += self.gauss_weight[i][k] * val.abs().powf(self.q);
            }
        }
        (num, den)
    }

    fn quotient(&self, u: &[f64]) -> f64 {
        let (n, d) = self.num_den(u);
        n / d
    }

    /// Gradient of the quotient, zero on fixed nodes.
    fn gradient(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let (num, den) = self.num_den(u);
        let qv = num / den;
        let q = self.q;
        let mut g = vec![0.0; u.len()];
        for i in 0..self.cells() {
            let s = (u[i + 1] - u[i]) / self.h;
            let dn = q * self.cell_weight[i] * s.abs().powf(q - 2.0) * s / self.h;
            g[i + 1] += dn / den;
            g[i] -= dn / den;
            for (k, &(x, _)) in GAUSS.iter().enumerate() {
                let val = u[i] + x * (u[i + 1] - u[i]);
                let dd = if val == 0.0 { 0.0 } else { q * self.gauss_weight[i][k] * val.abs().powf(q - 2.0) * val };
                g[i] -= qv * dd * (1.0 - x) / den;
                g[i + 1] -= qv * dd * x / den;
            }
        }
        for (gi, &f) in g.iter_mut().zip(&self.free) {
            if !f {
                *gi = 0.0;
            }
        }
        (qv, g)
    }

    /// Solves `K d = g` with the stiffness matrix weighted by `|u'|^(q-2)`.
    fn precondition(&self, u: &[f64], g: &[f64]) -> Vec<f64> {
        let n = u.len();
        let slopes: Vec<f64> = (0..self.cells()).map(|i| ((u[i + 1] - u[i]) / self.h).abs()).collect();
        let floor = 1e-3 * slopes.iter().cloned().fold(0.0, f64::max);
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n];
        for i in 0..self.cells() {
            let c = self.cell_weight[i] * slopes[i].max(floor).powf(self.q - 2.0) / (self.h * self.h);
            diag[i] += c;
            diag[i + 1] += c;
            off[i] = -c;
        }
        // restrict to free nodes: fixed ones get an identity row
        for i in 0..n {
            if !self.free[i] {
                diag[i] = 1.0;
                off[i] = 0.0;
                if i > 0 {
                    off[i - 1] = 0.0;
                }
            }
        }
        thomas(&diag, &off, g)
    }
}

/// Symmetric tridiagonal solve; `off[i]` couples `i` and `i + 1`.
fn thomas(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off[i - 1] * c[i - 1];
        c[i] = if i + 1 < n { off[i] / m } else { 0.0 };
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn on_circle(u: &[f64], d: &[f64], theta: f64) -> Vec<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    u.iter().zip(d).map(|(a, b)| c * a - s * b).collect()
}

const MAX_ITERATIONS: usize = 3000;

/// Minimizes the discrete quotient from `u`, returning the minimizer.
fn minimize(mesh: &Mesh, mut u: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    let nu = norm(&u);
    u.iter_mut().for_each(|x| *x /= nu);
    let mut theta: f64 = 0.1;
    let mut q_prev = mesh.quotient(&u);
    let mut stalls = 0;
    for _ in 0..MAX_ITERATIONS {
        let (q0, g) = mesh.gradient(&u);
        let mut d = mesh.precondition(&u, &g);
        let proj: f64 = d.iter().zip(&u).map(|(a, b)| a * b).sum();
        d.iter_mut().zip(&u).for_each(|(x, y)| *x -= proj * y);
        let nd = norm(&d);
        if nd == 0.0 || !nd.is_finite() {
            return Ok((q0, u));
        }
        d.iter_mut().for_each(|x| *x /= nd);
        let phi = |t: f64| mesh.quotient(&on_circle(&u, &d, t));

        // bracket a minimum along the circle
        let mut t1 = theta.min(1.0);
        let mut f1 = phi(t1);
        let (mut ta, mut tc);
        if f1 < q0 {
            ta = 0.0;
            loop {
                let t2 = (2.0 * t1).min(std::f64::consts::FRAC_PI_2);
                let f2 = phi(t2);
                if f2 >= f1 || t2 == t1 {
                    tc = t2;
                    break;
                }
                ta = t1;
                t1 = t2;
                f1 = f2;
            }
        } else {
            let mut found = false;
            tc = t1;
            for _ in 0..60 {
                tc = t1;
                t1 *= 0.5;
                f1 = phi(t1);
                if f1 < q0 {
                    found = true;
                    break;
                }
            }
            if !found {
                return Ok((q0, u));
            }
            ta = 0.0;
        }
        // golden section on [ta, tc] around t1
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (ta, tc);
        let mut x1 = b - gr * (b - a);
        let mut x2 = a + gr * (b - a);
        let (mut f_x1, mut f_x2) = (phi(x1), phi(x2));
        while b - a > 1e-10 * b.max(1e-12) {
            if f_x1 < f_x2 {
                b = x2;
                x2 = x1;
                f_x2 = f_x1;
                x1 = b - gr * (b - a);
                f_x1 = phi(x1);
            } else {
                a = x1;
                x1 = x2;
                f_x1 = f_x2;
                x2 = a + gr * (b - a);
                f_x2 = phi(x2);
            }
        }
        let (t_best, f_best) = [(x1, f_x1), (x2, f_x2), (t1, f1)]
            .into_iter()
            .fold((0.0, q0), |acc, c| if c.1 < acc.1 { c } else { acc });
        if t_best == 0.0 {
            return Ok((q0, u));
        }
        theta = t_best;
        u = on_circle(&u, &d, t_best);
        let nu = norm(&u);
        u.iter_mut().for_each(|x| *x /= nu);
        if q_prev - f_best <= 1e-15 * f_best {
            stalls += 1;
            if stalls >= 3 {
                return Ok((f_best, u));
            }
        } else {
            stalls = 0;
        }
        q_prev = f_best;
    }
    Err(Error::NonConvergence { method: "rayleigh descent", detail: format!("{MAX_ITERATIONS} iterations") })
}

fn initial_guess(mesh: &Mesh, domain: RadialDomain) -> Vec<f64> {
    let (c, b) = domain.bounds();
    mesh.nodes
        .iter()
        .map(|&r| match domain {
            RadialDomain::Ball { .. } => (std::f64::consts::FRAC_PI_2 * r / b).cos(),
            RadialDomain::Annulus { .. } => (std::f64::consts::PI * (r - c) / (b - c)).sin(),
        })
        .collect()
}

fn refine(u: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * u.len() - 1);
    for w in u.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(u[u.len() - 1]);
    out
}

/// Minimal quotient on one mesh.
pub fn discrete_quotient(alpha: f64, dim: u32, domain: RadialDomain, cells: usize) -> Result<f64> {
    domain.validate()?;
    let mesh = Mesh::new(alpha, dim, domain, cells.max(2));
    Ok(minimize(&mesh, initial_guess(&mesh, domain))?.0)
}

/// `lambda_eq` of `|u'|^alpha Delta u` on `domain`, from the minimal
/// quotient on meshes of `cells`, `2 cells` and `4 cells` cells.
pub fn rayleigh_lambda_eq(alpha: f64, dim: u32, domain: RadialDomain, cells: usize) -> Result<RayleighResult> {
    if !(alpha > -1.0) || dim == 0 {
        return Err(Error::InvalidParams("alpha must exceed -1 and N >= 1".into()));
    }
    domain.validate()?;
    let scale = 1.0 + alpha;
    let mut quotients = Vec::new();
    let mut u: Option<Vec<f64>> = None;
    for level in 0..3 {
        let n = cells.max(4) << level;
        let mesh = Mesh::new(alpha, dim, domain, n);
        let start = match u.take() {
            Some(prev) => refine(&prev),
            None => initial_guess(&mesh, domain),
        };
        let (qv, sol) = minimize(&mesh, start)?;
        quotients.push((n, qv));
        u = Some(sol);
    }
    let (q1, q2, q3) = (quotients[0].1, quotients[1].1, quotients[2].1);
    let ratio = (q1 - q2) / (q2 - q3);
    let (value, order) = if ratio > 1.0 && ratio.is_finite() {
        let p = ratio.log2();
        (q3 - (q2 - q3) / (ratio - 1.0), Some(p))
    } else {
        (q3, None)
    };
    let err = (q3 - value).abs().max((q2 - q3).abs() * 1e-3);
    Ok(RayleighResult {
        estimate: OracleResult::new(value / scale, "rayleigh-p1-extrapolated", Some(err / scale)),
        upper_bound: q3 / scale,
        quotients,
        observed_order: order,
    })
}

/// Quotient of `u = (r - c)(b - r)` on `(c, b)`, divided by `1 + alpha`:
/// an upper bound for `lambda_eq` of the annulus.
pub fn parabola_bound(alpha: f64, dim: u32, c: f64, b: f64) -> f64 {
    let n0 = (dim as f64 - 1.0) * (1.0 + alpha);
    let q = alpha + 2.0;
    let cells = 2000;
    let h = (b - c) / cells as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..cells {
        for &(x, w) in &GAUSS {
            let r = c + (i as f64 + x) * h;
            let wt = w * h * r.powf(n0);
            num += wt * (2.0 * r - c - b).abs().powf(q);
            den += wt * ((r - c) * (b - r)).abs().powf(q);
        }
    }
    num / den / (1.0 + alpha)
}
