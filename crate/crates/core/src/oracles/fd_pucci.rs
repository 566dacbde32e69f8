//! Monotone finite differences for the radial Pucci eigenproblem at `alpha = 0`.
//!
//! For a radial function the Pucci maximal operator is
//! `max over g1, g2 in {a, A} of g1 u'' + g2 (N - 1) u' / r`. On the mesh
//! `r_i = i h` the second derivative is centred, the drift is centred where
//! that keeps the scheme monotone for every coefficient pair and upwinded
//! otherwise, and symmetry gives `u''(0) ~ 2 (u_1 - u_0) / h^2` at the centre.
//!
//! The first eigenvalue of each cone comes from nonlinear inverse power
//! iteration; each step solves a Bellman equation by policy iteration and
//! the Collatz-Wielandt ratios bracket the discrete eigenvalue.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::OracleResult;
use crate::error::{Error, Result};
use crate::radial_operator::{Params, Sign};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdResult {
    pub estimate: OracleResult,
    /// Discrete eigenvalue on the mesh with half as many nodes.
    pub coarse_value: f64,
    pub nodes: usize,
    pub power_iterations: usize,
    pub policy_iterations: usize,
}

/// Coefficient pair at one node.
type Policy = Vec<(bool, bool)>;

struct Scheme {
    n: usize,
    h: f64,
    lower: f64,
    upper: f64,
    drift: f64,
    /// Nodes from which the centred drift is monotone for all pairs.
    central_from: usize,
}

impl Scheme {
    fn new(p: &Params, nodes: usize) -> Self {
        let n = nodes - 1;
        let drift = p.dim as f64 - 1.0;
        let central_from = (p.upper * drift / (2.0 * p.lower)).ceil() as usize;
        Scheme { n, h: 1.0 / n as f64, lower: p.lower, upper: p.upper, drift, central_from: central_from.max(1) }
    }

    fn gamma(&self, hi: bool) -> f64 {
        if hi {
            self.upper
        } else {
            self.lower
        }
    }

    /// Second difference and drift difference at node `i` (unknowns `0..n`,
    /// `u_n = 0`), as `(coefficient of u_{i-1}, u_i, u_{i+1})`.
    fn stencils(&self, i: usize) -> ([f64; 3], [f64; 3]) {
        let h2 = self.h * self.h;
        if i == 0 {
            return ([0.0, -2.0 / h2, 2.0 / h2], [0.0, -2.0 / h2, 2.0 / h2]);
        }
        let second = [1.0 / h2, -2.0 / h2, 1.0 / h2];
        let r = i as f64 * self.h;
        let c = self.drift / r;
        let first = if i >= self.central_from {
            [-c / (2.0 * self.h), 0.0, c / (2.0 * self.h)]
        } else {
            [0.0, -c / self.h, c / self.h]
        };
        (second, first)
    }

    fn value_at(&self, u: &[f64], i: usize) -> [f64; 3] {
        let get = |j: isize| if j < 0 || j as usize >= self.n { 0.0 } else { u[j as usize] };
        let i = i as isize;
        [get(i - 1), get(i), get(i + 1)]
    }

    /// `L_g u` at node `i`.
    fn apply(&self, u: &[f64], i: usize, pol: (bool, bool)) -> f64 {
        let (s, f) = self.stencils(i);
        let v = self.value_at(u, i);
        let d2: f64 = s.iter().zip(&v).map(|(a, b)| a * b).sum();
        let d1: f64 = f.iter().zip(&v).map(|(a, b)| a * b).sum();
        self.gamma(pol.0) * d2 + self.gamma(pol.1) * d1
    }

    /// Pair maximizing (`maximize`) or minimizing `L_g u` at node `i`.
    fn best(&self, u: &[f64], i: usize, maximize: bool) -> (bool, bool) {
        let (s, f) = self.stencils(i);
        let v = self.value_at(u, i);
        let d2: f64 = s.iter().zip(&v).map(|(a, b)| a * b).sum();
        let d1: f64 = f.iter().zip(&v).map(|(a, b)| a * b).sum();
        if i == 0 {
            // all eigenvalues of the Hessian coincide at the centre
            let hi = (d2 > 0.0) == maximize;
            return (hi, hi);
        }
        ((d2 > 0.0) == maximize, (d1 > 0.0) == maximize)
    }

    /// Solves `-L_pol u = f` (tridiagonal M-matrix).
    fn solve_linear(&self, pol: &Policy, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut lo = vec![0.0; n];
        let mut di = vec![0.0; n];
        let mut up = vec![0.0; n];
        for i in 0..n {
            let (s, fd) = self.stencils(i);
            let (g1, g2) = (self.gamma(pol[i].0), self.gamma(pol[i].1));
            lo[i] = -(g1 * s[0] + g2 * fd[0]);
            di[i] = -(g1 * s[1] + g2 * fd[1]);
            up[i] = -(g1 * s[2] + g2 * fd[2]);
        }
        // Thomas algorithm for a general tridiagonal matrix
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = up[0] / di[0];
        d[0] = f[0] / di[0];
        for i in 1..n {
            let m = di[i] - lo[i] * c[i - 1];
            c[i] = up[i] / m;
            d[i] = (f[i] - lo[i] * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }

    /// Howard's policy iteration for `-max_g L_g u = f` (`maximize`) or
    /// `-min_g L_g u = f`.
    fn solve_bellman(&self, f: &[f64], start: Policy, maximize: bool) -> Result<(Vec<f64>, Policy, usize)> {
        let mut pol = start;
        let mut seen = HashSet::new();
        for it in 1..=200 {
            let u = self.solve_linear(&pol, f);
            let next: Policy = (0..self.n).map(|i| self.improve(&u, i, pol[i], maximize)).collect();
            if next == pol {
                return Ok((u, pol, it));
            }
            if !seen.insert(next.clone()) {
                return Err(Error::PolicyCycleDetected);
            }
            pol = next;
        }
        Err(Error::NonConvergence { method: "policy iteration", detail: "200 iterations".into() })
    }

    /// Keeps the current pair unless another one is strictly better, so
    /// ties on the sign boundaries do not flip the policy back and forth.
    fn improve(&self, u: &[f64], i: usize, cur: (bool, bool), maximize: bool) -> (bool, bool) {
        let cand = self.best(u, i, maximize);
        let (vc, vn) = (self.apply(u, i, cur), self.apply(u, i, cand));
        let scale = 1e-12 * vc.abs().max(vn.abs());
        let better = if maximize { vn > vc + scale } else { vn < vc - scale };
        if better {
            cand
        } else {
            cur
        }
    }
}

fn eigen(p: &Params, sign: Sign, nodes: usize, tol: f64) -> Result<(f64, f64, usize, usize)> {
    let sch = Scheme::new(p, nodes);
    let n = sch.n;
    // the + cone solves -max L u = f, the - cone -min L z = f with z = -u
    let maximize = sign == Sign::Plus;
    let mut u: Vec<f64> = (0..n).map(|i| 1.0 - (i as f64 * sch.h).powi(2)).collect();
    let mut pol: Policy = vec![(false, false); n];
    let mut policy_total = 0;
    for it in 1..=500 {
        let top = u.iter().cloned().fold(0.0, f64::max);
        let f: Vec<f64> = u.iter().map(|x| x / top).collect();
        let (next, new_pol, pits) = sch.solve_bellman(&f, pol, maximize)?;
        policy_total += pits;
        pol = new_pol;
        if next.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::NonConvergence { method: "inverse power", detail: "lost positivity".into() });
        }
        let ratios = f.iter().zip(&next).map(|(a, b)| a / b);
        let (lo, hi) = ratios.fold((f64::INFINITY, 0.0f64), |(l, h), x| (l.min(x), h.max(x)));
        u = next;
        if hi - lo <= tol * lo {
            return Ok((0.5 * (lo + hi), 0.5 * (hi - lo), it, policy_total));
        }
    }
    Err(Error::NonConvergence { method: "inverse power", detail: "500 iterations".into() })
}

/// First half-eigenvalue of the ball for `alpha = 0` on `nodes` mesh points.
pub fn fd_pucci_mu1(p: &Params, sign: Sign, nodes: usize) -> Result<FdResult> {
    p.validate()?;
    if p.alpha != 0.0 {
        return Err(Error::InvalidParams("the finite-difference oracle needs alpha = 0".into()));
    }
    if nodes < 16 {
        return Err(Error::InvalidParams("at least 16 nodes are needed".into()));
    }
    let (value, bracket, power, policy) = eigen(p, sign, nodes, 1e-10)?;
    let (coarse, _, _, _) = eigen(p, sign, nodes / 2 + 1, 1e-10)?;
    // first-order scheme: the fine error is about the coarse-fine difference
    let err = (coarse - value).abs() + bracket;
    Ok(FdResult {
        estimate: OracleResult::new(value, "fd-policy-inverse-power", Some(err)),
        coarse_value: coarse,
        nodes,
        power_iterations: power,
        policy_iterations: policy,
    })
}
