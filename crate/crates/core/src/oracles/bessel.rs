//! `J_nu` for integer and half-integer `nu >= 0` and its positive zeros.
//!
//! The power series is summed in double-double arithmetic so that the
//! cancellation between its large alternating terms stays below `1e-15`
//! up to the switch point, where the Hankel expansion takes over.

use super::OracleResult;
use crate::error::{Error, Result};

/// Below this argument the series is used.
pub const SWITCH: f64 = 25.0;
/// Largest order handled (`N <= 12`).
pub const MAX_ORDER: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
struct Dd(f64, f64);

impl Dd {
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }

    fn add(self, o: Dd) -> Dd {
        let Dd(s, e) = Dd::two_sum(self.0, o.0);
        let e = e + self.1 + o.1;
        Dd::two_sum(s, e)
    }

    fn mul_f(self, b: f64) -> Dd {
        let p = self.0 * b;
        let e = self.0.mul_add(b, -p);
        Dd::two_sum(p, e + self.1 * b)
    }

    fn div_f(self, b: f64) -> Dd {
        let q = self.0 / b;
        let r = self.add(Dd(q, 0.0).mul_f(-b));
        Dd::two_sum(q, r.0 / b)
    }
}

/// `Gamma(x)` for `x` a positive multiple of one half.
fn gamma_half(x: f64) -> f64 {
    let twice = (2.0 * x).round();
    debug_assert!((2.0 * x - twice).abs() < 1e-12 && twice >= 1.0);
    let (mut g, mut y) = if twice as u64 % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while y < x - 0.25 {
        g *= y;
        y += 1.0;
    }
    g
}

fn j_series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = Dd(half.powf(nu) / gamma_half(nu + 1.0), 0.0);
    let mut sum = term;
    for m in 1..400 {
        let m = m as f64;
        term = term.mul_f(-q).div_f(m * (m + nu));
        sum = sum.add(term);
        if term.0.abs() < 1e-32 * sum.0.abs().max(1e-300) {
            break;
        }
    }
    sum.0 + sum.1
}

fn j_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (0.0, 0.0);
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        let t = a / x.powi(k);
        if t.abs() > last {
            break;
        }
        last = t.abs();
        match k % 4 {
            0 => p += t,
            1 => q += t,
            2 => p -= t,
            _ => q -= t,
        }
        if last < 1e-18 {
            break;
        }
        let odd = (2 * k + 1) as f64;
        a *= (mu - odd * odd) / ((k + 1) as f64 * 8.0);
    }
    let chi = x - (0.5 * nu + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Bessel function of the first kind.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    if x <= SWITCH {
        j_series(nu, x)
    } else {
        j_hankel(nu, x)
    }
}

fn check_order(nu: f64) -> Result<()> {
    let twice = 2.0 * nu;
    if !(0.0..=MAX_ORDER).contains(&nu) || (twice - twice.round()).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!(
            "Bessel order {nu} is not a half-integer in [0, {MAX_ORDER}]"
        )));
    }
    Ok(())
}

/// First `count` positive zeros of `J_nu`, by a scan with step `0.25`
/// followed by bisection to the last bit.
pub fn bessel_zeros(nu: f64, count: usize) -> Result<Vec<f64>> {
    check_order(nu)?;
    let mut zeros = Vec::with_capacity(count);
    // the first zero lies above nu
    let mut x = nu + 0.1;
    let mut fx = bessel_j(nu, x);
    while zeros.len() < count {
        let y = x + 0.25;
        let fy = bessel_j(nu, y);
        if fx * fy <= 0.0 {
            let (mut lo, mut hi, f_lo) = (x, y, fx);
            while hi - lo > 4.0 * f64::EPSILON * hi {
                let m = 0.5 * (lo + hi);
                if bessel_j(nu, m) * f_lo > 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        x = y;
        fx = fy;
    }
    Ok(zeros)
}

/// `mu_k = j_{N/2-1, k}^2`, the ball eigenvalues of the radial Laplacian.
pub fn bessel_mu(dim: u32, k: usize) -> Result<OracleResult> {
    if dim < 2 || k == 0 {
        return Err(Error::InvalidParams("bessel_mu needs N >= 2 and k >= 1".into()));
    }
    let nu = dim as f64 / 2.0 - 1.0;
    let z = bessel_zeros(nu, k)?[k - 1];
    // evaluation error below 1e-15 over a slope of at least 0.1 near a zero,
    // plus the bisection width
    let zero_err = 1e-14 + 8.0 * f64::EPSILON * z;
    Ok(OracleResult::new(z * z, "bessel-zero-bisection", Some(2.0 * z * zero_err)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn known_values() {
        // J_0(1), J_1(1) and J_0(30) to 16 digits
        assert!((bessel_j(0.0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1.0, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(0.0, 30.0) - (-0.086_367_983_581_040_23)).abs() < 1e-14);
    }

    #[test]
    fn half_integer_closed_forms() {
        for &x in &[0.3, 2.0, 7.5, 13.0, 24.0, 26.0, 40.0] {
            let c = (2.0 / (PI * x)).sqrt();
            assert!((bessel_j(0.5, x) - c * x.sin()).abs() < 1e-14, "x = {x}");
            let j32 = c * (x.sin() / x - x.cos());
            assert!((bessel_j(1.5, x) - j32).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn branches_agree_on_overlap() {
        for twice in 0..=10 {
            let nu = twice as f64 / 2.0;
            for i in 0..=20 {
                let x = 20.0 + i as f64 * 0.25;
                let d = (j_series(nu, x) - j_hankel(nu, x)).abs();
                assert!(d < 1e-12, "nu = {nu}, x = {x}: {d:e}");
            }
        }
    }

    #[test]
    fn zeros_of_low_orders() {
        let z0 = bessel_zeros(0.0, 3).unwrap();
        let want = [2.404_825_557_695_773, 5.520_078_110_286_311, 8.653_727_912_911_013];
        for (a, b) in z0.iter().zip(want) {
            assert!((a - b).abs() < 1e-13);
        }
        let mu = bessel_mu(2, 1).unwrap();
        assert!((mu.value - 5.783_185_962_946_784).abs() < 1e-12);
        assert!(bessel_zeros(0.7, 1).is_err());
        assert!(bessel_mu(1, 1).is_err());
    }

    #[test]
    fn three_dimensional_ball_is_exact() {
        for k in 1..=16 {
            let mu = bessel_mu(3, k).unwrap();
            let exact = (k as f64 * PI).powi(2);
            assert!((mu.value - exact).abs() <= mu.certified_error.unwrap() + 1e-14 * exact, "k = {k}");
        }
    }
}
