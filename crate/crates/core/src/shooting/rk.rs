//! Dormand-Prince 5(4) with first-same-as-last stages and Hairer's
//! continuous extension of order 4.

use serde::{Deserialize, Serialize};

pub type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous output of one accepted step on `[r0, r0 + h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseStep {
    pub r0: f64,
    pub h: f64,
    rcont: [State; 5],
}

impl DenseStep {
    pub fn r1(&self) -> f64 {
        self.r0 + self.h
    }

    pub fn eval(&self, r: f64) -> State {
        let s = (r - self.r0) / self.h;
        let s1 = 1.0 - s;
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            let c = |j: usize| self.rcont[j][i];
            *o = c(0) + s * (c(1) + s1 * (c(2) + s * (c(3) + s1 * c(4))));
        }
        out
    }
}

/// Result of one trial step.
#[derive(Debug, Clone, Copy)]
pub struct Trial {
    pub y1: State,
    /// Derivative at the end point, reused as the next first stage.
    pub k7: State,
    /// Weighted RMS error estimate; the step is acceptable when `<= 1`.
    pub err: f64,
    pub dense: DenseStep,
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

/// One Dormand-Prince step from `(r, y)` with first stage `k1 = f(r, y)`.
pub fn step<F>(f: &F, r: f64, y: &State, k1: &State, h: f64, rtol: f64, atol: f64) -> Trial
where
    F: Fn(f64, &State) -> State,
{
    let k2 = f(r + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(r + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(r + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(r + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(
        r + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(r + h, &y1);

    let mut sq = 0.0;
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sk = atol + rtol * y[i].abs().max(y1[i].abs());
        sq += (e / sk).powi(2);
    }
    let err = (sq / 2.0).sqrt();

    let mut rcont = [[0.0; 2]; 5];
    for i in 0..2 {
        let ydiff = y1[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        rcont[0][i] = y[i];
        rcont[1][i] = ydiff;
        rcont[2][i] = bspl;
        rcont[3][i] = ydiff - h * k7[i] - bspl;
        rcont[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    let err = if err.is_finite() && y1.iter().all(|x| x.is_finite()) { err } else { f64::INFINITY };
    Trial { y1, k7, err, dense: DenseStep { r0: r, h, rcont } }
}

/// Step size factor from an error estimate.
pub fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        return 5.0;
    }
    if !err.is_finite() {
        return 0.1;
    }
    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
}

/// Starting step from the size of the state and its derivative.
pub fn initial_step(y: &State, k1: &State, rtol: f64, atol: f64, h_max: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..2 {
        let sk = atol + rtol * y[i].abs();
        d0 += (y[i] / sk).powi(2);
        d1 += (k1[i] / sk).powi(2);
    }
    let h = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * (d0 / d1).sqrt() };
    h.min(h_max).min(1e-2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate<F: Fn(f64, &State) -> State>(f: F, y0: State, r_end: f64, tol: f64) -> (State, Vec<DenseStep>) {
        let (mut r, mut y) = (0.0, y0);
        let mut k1 = f(r, &y);
        let mut h = initial_step(&y, &k1, tol, tol, r_end);
        let mut steps = Vec::new();
        while r < r_end {
            let h_try = h.min(r_end - r);
            let t = step(&f, r, &y, &k1, h_try, tol, tol);
            h = h_try * step_factor(t.err);
            if t.err <= 1.0 {
                steps.push(t.dense);
                r += h_try;
                y = t.y1;
                k1 = t.k7;
            }
        }
        (y, steps)
    }

    #[test]
    fn harmonic_oscillator() {
        let f = |_r: f64, y: &State| [y[1], -y[0]];
        let (y, steps) = integrate(f, [0.0, 1.0], 10.0, 1e-12);
        assert!((y[0] - 10f64.sin()).abs() < 1e-10);
        assert!((y[1] - 10f64.cos()).abs() < 1e-10);
        for st in steps.iter().step_by(7) {
            for th in [0.13, 0.5, 0.91] {
                let r = st.r0 + th * st.h;
                let d = st.eval(r);
                assert!((d[0] - r.sin()).abs() < 1e-9, "dense at {r}");
            }
            assert_eq!(st.eval(st.r0)[0], st.rcont[0][0]);
        }
    }

    #[test]
    fn fifth_order_on_polynomial() {
        // y' = 5 r^4 is integrated exactly by a fifth-order method
        let f = |r: f64, _y: &State| [5.0 * r.powi(4), 0.0];
        let k1 = f(0.0, &[0.0, 0.0]);
        let t = step(&f, 0.0, &[0.0, 0.0], &k1, 1.0, 1e-8, 1e-8);
        assert!((t.y1[0] - 1.0).abs() < 1e-14);
    }
}
