//! Dormand–Prince 5(4) with local extrapolation and a standard
//! step-size controller. Small fixed-size systems only.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub rtol: T,
    pub atol: T,
}

impl<T: Scalar> Tolerance<T> {
    pub fn new(rtol: T, atol: T) -> Self {
        Self { rtol, atol }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

const MAX_STEPS: usize = 1_000_000;

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`, starting with step `h0`
/// (or a heuristic if zero). Returns the state at `t1` and the last accepted
/// step size.
pub fn integrate<T, F, const N: usize>(
    f: &F,
    t0: T,
    y0: [T; N],
    t1: T,
    h0: T,
    tol: Tolerance<T>,
    stats: &mut Stats,
) -> Result<([T; N], T)>
where
    T: Scalar,
    F: Fn(T, &[T; N]) -> [T; N],
{
    if t1 == t0 {
        return Ok((y0, h0));
    }
    if !(t1 > t0) {
        return Err(Error::Solver(format!("integration must move forward: {t0} -> {t1}")));
    }
    let c = |x: f64| T::lit(x);
    let (c2, c3, c4, c5) = (c(1.0 / 5.0), c(3.0 / 10.0), c(4.0 / 5.0), c(8.0 / 9.0));
    let a21 = c(1.0 / 5.0);
    let (a31, a32) = (c(3.0 / 40.0), c(9.0 / 40.0));
    let (a41, a42, a43) = (c(44.0 / 45.0), c(-56.0 / 15.0), c(32.0 / 9.0));
    let (a51, a52, a53, a54) = (c(19372.0 / 6561.0), c(-25360.0 / 2187.0), c(64448.0 / 6561.0), c(-212.0 / 729.0));
    let (a61, a62, a63, a64, a65) =
        (c(9017.0 / 3168.0), c(-355.0 / 33.0), c(46732.0 / 5247.0), c(49.0 / 176.0), c(-5103.0 / 18656.0));
    let (b1, b3, b4, b5, b6) =
        (c(35.0 / 384.0), c(500.0 / 1113.0), c(125.0 / 192.0), c(-2187.0 / 6784.0), c(11.0 / 84.0));
    let (e1, e3, e4, e5, e6, e7) = (
        c(71.0 / 57600.0),
        c(-71.0 / 16695.0),
        c(71.0 / 1920.0),
        c(-17253.0 / 339200.0),
        c(22.0 / 525.0),
        c(-1.0 / 40.0),
    );

    let span = t1 - t0;
    let mut h = if h0 > T::zero() { h0.min(span) } else { span * c(1e-3) };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut last_h = h;

    let axpy = |y: &[T; N], terms: &[(T, &[T; N])], h: T| -> [T; N] {
        let mut out = *y;
        for i in 0..N {
            let mut acc = T::zero();
            for (coef, k) in terms {
                acc = acc + *coef * k[i];
            }
            out[i] = out[i] + h * acc;
        }
        out
    };

    for _ in 0..MAX_STEPS {
        if t >= t1 {
            return Ok((y, last_h));
        }
        let final_step = t + h >= t1;
        if final_step {
            h = t1 - t;
        }
        let k2 = f(t + c2 * h, &axpy(&y, &[(a21, &k1)], h));
        let k3 = f(t + c3 * h, &axpy(&y, &[(a31, &k1), (a32, &k2)], h));
        let k4 = f(t + c4 * h, &axpy(&y, &[(a41, &k1), (a42, &k2), (a43, &k3)], h));
        let k5 = f(t + c5 * h, &axpy(&y, &[(a51, &k1), (a52, &k2), (a53, &k3), (a54, &k4)], h));
        let k6 = f(t + h, &axpy(&y, &[(a61, &k1), (a62, &k2), (a63, &k3), (a64, &k4), (a65, &k5)], h));
        let y_new = axpy(&y, &[(b1, &k1), (b3, &k3), (b4, &k4), (b5, &k5), (b6, &k6)], h);
        let k7 = f(t + h, &y_new);

        let mut err = T::zero();
        for i in 0..N {
            let e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            stats.rejected += 1;
            h = h * c(0.1);
        } else if err <= T::one() {
            stats.accepted += 1;
            t = if final_step { t1 } else { t + h };
            y = y_new;
            k1 = k7;
            last_h = h;
            let factor = if err == T::zero() { c(5.0) } else { (c(0.9) * err.powf(c(-0.2))).min(c(5.0)) };
            h = h * factor.max(c(0.2));
        } else {
            stats.rejected += 1;
            h = h * (c(0.9) * err.powf(c(-0.2))).max(c(0.1));
        }
        if h <= T::epsilon() * c(16.0) * t.abs().max(T::min_positive_value()) {
            return Err(Error::Solver(format!("step size underflow at t = {t}")));
        }
    }
    Err(Error::Solver(format!("step budget of {MAX_STEPS} exhausted")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let f = |_t: f64, y: &[f64; 1]| [-y[0]];
        let mut st = Stats::default();
        let (y, _) = integrate(&f, 0.0, [1.0], 2.0, 0.0, Tolerance::new(1e-12, 1e-14), &mut st).unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-11);
        assert!(st.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut st = Stats::default();
        let (y, _) = integrate(&f, 0.0, [0.0, 1.0], 3.0, 0.0, Tolerance::new(1e-12, 1e-14), &mut st).unwrap();
        assert!((y[0] - 3.0f64.sin()).abs() < 1e-10);
        assert!((y[1] - 3.0f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn backwards_is_an_error() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let mut st = Stats::default();
        assert!(integrate(&f, 1.0, [1.0], 0.0, 0.0, Tolerance::new(1e-8, 1e-8), &mut st).is_err());
    }

    #[test]
    fn blow_up_reports_solver_failure() {
        // y' = y², y(0) = 1 blows up at t = 1
        let f = |_t: f64, y: &[f64; 1]| [y[0] * y[0]];
        let mut st = Stats::default();
        let r = integrate(&f, 0.0, [1.0], 2.0, 0.0, Tolerance::new(1e-10, 1e-12), &mut st);
        assert!(matches!(r, Err(Error::Solver(_))));
    }
}
