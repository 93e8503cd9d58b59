//! Dormand-Prince 5(4) stepper with the classical fourth-order continuous
//! extension.
//!
//! The stepper is driven one accepted step at a time so that callers can
//! inspect each step (event detection, coordinate changes) before asking for
//! the next one.

use crate::error::{Error, Result};

pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorNorm {
    /// Each component is scaled by its own magnitude.
    Componentwise,
    /// Every component is scaled by the Euclidean norm of the state, which
    /// gives relative control near an equilibrium sitting at the chart origin.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub norm: ErrorNorm,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-40,
            norm: ErrorNorm::Euclidean,
        }
    }
}

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

/// One accepted step together with its interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    coeffs: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn y0(&self) -> [f64; N] {
        self.coeffs[0]
    }

    pub fn y1(&self) -> [f64; N] {
        let mut y = [0.0; N];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.coeffs[0][i] + self.coeffs[1][i];
        }
        y
    }

    /// Interpolated state at `t` (meaningful for `t` within the step).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        self.eval_fraction(s)
    }

    pub fn eval_fraction(&self, s: f64) -> [f64; N] {
        let s1 = 1.0 - s;
        let c = &self.coeffs;
        let mut y = [0.0; N];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])));
        }
        y
    }

    /// Applies the same affine shift to every interpolated value.
    pub fn shift_origin(&mut self, offset: &[f64; N]) {
        for (c, o) in self.coeffs[0].iter_mut().zip(offset) {
            *c += o;
        }
    }
}

pub struct Stepper<'a, S, const N: usize> {
    sys: &'a S,
    tol: Tolerances,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    h_max: f64,
    dir: f64,
    rejected_last: bool,
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
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

fn euclid<const N: usize>(y: &[f64; N]) -> f64 {
    // scaled so that tiny states do not underflow when squared
    let m = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * y.iter().map(|v| (v / m).powi(2)).sum::<f64>().sqrt()
}

impl<'a, S: OdeSystem<N>, const N: usize> Stepper<'a, S, N> {
    /// `direction` is the sign of the integration direction.
    pub fn new(
        sys: &'a S,
        t0: f64,
        y0: [f64; N],
        direction: f64,
        tol: Tolerances,
        h_max: f64,
    ) -> Self {
        let k1 = sys.rhs(t0, &y0);
        let dir = if direction < 0.0 { -1.0 } else { 1.0 };
        let mut st = Self {
            sys,
            tol,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            h_max: h_max.abs(),
            dir,
            rejected_last: false,
            accepted: 0,
            rejected: 0,
        };
        st.h = st.initial_step();
        st
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> [f64; N] {
        self.y
    }

    /// Replaces the current state (same `t`), e.g. after a change of chart.
    pub fn reset_state(&mut self, y: [f64; N]) {
        self.y = y;
        self.k1 = self.sys.rhs(self.t, &y);
    }

    fn scale(&self, y0: &[f64; N], y1: &[f64; N]) -> [f64; N] {
        let mut sc = [0.0; N];
        match self.tol.norm {
            ErrorNorm::Componentwise => {
                for i in 0..N {
                    sc[i] = self.tol.atol + self.tol.rtol * y0[i].abs().max(y1[i].abs());
                }
            }
            ErrorNorm::Euclidean => {
                let m = euclid(y0).max(euclid(y1));
                sc = [self.tol.atol + self.tol.rtol * m; N];
            }
        }
        sc
    }

    fn weighted_rms(v: &[f64; N], sc: &[f64; N]) -> f64 {
        (v.iter().zip(sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / N as f64).sqrt()
    }

    fn initial_step(&self) -> f64 {
        let sc = self.scale(&self.y, &self.y);
        let d0 = Self::weighted_rms(&self.y, &sc);
        let d1 = Self::weighted_rms(&self.k1, &sc);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(self.h_max);
        let y1 = axpy(&self.y, self.dir * h0, &[(1.0, &self.k1)]);
        let f1 = self.sys.rhs(self.t + self.dir * h0, &y1);
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = f1[i] - self.k1[i];
        }
        let d2 = Self::weighted_rms(&diff, &sc) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.h_max) * self.dir
    }

    /// Takes one accepted step, never stepping past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<DenseStep<N>> {
        let sys = self.sys;
        loop {
            let remaining = t_limit - self.t;
            let mut h = self.h;
            if (h.abs()) >= remaining.abs() {
                h = remaining;
            }
            let min_h = 16.0 * f64::EPSILON * self.t.abs().max(1.0);
            if h.abs() < min_h && remaining.abs() > min_h {
                return Err(Error::StepSizeUnderflow { t: self.t });
            }
            let t = self.t;
            let y = &self.y;
            let k1 = &self.k1;
            let k2 = sys.rhs(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
            let k3 = sys.rhs(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
            let k4 = sys.rhs(
                t + C4 * h,
                &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = sys.rhs(
                t + C5 * h,
                &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = sys.rhs(
                t + h,
                &axpy(
                    y,
                    h,
                    &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = axpy(
                y,
                h,
                &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let t_new = if h == remaining { t_limit } else { t + h };
            let k7 = sys.rhs(t_new, &y_new);

            let mut err = [0.0; N];
            for i in 0..N {
                err[i] = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let sc = self.scale(y, &y_new);
            let e = Self::weighted_rms(&err, &sc);
            if !e.is_finite() {
                self.h *= 0.2;
                self.rejected += 1;
                self.rejected_last = true;
                continue;
            }

            let fac = if e == 0.0 {
                5.0
            } else {
                (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
            };
            if e <= 1.0 {
                let mut coeffs = [[0.0; N]; 5];
                for i in 0..N {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    coeffs[0][i] = y[i];
                    coeffs[1][i] = ydiff;
                    coeffs[2][i] = bspl;
                    coeffs[3][i] = ydiff - h * k7[i] - bspl;
                    coeffs[4][i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let step = DenseStep {
                    t0: t,
                    h: t_new - t,
                    coeffs,
                };
                self.t = t_new;
                self.y = y_new;
                self.k1 = k7;
                let fac = if self.rejected_last {
                    fac.min(1.0)
                } else {
                    fac
                };
                self.h = (h * fac).abs().min(self.h_max).max(min_h) * self.dir;
                self.rejected_last = false;
                self.accepted += 1;
                return Ok(step);
            }
            self.rejected += 1;
            self.rejected_last = true;
            self.h = h * fac.min(1.0);
        }
    }
}

/// Integrates from `t0` to `t1` and returns every accepted step.
pub fn integrate_steps<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: Tolerances,
    max_steps: usize,
) -> Result<Vec<DenseStep<N>>> {
    let mut st = Stepper::new(sys, t0, y0, t1 - t0, tol, (t1 - t0).abs());
    let mut steps = Vec::new();
    while st.t() != t1 {
        if steps.len() >= max_steps {
            return Err(Error::MaxStepsExceeded(max_steps));
        }
        steps.push(st.step(t1)?);
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Harmonic;
    impl OdeSystem<2> for Harmonic {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -y[0]]
        }
    }

    struct Decay;
    impl OdeSystem<1> for Decay {
        fn rhs(&self, _t: f64, y: &[f64; 1]) -> [f64; 1] {
            [-y[0]]
        }
    }

    fn tol(rtol: f64) -> Tolerances {
        Tolerances {
            rtol,
            atol: 1e-14,
            norm: ErrorNorm::Componentwise,
        }
    }

    #[test]
    fn harmonic_oscillator_endpoint() {
        let steps = integrate_steps(&Harmonic, 0.0, [0.0, 1.0], 10.0, tol(1e-11), 100_000).unwrap();
        let y = steps.last().unwrap().y1();
        assert!((y[0] - 10f64.sin()).abs() < 1e-9);
        assert!((y[1] - 10f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_between_nodes() {
        let steps = integrate_steps(&Harmonic, 0.0, [0.0, 1.0], 6.0, tol(1e-12), 100_000).unwrap();
        let mut worst: f64 = 0.0;
        for s in &steps {
            for j in 1..8 {
                let t = s.t0 + s.h * j as f64 / 8.0;
                worst = worst.max((s.eval(t)[0] - t.sin()).abs());
            }
        }
        assert!(worst < 1e-9, "dense error {worst}");
        // interpolant is continuous at the nodes
        for w in steps.windows(2) {
            assert_eq!(w[0].y1(), w[1].y0());
            assert!((w[0].t1() - w[1].t0).abs() == 0.0);
        }
    }

    #[test]
    fn backward_integration() {
        let steps = integrate_steps(&Decay, 0.0, [1.0], -3.0, tol(1e-12), 100_000).unwrap();
        let y = steps.last().unwrap().y1()[0];
        assert!((y - 3f64.exp()).abs() < 1e-9 * 3f64.exp());
        assert!(steps.iter().all(|s| s.h < 0.0));
    }

    #[test]
    fn euclidean_norm_gives_relative_accuracy_at_tiny_scale() {
        let t = Tolerances {
            rtol: 1e-12,
            atol: 1e-300,
            norm: ErrorNorm::Euclidean,
        };
        let steps = integrate_steps(&Harmonic, 0.0, [0.0, 1e-200], 5.0, t, 100_000).unwrap();
        let y = steps.last().unwrap().y1();
        assert!((y[0] / 1e-200 - 5f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn tighter_tolerance_reduces_error_at_nominal_rate() {
        let err = |rtol: f64| {
            let steps =
                integrate_steps(&Harmonic, 0.0, [0.0, 1.0], 20.0, tol(rtol), 1_000_000).unwrap();
            (steps.last().unwrap().y1()[0] - 20f64.sin()).abs()
        };
        let coarse = err(1e-6);
        let fine = err(1e-9);
        let ratio = coarse / fine;
        // global error of a 5(4) pair scales roughly like tol^(4/5) .. tol
        assert!(
            ratio > 10f64.powf(1.8) && ratio < 10f64.powf(4.5),
            "ratio {ratio}"
        );
    }
}
