//! The conformal quotient metric `u(r, rho) (dr^2 + drho^2)` on the right
//! half plane, under which the length of a curve equals the volume of the
//! hypersurface it sweeps out (up to the unit-sphere volume `sigma_0`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::LomseParams;
use crate::quadrature::{self, QuadTolerance};

/// Volume of the unit `n`-sphere, `2 pi^{(n+1)/2} / Gamma((n+1)/2)`.
pub fn unit_sphere_volume(n: u32) -> f64 {
    use std::f64::consts::PI;
    // Gamma(m) for integer or half-integer m by recursion from Gamma(1), Gamma(1/2).
    let m2 = n + 1; // 2m
    let mut gamma = if m2.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if m2.is_multiple_of(2) { 1.0 } else { 0.5 };
    let target = m2 as f64 / 2.0;
    while x < target {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma
}

#[derive(Debug, Clone)]
pub struct QuotientMetric {
    params: LomseParams,
    include_sigma0: bool,
    n: i32,
    p: i32,
    lambda_sq: f64,
    tan_theta: f64,
    sigma0: f64,
}

impl QuotientMetric {
    /// Metric without the `sigma_0` factor.
    pub fn new(params: &LomseParams) -> Self {
        Self {
            params: params.clone(),
            include_sigma0: false,
            n: params.n() as i32,
            p: params.p() as i32,
            lambda_sq: params.lambda_sq_f64(),
            tan_theta: params.tan_theta(),
            sigma0: unit_sphere_volume(params.n()),
        }
    }

    /// With the flag on, lengths are hypersurface volumes.
    pub fn with_sigma0(mut self, include: bool) -> Self {
        self.include_sigma0 = include;
        self
    }

    pub fn params(&self) -> &LomseParams {
        &self.params
    }

    pub fn includes_sigma0(&self) -> bool {
        self.include_sigma0
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn tan_theta(&self) -> f64 {
        self.tan_theta
    }

    fn length_scale(&self) -> f64 {
        if self.include_sigma0 {
            self.sigma0
        } else {
            1.0
        }
    }

    fn check_r(r: f64) -> Result<()> {
        if r > 0.0 && r.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("r must be positive, got {r}")))
        }
    }

    /// `(r^2 + lambda^2 rho^2)^p r^{2(n-p)}`, times `sigma_0^2` with the flag.
    pub fn conformal_factor(&self, r: f64, rho: f64) -> Result<f64> {
        Self::check_r(r)?;
        let q = r * r + self.lambda_sq * rho * rho;
        let u = q.powi(self.p) * r.powi(2 * (self.n - self.p));
        Ok(u * self.length_scale().powi(2))
    }

    /// `V(r, rho) = sigma_0 (r^2 + lambda^2 rho^2)^{p/2} r^{n-p}`.
    pub fn slice_volume(&self, r: f64, rho: f64) -> Result<f64> {
        Self::check_r(r)?;
        Ok(self.sigma0 * self.root_factor(r, rho))
    }

    fn root_factor(&self, r: f64, rho: f64) -> f64 {
        let q = r * r + self.lambda_sq * rho * rho;
        let half = if self.p % 2 == 0 {
            q.powi(self.p / 2)
        } else {
            q.powi(self.p / 2) * q.sqrt()
        };
        half * r.powi(self.n - self.p)
    }

    /// `sqrt(u)` including the `sigma_0` flag; defined (as zero) at `r = 0`.
    pub fn length_density(&self, r: f64, rho: f64) -> Result<f64> {
        if r < 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!(
                "curve leaves the half plane (r = {r})"
            )));
        }
        Ok(self.length_scale() * self.root_factor(r, rho))
    }

    /// Conformal Christoffel functions `A = (log u)_r / 2`, `B = (log u)_rho / 2`.
    pub fn christoffel_ab(&self, r: f64, rho: f64) -> Result<(f64, f64)> {
        Self::check_r(r)?;
        let n = self.n as f64;
        let p = self.p as f64;
        let l2 = self.lambda_sq;
        let q = l2 * rho * rho + r * r;
        let a = ((n - p) * l2 * rho * rho + n * r * r) / (q * r);
        let b = p * l2 * rho / q;
        Ok((a, b))
    }

    /// Gaussian curvature of the metric without `sigma_0`.
    pub fn gaussian_curvature(&self, r: f64, rho: f64) -> Result<f64> {
        Self::check_r(r)?;
        let n = self.n as f64;
        let p = self.p as f64;
        let l2 = self.lambda_sq;
        let q = r * r + l2 * rho * rho;
        let u = q.powi(self.p) * r.powi(2 * (self.n - self.p));
        let bracket = (n - p) / (r * r) - p * (l2 - 1.0) * (r * r - l2 * rho * rho) / (q * q);
        Ok(bracket / u)
    }

    /// Arclength from the origin to `(r, tan(theta) r)` along the cone ray.
    pub fn loc_arclength(&self, r: f64) -> Result<f64> {
        Self::check_r(r)?;
        let t2 = self.tan_theta * self.tan_theta;
        let n1 = (self.n + 1) as f64;
        let ray = (1.0 + t2).sqrt() * root_pow(1.0 + self.lambda_sq * t2, self.p);
        Ok(self.length_scale() * ray / n1 * r.powi(self.n + 1))
    }

    pub fn length_tolerance(&self) -> QuadTolerance {
        QuadTolerance::default()
    }
}

/// `x^{p/2}` for integer `p`.
fn root_pow(x: f64, p: i32) -> f64 {
    if p % 2 == 0 {
        x.powi(p / 2)
    } else {
        x.powi(p / 2) * x.sqrt()
    }
}

/// A piecewise-smooth curve in the `(r, rho)` plane, split into segments
/// each parameterized over `[0, 1]`.
pub trait Curve {
    fn segment_count(&self) -> usize;

    /// Position and velocity (with respect to the local parameter) on a
    /// segment.
    fn eval(&self, segment: usize, tau: f64) -> ([f64; 2], [f64; 2]);
}

/// `integral sqrt(u) |velocity|` along the curve.
pub fn curve_length<C: Curve + ?Sized>(
    metric: &QuotientMetric,
    curve: &C,
    tol: QuadTolerance,
) -> Result<f64> {
    let segments = curve.segment_count();
    if segments == 0 {
        return Err(Error::InvalidArgument("empty curve".into()));
    }
    let seg_tol = QuadTolerance {
        atol: tol.atol / segments as f64,
        ..tol
    };
    let mut total = 0.0;
    for seg in 0..segments {
        let mut failure = None;
        let v = quadrature::integrate(
            |tau| {
                let (pos, vel) = curve.eval(seg, tau);
                match metric.length_density(pos[0], pos[1]) {
                    Ok(d) => d * vel[0].hypot(vel[1]),
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            0.0,
            1.0,
            seg_tol,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        total += v;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameterization {
    GraphOverR,
    Arclength,
    LogRadius,
    Generic,
}

/// Sample with its derivative with respect to the curve parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub param: f64,
    pub r: f64,
    pub rho: f64,
    pub dr: f64,
    pub drho: f64,
}

/// Sampled curve interpolated by cubic Hermite segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneCurve {
    parameterization: Parameterization,
    samples: Vec<CurveSample>,
}

fn fd_weights(x: [f64; 3], at: usize) -> [f64; 3] {
    // first-derivative weights of the quadratic through three nodes
    let [x0, x1, x2] = x;
    let t = x[at];
    [
        ((t - x1) + (t - x2)) / ((x0 - x1) * (x0 - x2)),
        ((t - x0) + (t - x2)) / ((x1 - x0) * (x1 - x2)),
        ((t - x0) + (t - x1)) / ((x2 - x0) * (x2 - x1)),
    ]
}

impl PlaneCurve {
    pub fn new(parameterization: Parameterization, samples: Vec<CurveSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument(
                "a curve needs at least two samples".into(),
            ));
        }
        let last = samples.len() - 1;
        for (i, s) in samples.iter().enumerate() {
            let finite = [s.param, s.r, s.rho, s.dr, s.drho]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidArgument(format!("non-finite sample {i}")));
            }
            let interior = i != 0 && i != last;
            if s.r < 0.0 || (interior && s.r == 0.0) {
                return Err(Error::Domain(format!(
                    "sample {i} has r = {} outside the open half plane",
                    s.r
                )));
            }
        }
        for (i, w) in samples.windows(2).enumerate() {
            if w[1].param <= w[0].param {
                return Err(Error::InvalidArgument(format!(
                    "parameter not strictly increasing at sample {}",
                    i + 1
                )));
            }
            if w[1].r == w[0].r && w[1].rho == w[0].rho {
                return Err(Error::InvalidArgument(format!(
                    "repeated point at sample {}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            parameterization,
            samples,
        })
    }

    /// Builds a curve from positions only; tangents come from three-point
    /// differences in the parameter.
    pub fn from_points(
        parameterization: Parameterization,
        params: &[f64],
        points: &[[f64; 2]],
    ) -> Result<Self> {
        if params.len() != points.len() || points.len() < 2 {
            return Err(Error::InvalidArgument(
                "mismatched or too few samples".into(),
            ));
        }
        let m = points.len();
        let mut samples = Vec::with_capacity(m);
        for i in 0..m {
            let (dr, drho) = if m == 2 {
                let h = params[1] - params[0];
                (
                    (points[1][0] - points[0][0]) / h,
                    (points[1][1] - points[0][1]) / h,
                )
            } else {
                let base = i.saturating_sub(1).min(m - 3);
                let idx = [base, base + 1, base + 2];
                let w = fd_weights(idx.map(|j| params[j]), i - base);
                let d = |c: usize| {
                    idx.iter()
                        .zip(&w)
                        .map(|(&j, wj)| wj * points[j][c])
                        .sum::<f64>()
                };
                (d(0), d(1))
            };
            samples.push(CurveSample {
                param: params[i],
                r: points[i][0],
                rho: points[i][1],
                dr,
                drho,
            });
        }
        Self::new(parameterization, samples)
    }

    /// Graph `rho = f(r)` sampled at the given radii; `f` returns value and
    /// slope.
    pub fn graph<F: Fn(f64) -> (f64, f64)>(radii: &[f64], f: F) -> Result<Self> {
        let samples = radii
            .iter()
            .map(|&r| {
                let (rho, slope) = f(r);
                CurveSample {
                    param: r,
                    r,
                    rho,
                    dr: 1.0,
                    drho: slope,
                }
            })
            .collect();
        Self::new(Parameterization::GraphOverR, samples)
    }

    /// The cone ray `rho = tan(theta) r` on `[r0, r1]`, uniformly sampled.
    pub fn loc_segment(params: &LomseParams, r0: f64, r1: f64, count: usize) -> Result<Self> {
        let t = params.tan_theta();
        let count = count.max(2);
        let radii: Vec<f64> = (0..count)
            .map(|i| r0 + (r1 - r0) * i as f64 / (count - 1) as f64)
            .collect();
        Self::graph(&radii, |r| (t * r, t))
    }

    pub fn parameterization(&self) -> Parameterization {
        self.parameterization
    }

    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> &CurveSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &CurveSample {
        &self.samples[self.samples.len() - 1]
    }

    /// Same point set traversed backwards.
    pub fn reversed(&self) -> Self {
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| CurveSample {
                param: -s.param,
                dr: -s.dr,
                drho: -s.drho,
                ..*s
            })
            .collect();
        Self {
            parameterization: Parameterization::Generic,
            samples,
        }
    }

    /// Image under `(r, rho) -> (c r, c rho)`, same parameter.
    pub fn dilated(&self, c: f64) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|s| CurveSample {
                param: s.param,
                r: c * s.r,
                rho: c * s.rho,
                dr: c * s.dr,
                drho: c * s.drho,
            })
            .collect();
        let parameterization = match self.parameterization {
            Parameterization::LogRadius => Parameterization::LogRadius,
            _ => Parameterization::Generic,
        };
        Self {
            parameterization,
            samples,
        }
    }
}

impl Curve for PlaneCurve {
    fn segment_count(&self) -> usize {
        self.samples.len() - 1
    }

    fn eval(&self, segment: usize, tau: f64) -> ([f64; 2], [f64; 2]) {
        let a = &self.samples[segment];
        let b = &self.samples[segment + 1];
        let h = b.param - a.param;
        let t = tau;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        let pos = [
            h00 * a.r + h10 * h * a.dr + h01 * b.r + h11 * h * b.dr,
            h00 * a.rho + h10 * h * a.drho + h01 * b.rho + h11 * h * b.drho,
        ];
        let vel = [
            d00 * a.r + d10 * h * a.dr + d01 * b.r + d11 * h * b.dr,
            d00 * a.rho + d10 * h * a.drho + d01 * b.rho + d11 * h * b.drho,
        ];
        (pos, vel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_params, LomseTriple};

    fn metric(n: u32, p: u32, k: u32) -> QuotientMetric {
        QuotientMetric::new(&derive_params(LomseTriple::new(n, p, k).unwrap()).unwrap())
    }

    #[test]
    fn sphere_volumes() {
        use std::f64::consts::PI;
        assert!((unit_sphere_volume(1) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_volume(2) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_volume(5) - PI.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn conformal_factor_examples() {
        let m = metric(3, 2, 2);
        assert_eq!(m.conformal_factor(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(m.conformal_factor(1.0, 1.0).unwrap(), 25.0);
        assert_eq!(metric(5, 4, 6).conformal_factor(2.0, 0.0).unwrap(), 1024.0);
        assert!(m.conformal_factor(0.0, 1.0).is_err());
        assert!(m.conformal_factor(-1.0, 1.0).is_err());
        let with = m.clone().with_sigma0(true);
        let s = m.sigma0();
        assert!((with.conformal_factor(1.0, 1.0).unwrap() - 25.0 * s * s).abs() < 1e-10);
    }

    #[test]
    fn slice_volume_examples() {
        let m = metric(3, 2, 2);
        assert_eq!(m.slice_volume(1.0, 0.0).unwrap(), m.sigma0());
        assert!((m.slice_volume(1.0, 1.0).unwrap() - 5.0 * m.sigma0()).abs() < 1e-13);
        assert!(metric(5, 4, 6).slice_volume(-2.0, 0.0).is_err());
    }

    #[test]
    fn christoffel_examples() {
        let m = metric(3, 2, 2);
        assert_eq!(m.christoffel_ab(1.0, 0.0).unwrap(), (3.0, 0.0));
        let (a, b) = m.christoffel_ab(1.0, 1.0).unwrap();
        assert!((a - 7.0 / 5.0).abs() < 1e-15);
        assert!((b - 8.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn curvature_examples() {
        let m = metric(3, 2, 2);
        assert_eq!(m.gaussian_curvature(1.0, 0.0).unwrap(), -5.0);
        let t = m.tan_theta();
        let k = m.gaussian_curvature(1.0, t).unwrap();
        let s = m.loc_arclength(1.0).unwrap();
        assert!((k * s * s - 15.0 / 64.0).abs() < 1e-14);
    }

    #[test]
    fn loc_arclength_examples() {
        assert!((metric(3, 2, 2).loc_arclength(1.0).unwrap() - 9.0 / 4.0).abs() < 1e-15);
        let expect = 11.0 * 11f64.sqrt() / 4.0;
        assert!((metric(3, 2, 4).loc_arclength(1.0).unwrap() - expect).abs() < 1e-13);
        let m = metric(5, 4, 6);
        let ratio = m.loc_arclength(2.6).unwrap() / m.loc_arclength(1.3).unwrap();
        assert!((ratio - 64.0).abs() < 1e-12);
    }

    #[test]
    fn loc_segment_length_from_origin() {
        let m = metric(3, 2, 2);
        let c = PlaneCurve::loc_segment(m.params(), 0.0, 1.0, 200).unwrap();
        let l = curve_length(&m, &c, QuadTolerance::default()).unwrap();
        assert!((l - 9.0 / 4.0).abs() / (9.0 / 4.0) < 1e-8, "{l}");
    }

    #[test]
    fn short_vertical_segment() {
        let m = metric(5, 4, 6);
        for h in [1e-2, 1e-4, 1e-6] {
            let c = PlaneCurve::from_points(
                Parameterization::Generic,
                &[0.0, 1.0],
                &[[1.0, 0.0], [1.0, h]],
            )
            .unwrap();
            let l = curve_length(&m, &c, QuadTolerance::default()).unwrap();
            let rel = (l / h - 1.0).abs();
            assert!(rel < 10.0 * h, "h={h} rel={rel}");
        }
    }

    #[test]
    fn reversal_invariance() {
        let m = metric(3, 2, 4);
        let params: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let pts: Vec<[f64; 2]> = params
            .iter()
            .map(|&s| [0.5 + s, 0.3 * (4.0 * s).sin()])
            .collect();
        let c = PlaneCurve::from_points(Parameterization::Generic, &params, &pts).unwrap();
        let a = curve_length(&m, &c, QuadTolerance::default()).unwrap();
        let b = curve_length(&m, &c.reversed(), QuadTolerance::default()).unwrap();
        assert!((a - b).abs() / a < 1e-12);
    }

    #[test]
    fn invalid_curves_rejected() {
        let s = |param, r| CurveSample {
            param,
            r,
            rho: 0.0,
            dr: 1.0,
            drho: 0.0,
        };
        assert!(PlaneCurve::new(Parameterization::Generic, vec![s(0.0, 1.0)]).is_err());
        assert!(
            PlaneCurve::new(Parameterization::Generic, vec![s(0.0, 1.0), s(0.0, 2.0)]).is_err()
        );
        assert!(PlaneCurve::new(
            Parameterization::Generic,
            vec![s(0.0, 1.0), s(1.0, 0.0), s(2.0, 1.0)]
        )
        .is_err());
        assert!(
            PlaneCurve::new(Parameterization::Generic, vec![s(0.0, -1.0), s(1.0, 1.0)]).is_err()
        );
        assert!(PlaneCurve::new(Parameterization::Generic, vec![s(0.0, 0.0), s(1.0, 1.0)]).is_ok());
    }
}
