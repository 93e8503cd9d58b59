//! The Dirichlet solution family: the origin orbit cut at its crossings of
//! the cone ray and rescaled so that each piece ends at `(1, tan(theta))`.
//!
//! Deficits `L_LOC - L_m` shrink geometrically (by roughly
//! `exp(-(n+1) pi / Im mu)` per crossing) and drop below double precision
//! relative to `L_LOC` after a few crossings, so they cannot be obtained by
//! subtracting two quadratures. The length functional in `t` has the
//! Lagrangian `e^{(n+1)t} F(phi, psi)`, and its energy identity gives the
//! length from the origin in closed form at the end point:
//! `L = e^{(n+1)t} (F - psi F_psi) / (n+1)`. At a crossing this is
//! `L_LOC cos(alpha)`, with `alpha` the angle between the curve and the ray.

use serde::Serialize;

use super::{
    integrate, origin_launch_state, origin_unstable_rate, IntegratorConfig, Orbit, StopRule,
    DEFAULT_T_MAX,
};
use crate::error::{Error, Result};
use crate::geometry::{
    curve_length, Curve, CurveSample, Parameterization, PlaneCurve, QuotientMetric,
};
use crate::ode::Tolerances;
use crate::params::{ConeType, LomseParams};
use crate::quadrature::QuadTolerance;
use crate::sweep::Strategy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionConfig {
    /// Distance of the launch point from the origin along the unstable
    /// direction.
    pub epsilon: f64,
    /// Spacing in `t` of the exported samples; by default it shrinks with
    /// the unstable rate at the origin.
    pub sample_dt: Option<f64>,
    pub integrator: IntegratorConfig,
    pub quad: QuadTolerance,
    pub endpoint_tol: f64,
    pub t_max: f64,
}

impl Default for SolutionConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            sample_dt: None,
            integrator: IntegratorConfig {
                tolerances: Tolerances {
                    rtol: 1e-14,
                    atol: 1e-290,
                    ..Tolerances::default()
                },
                ..IntegratorConfig::default()
            },
            quad: QuadTolerance::default(),
            endpoint_tol: 1e-9,
            t_max: DEFAULT_T_MAX,
        }
    }
}

impl SolutionConfig {
    pub fn sample_spacing(&self, params: &LomseParams) -> f64 {
        self.sample_dt
            .unwrap_or_else(|| (0.01 / origin_unstable_rate(params)).min(0.01))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionCurve {
    pub crossing_index: usize,
    /// `log r` of the cut point on the unscaled orbit.
    pub crossing_t: f64,
    pub rescale_factor: f64,
    pub curve: PlaneCurve,
    /// Quadrature length of the rescaled curve.
    pub length: f64,
    /// `L_LOC - L_m` from the energy identity.
    pub deficit: f64,
    /// `L_LOC` at `r = 1`.
    pub loc_length: f64,
    /// `psi` at the cut point.
    pub end_psi: f64,
}

impl SolutionCurve {
    /// `L_LOC - deficit`; agrees with `length` to quadrature accuracy.
    pub fn identity_length(&self) -> f64 {
        self.loc_length - self.deficit
    }
}

fn weight(params: &LomseParams, phi: f64) -> f64 {
    let q = 1.0 + params.lambda_sq_f64() * phi * phi;
    let p = params.p() as i32;
    if p % 2 == 0 {
        q.powi(p / 2)
    } else {
        q.powi(p / 2) * q.sqrt()
    }
}

/// Length from the origin of a geodesic whose end state (at `r = 1`) is
/// `(phi, psi)`.
pub fn endpoint_length(params: &LomseParams, phi: f64, psi: f64) -> f64 {
    let slope = phi + psi;
    let n1 = params.n() as f64 + 1.0;
    weight(params, phi) * (1.0 + phi * slope) / (1.0 + slope * slope).sqrt() / n1
}

/// `L_LOC - L` for a geodesic that meets the cone ray at `r = 1` with
/// `psi` as given, computed without cancellation.
pub fn crossing_deficit(params: &LomseParams, psi: f64) -> f64 {
    let phi0 = params.tan_theta();
    let q = phi0 + psi;
    let a = (1.0 + phi0 * phi0).sqrt();
    let b = (1.0 + q * q).sqrt();
    let cos = (1.0 + phi0 * q) / (a * b);
    let sin = psi.abs() / (a * b);
    let loc = weight(params, phi0) * a / (params.n() as f64 + 1.0);
    loc * sin * sin / (1.0 + cos)
}

/// The orbit between its launch and `t_end`, rescaled by `e^{-t_end}`, with a
/// straight segment joining the origin to the launch point.
pub struct OrbitArc<'a> {
    orbit: &'a Orbit,
    t_end: f64,
    count: usize,
}

impl<'a> OrbitArc<'a> {
    pub fn new(orbit: &'a Orbit, t_end: f64) -> Self {
        let t_end = t_end.min(orbit.t_end());
        let count = orbit.segments.partition_point(|s| s.lo < t_end);
        Self {
            orbit,
            t_end,
            count,
        }
    }

    fn point(&self, t: f64) -> ([f64; 2], f64) {
        let s = self.orbit.eval(t);
        let r = (t - self.t_end).exp();
        ([r, s.phi * r], s.phi + s.psi)
    }
}

impl Curve for OrbitArc<'_> {
    fn segment_count(&self) -> usize {
        self.count + 1
    }

    fn eval(&self, segment: usize, tau: f64) -> ([f64; 2], [f64; 2]) {
        if segment == 0 {
            let (p, _) = self.point(self.orbit.t_start());
            return ([tau * p[0], tau * p[1]], p);
        }
        let seg = &self.orbit.segments[segment - 1];
        let hi = seg.hi.min(self.t_end);
        let span = hi - seg.lo;
        let t = seg.lo + tau * span;
        let y = seg.step.eval(t);
        let (phi, _) = self.orbit.field.split(seg.chart, y[0]);
        let r = (t - self.t_end).exp();
        ([r, phi * r], [r * span, r * (phi + y[1]) * span])
    }
}

fn sample_curve(orbit: &Orbit, t_end: f64, dt: f64) -> Result<PlaneCurve> {
    let t0 = orbit.t_start();
    let count = (((t_end - t0) / dt).ceil() as usize).max(1) + 1;
    let mut samples = Vec::with_capacity(count + 1);
    for s in orbit.resample(t0, t_end, count) {
        let r = (s.t - t_end).exp();
        samples.push(CurveSample {
            param: s.t - t_end,
            r,
            rho: s.phi * r,
            dr: r,
            drho: r * (s.phi + s.psi),
        });
    }
    let first = samples[0];
    samples.insert(
        0,
        CurveSample {
            param: first.param - 1.0,
            r: 0.0,
            rho: 0.0,
            dr: first.r,
            drho: first.rho,
        },
    );
    PlaneCurve::new(Parameterization::LogRadius, samples)
}

fn build(
    params: &LomseParams,
    orbit: &Orbit,
    index: usize,
    t_cut: f64,
    deficit: f64,
    cfg: &SolutionConfig,
) -> Result<SolutionCurve> {
    let end = orbit.eval(t_cut);
    if end.offset.abs() > cfg.endpoint_tol {
        return Err(Error::InternalInconsistency(format!(
            "solution {index} ends {:.3e} away from the cone ray",
            end.offset.abs()
        )));
    }
    let metric = QuotientMetric::new(params);
    let length = curve_length(&metric, &OrbitArc::new(orbit, t_cut), cfg.quad)?;
    let curve = sample_curve(orbit, t_cut, cfg.sample_spacing(params))?;
    Ok(SolutionCurve {
        crossing_index: index,
        crossing_t: t_cut,
        rescale_factor: (-t_cut).exp(),
        curve,
        length,
        deficit,
        loc_length: metric.loc_arclength(1.0)?,
        end_psi: end.psi,
    })
}

pub fn solution_family(params: &LomseParams, m_max: usize) -> Result<Vec<SolutionCurve>> {
    solution_family_with(
        params,
        m_max,
        &SolutionConfig::default(),
        Strategy::default(),
    )
}

/// Solutions for crossing indices `1..=m_max` (Type II), or the single
/// non-oscillating solution (Type I).
pub fn solution_family_with(
    params: &LomseParams,
    m_max: usize,
    cfg: &SolutionConfig,
    strategy: Strategy,
) -> Result<Vec<SolutionCurve>> {
    if m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be positive".into()));
    }
    let start = origin_launch_state(params, cfg.epsilon);
    let out = match params.cone_type {
        ConeType::TypeI => {
            let icfg = cfg.integrator.with_stop(StopRule::FixedPointEntry);
            let orbit = integrate(params, start, cfg.t_max, &icfg)?;
            let end = *orbit.last();
            if end.cone_distance() > icfg.fixed_point_radius * (1.0 + 1e-6) {
                return Err(Error::InternalInconsistency(
                    "origin orbit did not reach the cone point".into(),
                ));
            }
            let loc = QuotientMetric::new(params).loc_arclength(1.0)?;
            let deficit = loc - endpoint_length(params, end.phi, end.psi);
            vec![build(params, &orbit, 1, end.t, deficit, cfg)?]
        }
        ConeType::TypeII => {
            let icfg = IntegratorConfig {
                fixed_point_radius: 0.0,
                ..cfg.integrator
            }
            .with_stop(StopRule::LocCrossings(m_max));
            let orbit = integrate(params, start, cfg.t_max, &icfg)?;
            let crossings = orbit.loc_crossings();
            if crossings.len() < m_max {
                return Err(Error::NotOscillating {
                    found: crossings.len(),
                    wanted: m_max,
                });
            }
            let indexed: Vec<(usize, f64, f64)> = crossings
                .iter()
                .enumerate()
                .map(|(i, e)| (i + 1, e.t(), crossing_deficit(params, e.state.psi)))
                .collect();
            strategy.try_map(&indexed, |&(m, t, d)| build(params, &orbit, m, t, d, cfg))?
        }
    };
    check_monotone(&out)?;
    Ok(out)
}

// negated comparisons so that a NaN deficit fails
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn check_monotone(family: &[SolutionCurve]) -> Result<()> {
    for s in family {
        if !(s.deficit > 0.0) {
            return Err(Error::MonotonicityViolation(format!(
                "solution {} is not shorter than the cone segment",
                s.crossing_index
            )));
        }
    }
    for w in family.windows(2) {
        if !(w[1].deficit < w[0].deficit) {
            return Err(Error::MonotonicityViolation(format!(
                "deficit does not decrease from m = {} to m = {}",
                w[0].crossing_index, w[1].crossing_index
            )));
        }
    }
    Ok(())
}

/// Comparison of two launches at `epsilon` and `epsilon / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaunchCheck {
    /// Largest relative change of a deficit.
    pub deficit_rel_change: f64,
    /// Largest deviation of the crossing-time shift from `ln 2 / mu_+`.
    pub time_shift_error: f64,
}

pub fn launch_sensitivity(
    params: &LomseParams,
    m_max: usize,
    cfg: &SolutionConfig,
) -> Result<LaunchCheck> {
    let a = solution_family_with(params, m_max, cfg, Strategy::default())?;
    let half = SolutionConfig {
        epsilon: 0.5 * cfg.epsilon,
        ..*cfg
    };
    let b = solution_family_with(params, m_max, &half, Strategy::default())?;
    let shift = std::f64::consts::LN_2 / origin_unstable_rate(params);
    let mut out = LaunchCheck {
        deficit_rel_change: 0.0,
        time_shift_error: 0.0,
    };
    for (x, y) in a.iter().zip(&b) {
        out.deficit_rel_change = out
            .deficit_rel_change
            .max((x.deficit - y.deficit).abs() / x.deficit);
        out.time_shift_error = out
            .time_shift_error
            .max(((y.crossing_t - x.crossing_t) - shift).abs());
    }
    Ok(out)
}
