//! The `(phi, psi)` system in `t = log r`, with `phi = rho / r` and
//! `psi = phi_t`.
//!
//! The system has two stationary points that matter: the origin and the cone
//! point `(tan(theta), 0)`. Orbits are integrated in a chart centred at
//! whichever of the two is closer, so that deviations from either point keep
//! full relative precision no matter how small they get. The part of the
//! right-hand side that vanishes at the cone point is evaluated in a factored
//! form for the same reason.

mod foliation;
mod residual;
mod solutions;

pub use foliation::{
    foliation_check, foliation_check_with, FoliationConfig, FoliationReport, LeafSummary,
};
pub use residual::{geodesic_equivalence_check, ode1_residual, residual_profile, ResidualProfile};
pub use solutions::{
    crossing_deficit, endpoint_length, launch_sensitivity, solution_family, solution_family_with,
    LaunchCheck, OrbitArc, SolutionConfig, SolutionCurve,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{DenseStep, OdeSystem, Stepper, Tolerances};
use crate::params::{ConeType, LomseParams};
use crate::surd::to_f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    /// `log r`.
    pub t: f64,
    pub phi: f64,
    pub psi: f64,
    /// `phi - tan(theta)`, carried separately at full precision.
    pub offset: f64,
}

impl PhaseState {
    pub fn new(params: &LomseParams, t: f64, phi: f64, psi: f64) -> Self {
        Self {
            t,
            phi,
            psi,
            offset: phi - params.tan_theta(),
        }
    }

    /// A state given by its deviation from the cone point.
    pub fn near_cone(params: &LomseParams, t: f64, offset: f64, psi: f64) -> Self {
        Self {
            t,
            phi: params.tan_theta() + offset,
            psi,
            offset,
        }
    }

    pub fn r(&self) -> f64 {
        self.t.exp()
    }

    pub fn rho(&self) -> f64 {
        self.phi * self.t.exp()
    }

    /// Distance to the cone point in the phase plane.
    pub fn cone_distance(&self) -> f64 {
        self.offset.hypot(self.psi)
    }
}

/// Coordinates in which an orbit step was integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// `(phi, psi)`.
    Origin,
    /// `(phi - tan(theta), psi)`.
    Cone,
}

/// Precomputed constants of the right-hand side.
#[derive(Debug, Clone, Copy)]
pub struct Field {
    n: f64,
    p: f64,
    lambda_sq: f64,
    phi0: f64,
    /// `(lambda^2 - 1) p lambda^2 / (1 + lambda^2 phi0^2)`.
    kappa: f64,
}

impl Field {
    pub fn new(params: &LomseParams) -> Self {
        let l2 = params.lambda_sq_f64();
        let phi0 = params.tan_theta();
        let p = params.p() as f64;
        let denom = 1.0 + to_f64(&(params.lambda_sq * params.tan_theta_sq));
        Self {
            n: params.n() as f64,
            p,
            lambda_sq: l2,
            phi0,
            kappa: (l2 - 1.0) * p * l2 / denom,
        }
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    /// Right-hand side given `phi`, its offset from the cone point and `psi`.
    #[inline]
    pub fn eval(&self, phi: f64, offset: f64, psi: f64) -> [f64; 2] {
        let q = 1.0 + self.lambda_sq * phi * phi;
        let damping = (self.n - self.p) + self.p / q;
        // (n-p) + (1-lambda^2)p/q, rewritten so that it is proportional to
        // the offset from the cone point
        let restoring = self.kappa * offset * (phi + self.phi0) / q;
        let bracket = damping * psi + restoring * phi;
        let slope = phi + psi;
        [psi, -psi - bracket * (1.0 + slope * slope)]
    }

    fn split(&self, chart: Chart, x: f64) -> (f64, f64) {
        match chart {
            Chart::Origin => (x, x - self.phi0),
            Chart::Cone => (self.phi0 + x, x),
        }
    }

    fn preferred_chart(&self, phi: f64, offset: f64) -> Chart {
        if phi.abs() <= offset.abs() {
            Chart::Origin
        } else {
            Chart::Cone
        }
    }
}

struct ChartSystem<'a> {
    field: &'a Field,
    chart: Chart,
}

impl OdeSystem<2> for ChartSystem<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
        let (phi, offset) = self.field.split(self.chart, y[0]);
        self.field.eval(phi, offset, y[1])
    }
}

/// Right-hand side `(phi_t, psi_t)` at a state.
pub fn vector_field(params: &LomseParams, state: &PhaseState) -> (f64, f64) {
    let f = Field::new(params).eval(state.phi, state.offset, state.psi);
    (f[0], f[1])
}

/// Positive root of `mu^2 + (n+1) mu - (p lambda^2 - n) = 0`: the unstable
/// rate of the linearization at the origin.
pub fn origin_unstable_rate(params: &LomseParams) -> f64 {
    let n1 = params.n() as f64 + 1.0;
    let c = to_f64(&(params.lambda_sq * num_rational::Ratio::from_integer(params.p() as i128)))
        - params.n() as f64;
    0.5 * (-n1 + (n1 * n1 + 4.0 * c).sqrt())
}

/// The two origin rates `(mu_+, mu_-)`.
pub fn origin_rates(params: &LomseParams) -> (f64, f64) {
    let mu_plus = origin_unstable_rate(params);
    let n1 = params.n() as f64 + 1.0;
    (mu_plus, -n1 - mu_plus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    LocCrossing,
    AxisCrossing,
    FixedPointEntry,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitEvent {
    pub kind: EventKind,
    pub state: PhaseState,
}

impl OrbitEvent {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Integrate to `t_end`.
    Never,
    /// Stop at the first entry into the fixed-point ball.
    FixedPointEntry,
    /// Stop at the given number of cone-ray crossings.
    LocCrossings(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub tolerances: Tolerances,
    /// Event times are located to this absolute accuracy in `t`.
    pub event_tol: f64,
    pub fixed_point_radius: f64,
    pub divergence_bound: f64,
    pub max_steps: usize,
    pub h_max: f64,
    pub stop: StopRule,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            event_tol: 1e-12,
            fixed_point_radius: 1e-10,
            divergence_bound: 1e3,
            max_steps: 2_000_000,
            h_max: 0.25,
            stop: StopRule::Never,
        }
    }
}

impl IntegratorConfig {
    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedEnd,
    Stopped,
    Stationary,
}

#[derive(Debug, Clone)]
struct Segment {
    chart: Chart,
    step: DenseStep<2>,
    /// Usable part of the step, ascending.
    lo: f64,
    hi: f64,
}

/// A dense trajectory of the phase-plane system, ascending in `t`.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub params: LomseParams,
    pub states: Vec<PhaseState>,
    pub events: Vec<OrbitEvent>,
    pub termination: Termination,
    field: Field,
    segments: Vec<Segment>,
}

impl Orbit {
    pub fn t_start(&self) -> f64 {
        self.states[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.states[self.states.len() - 1].t
    }

    pub fn first(&self) -> &PhaseState {
        &self.states[0]
    }

    pub fn last(&self) -> &PhaseState {
        &self.states[self.states.len() - 1]
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &OrbitEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn loc_crossings(&self) -> Vec<OrbitEvent> {
        self.events_of(EventKind::LocCrossing).copied().collect()
    }

    /// Dense-output state at `t`, clamped to the orbit's range.
    pub fn eval(&self, t: f64) -> PhaseState {
        let t = t.clamp(self.t_start(), self.t_end());
        if self.segments.is_empty() {
            return PhaseState {
                t,
                ..self.states[0]
            };
        }
        let idx = self
            .segments
            .partition_point(|s| s.hi < t)
            .min(self.segments.len() - 1);
        self.eval_segment(idx, t)
    }

    fn eval_segment(&self, idx: usize, t: f64) -> PhaseState {
        let seg = &self.segments[idx];
        let y = seg.step.eval(t);
        let (phi, offset) = self.field.split(seg.chart, y[0]);
        PhaseState {
            t,
            phi,
            psi: y[1],
            offset,
        }
    }

    /// Ascending `(lo, hi)` ranges of the dense steps.
    pub fn step_ranges(&self) -> Vec<(f64, f64)> {
        self.segments.iter().map(|s| (s.lo, s.hi)).collect()
    }

    /// States on a uniform grid of `count` points spanning `[t0, t1]`.
    pub fn resample(&self, t0: f64, t1: f64, count: usize) -> Vec<PhaseState> {
        let count = count.max(2);
        (0..count)
            .map(|i| {
                let t = if i + 1 == count {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (count - 1) as f64
                };
                self.eval(t)
            })
            .collect()
    }
}

fn sign_change(g0: f64, g1: f64) -> bool {
    g0 != 0.0 && (g1 == 0.0 || (g0 < 0.0) != (g1 < 0.0))
}

/// Bisection on the dense interpolant for a root of `g` inside the step.
fn locate<G: Fn(&PhaseState) -> f64>(
    field: &Field,
    chart: Chart,
    step: &DenseStep<2>,
    g: G,
    tol: f64,
) -> PhaseState {
    let at = |t: f64| {
        let y = step.eval(t);
        let (phi, offset) = field.split(chart, y[0]);
        PhaseState {
            t,
            phi,
            psi: y[1],
            offset,
        }
    };
    let (mut a, mut b) = (step.t0, step.t1());
    let mut ga = g(&at(a));
    let end = at(b);
    if g(&end) == 0.0 {
        return end;
    }
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(&at(m));
        if gm == 0.0 {
            return at(m);
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    at(0.5 * (a + b))
}

/// Integrates the phase-plane system from `start` to `t_end`.
pub fn integrate(
    params: &LomseParams,
    start: PhaseState,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<Orbit> {
    if !(start.t.is_finite() && start.phi.is_finite() && start.psi.is_finite() && t_end.is_finite())
    {
        return Err(Error::InvalidArgument("non-finite start or end".into()));
    }
    if t_end == start.t {
        return Err(Error::InvalidArgument(
            "t_end must differ from the start time".into(),
        ));
    }
    let field = Field::new(params);
    let start = PhaseState {
        offset: if start.offset.is_finite() {
            start.offset
        } else {
            start.phi - field.phi0
        },
        ..start
    };

    let f0 = field.eval(start.phi, start.offset, start.psi);
    if f0 == [0.0, 0.0] {
        let end = PhaseState { t: t_end, ..start };
        let mut states = vec![start, end];
        states.sort_by(|a, b| a.t.total_cmp(&b.t));
        return Ok(Orbit {
            params: params.clone(),
            states,
            events: Vec::new(),
            termination: Termination::Stationary,
            field,
            segments: Vec::new(),
        });
    }

    let dir = (t_end - start.t).signum();
    let mut chart = field.preferred_chart(start.phi, start.offset);
    let coord = |chart: Chart, s: &PhaseState| match chart {
        Chart::Origin => [s.phi, s.psi],
        Chart::Cone => [s.offset, s.psi],
    };

    let mut states = vec![start];
    let mut events: Vec<OrbitEvent> = Vec::new();
    let mut segments: Vec<Segment> = Vec::new();
    let mut crossings = 0usize;
    let mut current = start;
    let mut termination = Termination::ReachedEnd;

    let origin_sys = ChartSystem {
        field: &field,
        chart: Chart::Origin,
    };
    let cone_sys = ChartSystem {
        field: &field,
        chart: Chart::Cone,
    };
    let system = |c: Chart| match c {
        Chart::Origin => &origin_sys,
        Chart::Cone => &cone_sys,
    };
    let mut stepper = Stepper::new(
        system(chart),
        start.t,
        coord(chart, &start),
        dir,
        config.tolerances,
        config.h_max,
    );

    'outer: while current.t != t_end {
        if segments.len() >= config.max_steps {
            return Err(Error::MaxStepsExceeded(config.max_steps));
        }
        let step = stepper.step(t_end)?;
        let y1 = step.y1();
        let (phi1, off1) = field.split(chart, y1[0]);
        let next = PhaseState {
            t: step.t1(),
            phi: phi1,
            psi: y1[1],
            offset: off1,
        };
        let norm = next.phi.hypot(next.psi);
        if !norm.is_finite() || norm > config.divergence_bound {
            return Err(Error::Divergence { t: next.t, norm });
        }

        // events inside this step, in time order
        let mut found: Vec<OrbitEvent> = Vec::new();
        if sign_change(current.offset, next.offset) {
            let s = locate(&field, chart, &step, |s| s.offset, config.event_tol);
            found.push(OrbitEvent {
                kind: EventKind::LocCrossing,
                state: s,
            });
        }
        if sign_change(current.psi, next.psi) {
            let s = locate(&field, chart, &step, |s| s.psi, config.event_tol);
            found.push(OrbitEvent {
                kind: EventKind::AxisCrossing,
                state: s,
            });
        }
        let radius = config.fixed_point_radius;
        if current.cone_distance() >= radius && next.cone_distance() < radius {
            let s = locate(
                &field,
                chart,
                &step,
                |s| s.cone_distance() - radius,
                config.event_tol,
            );
            found.push(OrbitEvent {
                kind: EventKind::FixedPointEntry,
                state: s,
            });
        }
        found.sort_by(|a, b| (dir * a.t()).total_cmp(&(dir * b.t())));

        let mut stop_at: Option<PhaseState> = None;
        for ev in found {
            events.push(ev);
            let stop = match (config.stop, ev.kind) {
                (StopRule::FixedPointEntry, EventKind::FixedPointEntry) => true,
                (StopRule::LocCrossings(m), EventKind::LocCrossing) => {
                    crossings += 1;
                    crossings >= m
                }
                (_, EventKind::LocCrossing) => {
                    crossings += 1;
                    false
                }
                _ => false,
            };
            if stop {
                stop_at = Some(ev.state);
                break;
            }
        }

        let (lo, hi) = {
            let end_t = stop_at.map_or(step.t1(), |s| s.t);
            (step.t0.min(end_t), step.t0.max(end_t))
        };
        segments.push(Segment {
            chart,
            step,
            lo,
            hi,
        });

        if let Some(s) = stop_at {
            if s.t != current.t {
                states.push(s);
            }
            termination = Termination::Stopped;
            break 'outer;
        }
        states.push(next);
        current = next;

        let preferred = field.preferred_chart(next.phi, next.offset);
        if preferred != chart {
            chart = preferred;
            stepper = Stepper::new(
                system(chart),
                next.t,
                coord(chart, &next),
                dir,
                config.tolerances,
                config.h_max,
            );
        }
    }

    if dir < 0.0 {
        states.reverse();
        segments.reverse();
    }
    events.sort_by(|a, b| a.t().total_cmp(&b.t()));
    Ok(Orbit {
        params: params.clone(),
        states,
        events,
        termination,
        field,
        segments,
    })
}

/// Default time horizon for orbits launched at the origin.
pub const DEFAULT_T_MAX: f64 = 400.0;

/// Start state on the unstable direction of the origin, at `t = 0`.
pub fn origin_launch_state(params: &LomseParams, epsilon: f64) -> PhaseState {
    let mu = origin_unstable_rate(params);
    PhaseState::new(params, 0.0, epsilon, epsilon * mu)
}

/// The orbit leaving the origin along its unstable direction, integrated
/// until it enters the fixed-point ball (or as directed by `config.stop`).
pub fn origin_unstable_orbit(
    params: &LomseParams,
    epsilon: f64,
    config: &IntegratorConfig,
) -> Result<Orbit> {
    if !(epsilon > 0.0 && epsilon < 1e-2) {
        return Err(Error::InvalidArgument(format!(
            "launch epsilon {epsilon} not small and positive"
        )));
    }
    let config = match config.stop {
        StopRule::Never => config.with_stop(StopRule::FixedPointEntry),
        _ => *config,
    };
    integrate(
        params,
        origin_launch_state(params, epsilon),
        DEFAULT_T_MAX,
        &config,
    )
}

/// Whether the cone fixed point is a spiral (Type II) or a node (Type I).
pub fn is_spiral(params: &LomseParams) -> bool {
    params.cone_type == ConeType::TypeII
}
