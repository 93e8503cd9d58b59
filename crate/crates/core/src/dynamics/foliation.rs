//! Numerical certificate for the homothetic foliation of the sector between
//! `{rho = 0}` and `{rho = phi1 r}` in the Type I case.
//!
//! In the `(t, phi)` chart a dilation by `c` is the translation `t -> t + ln c`,
//! so the leaves through the two boundary orbits are translates of their
//! graphs. The check samples a grid of translates, verifies that neighbours
//! never touch, and that every test point in the sector is squeezed between
//! two neighbouring sampled leaves.

use serde::Serialize;

use super::{integrate, origin_unstable_orbit, IntegratorConfig, Orbit, PhaseState, StopRule};
use crate::error::{Error, Result};
use crate::params::{fixed_point_eigenvalues, ConeType, LomseParams};
use crate::sweep::Strategy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoliationConfig {
    pub epsilon: f64,
    pub integrator: IntegratorConfig,
    /// Spacing of the sampled translates in `ln c`.
    pub shift_step: f64,
    /// Radial window of the test grid.
    pub r_window: (f64, f64),
    pub radial_points: usize,
    pub angular_points: usize,
    /// Test points closer than this fraction of the band width to `phi = 0`,
    /// `tan(theta)` or `phi1` are skipped.
    pub band: f64,
    /// Largest allowed distance (in `rho`) from a test point to a sampled
    /// leaf.
    pub cover_tol: f64,
    /// Dense samples per integrator step for the monotonicity scan.
    pub samples_per_step: usize,
}

impl Default for FoliationConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            integrator: IntegratorConfig::default(),
            shift_step: 0.02,
            r_window: (0.5, 2.0),
            radial_points: 9,
            angular_points: 25,
            band: 1e-3,
            cover_tol: 0.05,
            samples_per_step: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafSummary {
    pub start_phi: f64,
    pub end_offset: f64,
    pub end_t: f64,
    /// Number of dense samples scanned.
    pub samples: usize,
    /// `phi` strictly monotone at every sample.
    pub monotone: bool,
    /// `psi` keeps its sign and the orbit stays on its side of the ray.
    pub sign_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoliationReport {
    pub phi0: f64,
    pub phi1: f64,
    /// Slopes of the lines `L_1`, `L_2` through the cone point.
    pub slopes: [f64; 2],
    pub slopes_exact: [String; 2],
    pub gamma1: LeafSummary,
    pub gamma2: LeafSummary,
    pub leaves_gamma1: usize,
    pub leaves_gamma2: usize,
    /// Smallest `rho`-gap between neighbouring sampled leaves of each family.
    pub min_gap_gamma1: f64,
    pub min_gap_gamma2: f64,
    /// Smallest `rho`-gap between the two families inside the window.
    pub family_gap: f64,
    pub test_points: usize,
    pub covered_points: usize,
    pub max_cover_distance: f64,
    pub passed: bool,
}

struct Family<'a> {
    orbit: &'a Orbit,
    increasing: bool,
}

impl Family<'_> {
    fn lo(&self) -> f64 {
        self.orbit.t_start()
    }

    fn hi(&self) -> f64 {
        self.orbit.t_end()
    }

    fn offset(&self, tau: f64) -> f64 {
        self.orbit.eval(tau).offset
    }

    /// The `tau` at which the leaf reaches the given offset.
    fn invert(&self, target: f64) -> Option<f64> {
        let (mut a, mut b) = (self.lo(), self.hi());
        let fa = self.offset(a);
        let fb = self.offset(b);
        let inside = if self.increasing {
            fa <= target && target <= fb
        } else {
            fb <= target && target <= fa
        };
        if !inside {
            return None;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            let below = (self.offset(m) < target) == self.increasing;
            if below {
                a = m;
            } else {
                b = m;
            }
        }
        Some(0.5 * (a + b))
    }
}

fn scan(orbit: &Orbit, increasing: bool, per_step: usize) -> LeafSummary {
    let steps = orbit.step_ranges().len().max(1);
    let count = steps * per_step.max(1) + 1;
    let dense = orbit.resample(orbit.t_start(), orbit.t_end(), count);
    let monotone = dense.windows(2).all(|w| {
        if increasing {
            w[1].offset > w[0].offset
        } else {
            w[1].offset < w[0].offset
        }
    });
    let sign_ok = dense.iter().skip(1).all(|s| {
        if increasing {
            s.psi > 0.0 && s.offset < 0.0
        } else {
            s.psi < 0.0 && s.offset > 0.0
        }
    });
    let last = orbit.last();
    LeafSummary {
        start_phi: orbit.first().phi,
        end_offset: last.offset,
        end_t: last.t,
        samples: dense.len(),
        monotone,
        sign_ok,
    }
}

fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Uniform shifts of spacing `step` covering `[lo, hi]` with one step of
/// padding.
fn shift_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let start = (lo / step).floor() - 1.0;
    let end = (hi / step).ceil() + 1.0;
    let n = (end - start) as usize;
    (0..=n).map(|i| (start + i as f64) * step).collect()
}

struct Coverage {
    covered: bool,
    distance: f64,
}

fn cover(fam: &Family, shifts: &[f64], t: f64, target: f64, tau: f64) -> Coverage {
    let r = t.exp();
    let s = t - tau;
    let miss = Coverage {
        covered: false,
        distance: f64::INFINITY,
    };
    let i = shifts.partition_point(|&x| x <= s);
    if i == 0 || i == shifts.len() {
        return miss;
    }
    let (s_lo, s_hi) = (shifts[i - 1], shifts[i]);
    // larger shift means the leaf is behind in tau
    let a = fam.offset(t - s_lo);
    let b = fam.offset(t - s_hi);
    let (below, above) = if fam.increasing { (b, a) } else { (a, b) };
    let slack = 1e-12 * target.abs().max(1e-300);
    if !(below - slack <= target && target <= above + slack) {
        return miss;
    }
    Coverage {
        covered: true,
        distance: r * (target - below).min(above - target).max(0.0),
    }
}

fn min_adjacent_gap(fam: &Family, shifts: &[f64], ts: &[f64]) -> f64 {
    let mut gap = f64::INFINITY;
    for w in shifts.windows(2) {
        for &t in ts {
            let (ta, tb) = (t - w[0], t - w[1]);
            let inside = |x: f64| x > fam.lo() && x < fam.hi();
            if !(inside(ta) && inside(tb)) {
                continue;
            }
            let d = fam.offset(ta) - fam.offset(tb);
            let d = if fam.increasing { d } else { -d };
            gap = gap.min(t.exp() * d);
        }
    }
    gap
}

pub fn foliation_check(
    params: &LomseParams,
    phi1: f64,
    cfg: &FoliationConfig,
) -> Result<FoliationReport> {
    foliation_check_with(params, phi1, cfg, Strategy::default())
}

pub fn foliation_check_with(
    params: &LomseParams,
    phi1: f64,
    cfg: &FoliationConfig,
    strategy: Strategy,
) -> Result<FoliationReport> {
    if params.cone_type != ConeType::TypeI {
        return Err(Error::WrongType);
    }
    let phi0 = params.tan_theta();
    if !(phi1.is_finite() && phi1 > phi0) {
        return Err(Error::InvalidArgument(format!(
            "phi1 = {phi1} must exceed tan(theta) = {phi0}"
        )));
    }
    let (lo_r, hi_r) = cfg.r_window;
    if !(lo_r > 0.0 && hi_r > lo_r) {
        return Err(Error::InvalidArgument("bad radial window".into()));
    }

    let eig = fixed_point_eigenvalues(params);
    let mut pair = [
        (eig.values[0].re, eig.exact[0].to_string()),
        (eig.values[1].re, eig.exact[1].to_string()),
    ];
    pair.sort_by(|a, b| a.0.total_cmp(&b.0));

    let icfg = cfg.integrator.with_stop(StopRule::FixedPointEntry);
    let start1 = PhaseState {
        t: 0.0,
        phi: phi1,
        psi: 0.0,
        offset: phi1 - phi0,
    };
    let g1 = integrate(params, start1, super::DEFAULT_T_MAX, &icfg)?;
    let g2 = origin_unstable_orbit(params, cfg.epsilon, &icfg)?;
    let s1 = scan(&g1, false, cfg.samples_per_step);
    let s2 = scan(&g2, true, cfg.samples_per_step);
    for (name, s) in [("gamma1", &s1), ("gamma2", &s2)] {
        if !(s.monotone && s.sign_ok) {
            return Err(Error::MonotonicityViolation(format!(
                "{name} is not monotone on the way to the cone point"
            )));
        }
    }
    let f1 = Family {
        orbit: &g1,
        increasing: false,
    };
    let f2 = Family {
        orbit: &g2,
        increasing: true,
    };

    let ts = grid(lo_r.ln(), hi_r.ln(), cfg.radial_points.max(2));
    let w1 = phi1 - phi0;
    let band1 = cfg.band * w1;
    let band2 = cfg.band * phi0;
    let targets1 = grid(band1, w1, cfg.angular_points.max(2));
    let targets2 = grid(-phi0 + band2, -band2, cfg.angular_points.max(2));

    let taus1: Vec<Option<f64>> = strategy.map(&targets1, |&o| f1.invert(o));
    let taus2: Vec<Option<f64>> = strategy.map(&targets2, |&o| f2.invert(o));
    let span = |taus: &[Option<f64>]| {
        let v: Vec<f64> = taus.iter().flatten().copied().collect();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (a1, b1) = span(&taus1);
    let (a2, b2) = span(&taus2);
    let t_lo = ts[0];
    let t_hi = ts[ts.len() - 1];
    let shifts1 = shift_grid(t_lo - b1, t_hi - a1, cfg.shift_step);
    let shifts2 = shift_grid(t_lo - b2, t_hi - a2, cfg.shift_step);

    let mut points: Vec<(usize, f64, f64, Option<f64>)> = Vec::new();
    for &t in &ts {
        for (o, tau) in targets1.iter().zip(&taus1) {
            points.push((1, t, *o, *tau));
        }
        for (o, tau) in targets2.iter().zip(&taus2) {
            points.push((2, t, *o, *tau));
        }
    }
    let results: Vec<Coverage> = strategy.map(&points, |&(which, t, o, tau)| match tau {
        None => Coverage {
            covered: false,
            distance: f64::INFINITY,
        },
        Some(tau) => {
            if which == 1 {
                cover(&f1, &shifts1, t, o, tau)
            } else {
                cover(&f2, &shifts2, t, o, tau)
            }
        }
    });
    let covered = results
        .iter()
        .filter(|c| c.covered && c.distance <= cfg.cover_tol)
        .count();
    let max_cover_distance = results.iter().fold(0.0f64, |m, c| m.max(c.distance));

    let dense_ts = grid(t_lo, t_hi, 64);
    let gap1 = min_adjacent_gap(&f1, &shifts1, &dense_ts);
    let gap2 = min_adjacent_gap(&f2, &shifts2, &dense_ts);
    let min_phi1 = g1
        .states
        .iter()
        .map(|s| s.offset)
        .fold(f64::INFINITY, f64::min);
    let max_phi2 = g2
        .states
        .iter()
        .map(|s| s.offset)
        .fold(f64::NEG_INFINITY, f64::max);
    let family_gap = lo_r * (min_phi1 - max_phi2);

    let passed = gap1 > 0.0
        && gap2 > 0.0
        && family_gap > 0.0
        && covered == points.len()
        && !points.is_empty();
    Ok(FoliationReport {
        phi0,
        phi1,
        slopes: [pair[0].0, pair[1].0],
        slopes_exact: [pair[0].1.clone(), pair[1].1.clone()],
        gamma1: s1,
        gamma2: s2,
        leaves_gamma1: shifts1.len(),
        leaves_gamma2: shifts2.len(),
        min_gap_gamma1: gap1,
        min_gap_gamma2: gap2,
        family_gap,
        test_points: points.len(),
        covered_points: covered,
        max_cover_distance,
        passed,
    })
}
