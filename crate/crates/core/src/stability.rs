//! Jacobi fields along the cone ray.
//!
//! In the arclength `s` of the ray the curvature is `K = a / s^2`, so the
//! Jacobi equation `J'' + a J / s^2 = 0` is an Euler equation with exponents
//! `(1 ± sqrt(1 - 4a)) / 2`. Complex exponents give infinitely many
//! conjugate points accumulating at the vertex.

use num_complex::Complex64;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::QuotientMetric;
use crate::ode::{ErrorNorm, OdeSystem, Stepper, Tolerances};
use crate::params::{fixed_point_eigenvalues, ConeType, LomseParams};
use crate::surd::{fmt_rational, int, rat, to_f64, QuadSurd, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    DistinctReal,
    RepeatedLog,
    Oscillatory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSolution {
    pub params: LomseParams,
    /// `1/2 ± (1/2) sqrt(1 - 4a)`, the `+` root first.
    pub exponents: [QuadSurd; 2],
    pub basis_kind: BasisKind,
}

/// A particular solution `c1 b1(s) + c2 b2(s)` of the Euler equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particular {
    kind: BasisKind,
    /// Real exponents, or `(1/2, omega)` in the oscillatory case.
    l: [f64; 2],
    c: [f64; 2],
}

impl JacobiSolution {
    pub fn exponent_values(&self) -> [Complex64; 2] {
        [
            self.exponents[0].to_complex(),
            self.exponents[1].to_complex(),
        ]
    }

    /// Exact `l1 + l2`.
    pub fn exponent_sum(&self) -> Option<Rational> {
        self.exponents[0]
            .checked_add(&self.exponents[1])
            .and_then(|s| s.as_rational())
    }

    /// Exact `l1 l2`; the exponents are conjugate so this is the norm.
    pub fn exponent_product(&self) -> Rational {
        self.exponents[0].norm()
    }

    /// `sqrt(4a - 1) / 2` for the oscillatory case.
    pub fn omega(&self) -> Option<f64> {
        match self.basis_kind {
            BasisKind::Oscillatory => Some(0.5 * (-to_f64(&self.params.jacobi_disc)).sqrt()),
            _ => None,
        }
    }

    fn real_params(&self) -> [f64; 2] {
        match self.basis_kind {
            BasisKind::DistinctReal => {
                let v = self.exponent_values();
                [v[0].re, v[1].re]
            }
            BasisKind::RepeatedLog => [0.5, 0.5],
            BasisKind::Oscillatory => [0.5, self.omega().unwrap_or(0.0)],
        }
    }

    /// Basis values and derivatives at `s`.
    pub fn basis(&self, s: f64) -> [(f64, f64); 2] {
        basis(self.basis_kind, self.real_params(), s)
    }

    /// The solution with `J(s0) = j0`, `J'(s0) = dj0`.
    pub fn particular(&self, s0: f64, j0: f64, dj0: f64) -> Result<Particular> {
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::Domain(format!("s0 = {s0} must be positive")));
        }
        let [(u, du), (v, dv)] = self.basis(s0);
        let det = u * dv - du * v;
        let c1 = (j0 * dv - dj0 * v) / det;
        let c2 = (u * dj0 - du * j0) / det;
        Ok(Particular {
            kind: self.basis_kind,
            l: self.real_params(),
            c: [c1, c2],
        })
    }
}

fn basis(kind: BasisKind, l: [f64; 2], s: f64) -> [(f64, f64); 2] {
    match kind {
        BasisKind::DistinctReal => [
            (s.powf(l[0]), l[0] * s.powf(l[0] - 1.0)),
            (s.powf(l[1]), l[1] * s.powf(l[1] - 1.0)),
        ],
        BasisKind::RepeatedLog => {
            let r = s.sqrt();
            let ln = s.ln();
            [(r, 0.5 / r), (r * ln, (0.5 * ln + 1.0) / r)]
        }
        BasisKind::Oscillatory => {
            let r = s.sqrt();
            let w = l[1];
            let (sn, cs) = (w * s.ln()).sin_cos();
            [
                (r * cs, (0.5 * cs - w * sn) / r),
                (r * sn, (0.5 * sn + w * cs) / r),
            ]
        }
    }
}

impl Particular {
    pub fn eval(&self, s: f64) -> f64 {
        let b = basis(self.kind, self.l, s);
        self.c[0] * b[0].0 + self.c[1] * b[1].0
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let b = basis(self.kind, self.l, s);
        self.c[0] * b[0].1 + self.c[1] * b[1].1
    }

    /// `|c1 b1(s)| + |c2 b2(s)|`, the scale against which errors are
    /// measured where the solution itself passes through zero.
    pub fn envelope(&self, s: f64) -> f64 {
        let b = basis(self.kind, self.l, s);
        match self.kind {
            BasisKind::Oscillatory => s.sqrt() * self.c[0].hypot(self.c[1]),
            _ => (self.c[0] * b[0].0).abs() + (self.c[1] * b[1].0).abs(),
        }
    }
}

pub fn closed_form_jacobi(params: &LomseParams) -> JacobiSolution {
    let disc = params.jacobi_disc;
    let first = QuadSurd::new(rat(1, 2), rat(1, 2), disc);
    let basis_kind = if disc.is_zero() {
        BasisKind::RepeatedLog
    } else if disc.is_negative() {
        BasisKind::Oscillatory
    } else {
        BasisKind::DistinctReal
    };
    JacobiSolution {
        params: params.clone(),
        exponents: [first, first.conj()],
        basis_kind,
    }
}

/// Evidence that no nontrivial field vanishes twice (Type I).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoConjugateCertificate {
    pub pairs_checked: usize,
    pub decades: f64,
    /// Smallest `|det| / (s1^{l1} s2^{l2})` over the sampled pairs.
    pub min_normalized_det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugatePointList {
    pub s_anchor: f64,
    /// Zeros below the anchor, largest first.
    pub zeros: Vec<f64>,
    pub count_requested: usize,
    /// `s_anchor exp(-2 pi m / sqrt(4a - 1))`.
    pub closed_form: Vec<f64>,
    pub max_rel_deviation: f64,
    pub certificate: Option<NoConjugateCertificate>,
}

impl ConjugatePointList {
    /// Ratios of consecutive zeros.
    pub fn ratios(&self) -> Vec<f64> {
        self.zeros.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

pub const CERTIFICATE_DECADES: f64 = 6.0;
const CERTIFICATE_POINTS: usize = 25;

fn certificate(sol: &JacobiSolution, s_anchor: f64) -> NoConjugateCertificate {
    let grid: Vec<f64> = (0..CERTIFICATE_POINTS)
        .map(|i| {
            s_anchor * 10f64.powf(-CERTIFICATE_DECADES * i as f64 / (CERTIFICATE_POINTS - 1) as f64)
        })
        .collect();
    let mut min_det = f64::INFINITY;
    let mut pairs = 0;
    for (i, &s1) in grid.iter().enumerate() {
        for &s2 in &grid[i + 1..] {
            let x = (s2 / s1).ln();
            let det = match sol.basis_kind {
                // s1^{l1} s2^{l2} - s1^{l2} s2^{l1}, divided by the first term
                BasisKind::DistinctReal => {
                    let v = sol.exponent_values();
                    -((v[0].re - v[1].re) * x).exp_m1()
                }
                // sqrt(s1 s2) (ln s2 - ln s1), divided by sqrt(s1 s2)
                BasisKind::RepeatedLog => x,
                BasisKind::Oscillatory => (sol.omega().unwrap_or(0.0) * x).sin(),
            };
            min_det = min_det.min(det.abs());
            pairs += 1;
        }
    }
    NoConjugateCertificate {
        pairs_checked: pairs,
        decades: CERTIFICATE_DECADES,
        min_normalized_det: min_det,
    }
}

/// Zeros below `s_anchor` of the Jacobi field vanishing at `s_anchor`.
pub fn conjugate_points(
    params: &LomseParams,
    s_anchor: f64,
    count: usize,
) -> Result<ConjugatePointList> {
    if !(s_anchor > 0.0 && s_anchor.is_finite()) {
        return Err(Error::Domain(format!(
            "anchor s = {s_anchor} must be positive"
        )));
    }
    let sol = closed_form_jacobi(params);
    let Some(omega) = sol.omega() else {
        return Ok(ConjugatePointList {
            s_anchor,
            zeros: Vec::new(),
            count_requested: count,
            closed_form: Vec::new(),
            max_rel_deviation: 0.0,
            certificate: Some(certificate(&sol, s_anchor)),
        });
    };

    // sqrt(s) sin(omega (ln s - ln s_anchor)), in x = ln s
    let xa = s_anchor.ln();
    let f = |x: f64| (omega * (x - xa)).sin();
    let period = std::f64::consts::PI / omega;
    let step = period / 8.0;
    let mut zeros = Vec::with_capacity(count);
    let mut hi = xa - 0.5 * step;
    while zeros.len() < count {
        let lo = hi - step;
        if f(lo) == 0.0 {
            zeros.push(lo.exp());
            hi = lo - 0.5 * step;
            continue;
        }
        if (f(lo) < 0.0) != (f(hi) < 0.0) {
            let (mut a, mut b) = (lo, hi);
            let fb = f(b);
            while b - a > 1e-13 * a.abs().max(1.0) {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                if (f(m) < 0.0) == (fb < 0.0) {
                    b = m;
                } else {
                    a = m;
                }
            }
            zeros.push((0.5 * (a + b)).exp());
        }
        hi = lo;
    }
    let closed_form: Vec<f64> = (1..=count)
        .map(|m| (xa - m as f64 * period).exp())
        .collect();
    let max_rel_deviation = zeros
        .iter()
        .zip(&closed_form)
        .map(|(z, c)| ((z - c) / c).abs())
        .fold(0.0, f64::max);
    Ok(ConjugatePointList {
        s_anchor,
        zeros,
        count_requested: count,
        closed_form,
        max_rel_deviation,
        certificate: None,
    })
}

/// The Jacobi equation in `x = ln s` with state `(J, s J')`.
struct EulerJacobi {
    a: f64,
}

impl OdeSystem<2> for EulerJacobi {
    fn rhs(&self, _x: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], y[1] - self.a * y[0]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiSamples {
    pub s: Vec<f64>,
    pub j: Vec<f64>,
    pub dj: Vec<f64>,
}

impl JacobiSamples {
    /// Sign changes of `J`, located by linear interpolation in `ln s`.
    pub fn sign_changes(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 1..self.s.len() {
            let (j0, j1) = (self.j[i - 1], self.j[i]);
            if j0 != 0.0 && (j1 == 0.0 || (j0 < 0.0) != (j1 < 0.0)) {
                let (x0, x1) = (self.s[i - 1].ln(), self.s[i].ln());
                let x = x0 + (x1 - x0) * j0 / (j0 - j1);
                out.push(x.exp());
            }
        }
        out
    }
}

/// Samples per unit of `ln s` returned by [`numeric_jacobi`].
pub const JACOBI_SAMPLES_PER_UNIT: usize = 64;

/// Integrates `J'' + a J / s^2 = 0` from `(J, J')` given at `s0` over
/// `s_range`; `s0` may lie anywhere in the range.
pub fn numeric_jacobi(
    params: &LomseParams,
    s_range: (f64, f64),
    s0: f64,
    boundary: (f64, f64),
) -> Result<JacobiSamples> {
    numeric_jacobi_with_coefficient(to_f64(&params.a_coeff), s_range, s0, boundary)
}

pub fn numeric_jacobi_with_coefficient(
    a: f64,
    s_range: (f64, f64),
    s0: f64,
    boundary: (f64, f64),
) -> Result<JacobiSamples> {
    let (lo, hi) = s_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Domain(format!("bad range [{lo}, {hi}]")));
    }
    if !(s0 >= lo && s0 <= hi) {
        return Err(Error::InvalidArgument(format!(
            "s0 = {s0} outside [{lo}, {hi}]"
        )));
    }
    let sys = EulerJacobi { a };
    let tol = Tolerances {
        rtol: 1e-13,
        atol: 1e-300,
        norm: ErrorNorm::Euclidean,
    };
    let x0 = s0.ln();
    let y0 = [boundary.0, s0 * boundary.1];
    let (xl, xh) = (lo.ln(), hi.ln());
    let count = (((xh - xl) * JACOBI_SAMPLES_PER_UNIT as f64).ceil() as usize).max(1) + 1;
    let grid: Vec<f64> = (0..count)
        .map(|i| {
            if i + 1 == count {
                xh
            } else {
                xl + (xh - xl) * i as f64 / (count - 1) as f64
            }
        })
        .collect();

    let mut values = vec![[0.0; 2]; count];
    let split = grid.partition_point(|&x| x < x0);
    // forward over grid[split..], backward over grid[..split]
    for (targets, dir) in [
        ((split..count).collect::<Vec<_>>(), 1.0),
        ((0..split).rev().collect::<Vec<_>>(), -1.0),
    ] {
        if targets.is_empty() {
            continue;
        }
        let end = if dir > 0.0 { xh } else { xl };
        let mut st = Stepper::new(&sys, x0, y0, dir, tol, 0.25);
        let mut idx = 0;
        if x0 == end {
            for &g in &targets {
                values[g] = y0;
            }
            continue;
        }
        while idx < targets.len() {
            let step = st.step(end)?;
            let (a_, b_) = (step.t0.min(step.t1()), step.t0.max(step.t1()));
            while idx < targets.len() {
                let x = grid[targets[idx]];
                if x < a_ || x > b_ {
                    if (dir > 0.0 && x < a_) || (dir < 0.0 && x > b_) {
                        values[targets[idx]] = step.y0();
                        idx += 1;
                        continue;
                    }
                    break;
                }
                values[targets[idx]] = step.eval(x);
                idx += 1;
            }
            if st.t() == end {
                while idx < targets.len() {
                    values[targets[idx]] = st.y();
                    idx += 1;
                }
            }
        }
    }
    let s: Vec<f64> = grid.iter().map(|x| x.exp()).collect();
    let j = values.iter().map(|v| v[0]).collect();
    let dj = values.iter().zip(&s).map(|(v, s)| v[1] / s).collect();
    Ok(JacobiSamples { s, j, dj })
}

/// Largest `|J_num - J_exact| / envelope` over the samples.
pub fn compare_with_closed_form(samples: &JacobiSamples, exact: &Particular) -> f64 {
    samples
        .s
        .iter()
        .zip(&samples.j)
        .map(|(&s, &j)| (j - exact.eval(s)).abs() / exact.envelope(s))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    pub cone_type: ConeType,
    pub exponents: [String; 2],
    pub basis_kind: BasisKind,
    /// Arclength of the segment `r in (0, 1]`.
    pub loc_length: f64,
    pub conjugate_points: ConjugatePointList,
    /// Zeros of a numerically integrated field vanishing at `loc_length`,
    /// with the curvature coefficient taken from the metric.
    pub numeric_zeros: Vec<f64>,
    pub geometric_a: f64,
}

/// Conjugate points requested by [`stability_verdict`].
pub const VERDICT_COUNT: usize = 2;

pub fn stability_verdict(params: &LomseParams) -> Result<StabilityVerdict> {
    let metric = QuotientMetric::new(params);
    let loc_length = metric.loc_arclength(1.0)?;
    let sol = closed_form_jacobi(params);
    let list = conjugate_points(params, loc_length, VERDICT_COUNT)?;

    // independent route: the curvature of the metric along the ray
    let phi0 = params.tan_theta();
    let geometric_a = metric.gaussian_curvature(1.0, phi0)? * loc_length * loc_length;
    let lower = match sol.omega() {
        Some(w) => {
            let span = (VERDICT_COUNT as f64 + 0.5) * std::f64::consts::PI / w;
            loc_length * (-span).exp()
        }
        None => loc_length * 10f64.powf(-CERTIFICATE_DECADES),
    };
    let samples =
        numeric_jacobi_with_coefficient(geometric_a, (lower, loc_length), loc_length, (0.0, 1.0))?;
    let numeric_zeros: Vec<f64> = {
        let mut z = samples.sign_changes();
        z.retain(|s| *s < loc_length * (1.0 - 1e-9));
        z.reverse();
        z
    };

    let verdict = if list.zeros.is_empty() {
        Verdict::Stable
    } else {
        Verdict::Unstable
    };
    let expected = match params.cone_type {
        ConeType::TypeI => Verdict::Stable,
        ConeType::TypeII => Verdict::Unstable,
    };
    if verdict != expected {
        return Err(Error::InternalInconsistency(format!(
            "conjugate points give {verdict:?} but {} is Type {}",
            params.triple, params.cone_type
        )));
    }
    if numeric_zeros.len() != list.zeros.len() {
        return Err(Error::InternalInconsistency(format!(
            "numeric field has {} zeros, closed form {}",
            numeric_zeros.len(),
            list.zeros.len()
        )));
    }
    for (z, c) in numeric_zeros.iter().zip(&list.zeros) {
        if ((z - c) / c).abs() > 1e-4 {
            return Err(Error::InternalInconsistency(format!(
                "numeric conjugate point {z:e} far from {c:e}"
            )));
        }
    }
    Ok(StabilityVerdict {
        verdict,
        cone_type: params.cone_type,
        exponents: [sol.exponents[0].to_string(), sol.exponents[1].to_string()],
        basis_kind: sol.basis_kind,
        loc_length,
        conjugate_points: list,
        numeric_zeros,
        geometric_a,
    })
}

/// Consistency of the exponents between the arclength and radius pictures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationReport {
    /// `(n+1)^2 + 8n(n/(k(n+k-1)) - 1)`.
    pub radicand: String,
    pub radicand_matches: bool,
    /// Exponents `((n+1) ± sqrt(D)) / 2` of the radius form.
    pub our_cal: [String; 2],
    /// Exponents `(-(n+1) ± sqrt(D)) / 2` of the phase-plane linearization.
    pub b4_cal: [String; 2],
    pub shift_is_n_plus_one: bool,
    /// Arclength exponents times `n+1` equal the radius exponents.
    pub arclength_exponents_match: bool,
    pub modulus_exponent: Option<String>,
    pub frequency_sq: Option<String>,
    pub frequency: Option<f64>,
    /// `Im` of the fixed-point eigenvalue.
    pub eigen_frequency: Option<f64>,
    pub frequency_error: Option<f64>,
    /// Relative residual of the radius-form equation on the real basis.
    pub basis_residual: f64,
    /// Wronskian of the real basis at `r = 1`.
    pub wronskian: f64,
    pub consistent: bool,
}

/// The real basis of `r^2 J'' - n r J' + a (n+1)^2 J = 0` built from the
/// phase-plane eigenvalues.
pub fn radius_basis(params: &LomseParams, r: f64) -> [f64; 2] {
    let n1 = params.n() as f64 + 1.0;
    let d = to_f64(&params.dyn_disc);
    if d < 0.0 {
        let m = 0.5 * n1;
        let w = 0.5 * (-d).sqrt();
        let amp = r.powf(m);
        let (sn, cs) = (w * r.ln()).sin_cos();
        [amp * sn, amp * cs]
    } else {
        let root = d.sqrt();
        [r.powf(0.5 * (n1 + root)), r.powf(0.5 * (n1 - root))]
    }
}

fn radius_residual(params: &LomseParams, f: impl Fn(f64) -> f64, r: f64) -> f64 {
    let n = params.n() as f64;
    let c = to_f64(&params.a_coeff) * (n + 1.0) * (n + 1.0);
    let h = 1e-3 * r;
    let v = [f(r - 2.0 * h), f(r - h), f(r), f(r + h), f(r + 2.0 * h)];
    let d1 = (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h);
    let d2 = (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * h * h);
    let terms = [r * r * d2, -n * r * d1, c * v[2]];
    let scale = terms.iter().map(|t| t.abs()).sum::<f64>();
    (terms.iter().sum::<f64>()).abs() / scale
}

pub fn exponent_translation(params: &LomseParams) -> TranslationReport {
    let n = params.n() as i128;
    let k = params.k() as i128;
    let n1 = int(n + 1);
    let radicand = n1 * n1 + int(8 * n) * (rat(n, k * (n + k - 1)) - int(1));
    let radicand_matches = radicand == params.dyn_disc && radicand == n1 * n1 * params.jacobi_disc;

    let half = rat(1, 2);
    let our = QuadSurd::new(n1 * half, half, radicand);
    let b4 = QuadSurd::new(-n1 * half, half, radicand);
    let shift_is_n_plus_one = [(our, b4), (our.conj(), b4.conj())]
        .iter()
        .all(|(o, b)| (*o - *b).and_then(|d| d.as_rational()) == Some(n1));

    let sol = closed_form_jacobi(params);
    let arclength_exponents_match =
        sol.exponents[0] * n1 == our && sol.exponents[1] * n1 == our.conj();

    let eig = fixed_point_eigenvalues(params);
    let (modulus_exponent, frequency_sq, frequency, eigen_frequency, frequency_error) =
        if radicand.is_negative() {
            let m = our.real_part_exact().unwrap_or(Rational::zero());
            let f2 = our.imag_sq_exact();
            let f = to_f64(&f2).sqrt();
            let e = eig.values[0].im.abs();
            (
                Some(fmt_rational(&m)),
                Some(fmt_rational(&f2)),
                Some(f),
                Some(e),
                Some((f - e).abs()),
            )
        } else {
            (None, None, None, None, None)
        };

    let radii = [0.5, 0.8, 1.0, 1.7, 3.0];
    let basis_residual = radii
        .iter()
        .flat_map(|&r| {
            [
                radius_residual(params, |x| radius_basis(params, x)[0], r),
                radius_residual(params, |x| radius_basis(params, x)[1], r),
            ]
        })
        .fold(0.0, f64::max);
    let h = 1e-5;
    let b = |r: f64| radius_basis(params, r);
    let (u, v) = (
        b(1.0),
        [
            (b(1.0 + h)[0] - b(1.0 - h)[0]) / (2.0 * h),
            (b(1.0 + h)[1] - b(1.0 - h)[1]) / (2.0 * h),
        ],
    );
    let wronskian = u[0] * v[1] - v[0] * u[1];

    let consistent = radicand_matches
        && shift_is_n_plus_one
        && arclength_exponents_match
        && frequency_error.is_none_or(|e| e < 1e-12)
        && basis_residual < 1e-8
        && wronskian.abs() > 1e-8;
    TranslationReport {
        radicand: fmt_rational(&radicand),
        radicand_matches,
        our_cal: [our.to_string(), our.conj().to_string()],
        b4_cal: [b4.to_string(), b4.conj().to_string()],
        shift_is_n_plus_one,
        arclength_exponents_match,
        modulus_exponent,
        frequency_sq,
        frequency,
        eigen_frequency,
        frequency_error,
        basis_residual,
        wronskian,
        consistent,
    }
}
