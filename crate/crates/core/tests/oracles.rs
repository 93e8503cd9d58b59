//! Reference values checked against independent floating-point oracles.

use approx::assert_relative_eq;

use loclab::dynamics::{
    integrate, origin_launch_state, solution_family, IntegratorConfig, StopRule,
};
use loclab::params::{fixed_point_eigenvalues, linearization_matrix};
use loclab::stability::{
    closed_form_jacobi, conjugate_points, exponent_translation, numeric_jacobi,
};
use loclab::surd::to_f64;
use loclab::{derive_params, LomseParams, LomseTriple, QuotientMetric};

fn params(n: u32, p: u32, k: u32) -> LomseParams {
    derive_params(LomseTriple::new(n, p, k).unwrap()).unwrap()
}

/// Raw constants straight from their defining formulas.
struct Raw {
    n: f64,
    p: f64,
    l2: f64,
    t2: f64,
    a: f64,
}

fn raw(n: u32, p: u32, k: u32) -> Raw {
    let (n, p, k) = (n as f64, p as f64, k as f64);
    let l2 = k * (k + n - 1.0) / p;
    let t2 = (p * l2 - n) / ((n - p) * l2);
    let a = 2.0 * (k * k + k * n - k - n) * n / ((k + n - 1.0) * k * (n + 1.0).powi(2));
    Raw { n, p, l2, t2, a }
}

fn log_u(r: &Raw, x: f64, y: f64) -> f64 {
    r.p * (x * x + r.l2 * y * y).ln() + 2.0 * (r.n - r.p) * x.ln()
}

#[test]
fn derived_constants_match_float_formulas() {
    for (n, p, k) in [
        (3, 2, 2),
        (3, 2, 4),
        (5, 4, 6),
        (7, 4, 2),
        (15, 8, 4),
        (9, 8, 10),
    ] {
        let prm = params(n, p, k);
        let r = raw(n, p, k);
        assert_relative_eq!(to_f64(&prm.lambda_sq), r.l2, max_relative = 1e-15);
        assert_relative_eq!(to_f64(&prm.tan_theta_sq), r.t2, max_relative = 1e-14);
        assert_relative_eq!(to_f64(&prm.a_coeff), r.a, max_relative = 1e-14);
        let d = (r.n + 1.0).powi(2) * (1.0 - 4.0 * r.a);
        assert_relative_eq!(
            to_f64(&prm.dyn_disc),
            d,
            max_relative = 1e-12,
            epsilon = 1e-12
        );
    }
}

#[test]
fn reference_constants() {
    let p = params(3, 2, 2);
    assert_eq!(to_f64(&p.lambda_sq), 4.0);
    assert_eq!(to_f64(&p.tan_theta_sq), 1.25);
    assert_eq!(to_f64(&p.a_coeff), 15.0 / 64.0);
    let p = params(5, 4, 6);
    assert_eq!(to_f64(&p.lambda_sq), 15.0);
    assert_relative_eq!(to_f64(&p.tan_theta_sq), 11.0 / 3.0);
    assert_relative_eq!(to_f64(&p.a_coeff), 55.0 / 216.0);
    assert_relative_eq!(to_f64(&params(3, 2, 4).a_coeff), 21.0 / 64.0);
}

#[test]
fn linearization_from_raw_entries() {
    for (n, p, k) in [(3, 2, 2), (3, 2, 4), (5, 4, 6), (7, 4, 2)] {
        let b = linearization_matrix(&params(n, p, k));
        let (nf, kf) = (n as f64, k as f64);
        let c = 2.0 * nf * (nf / (kf * (kf + nf - 1.0)) - 1.0);
        assert_eq!(to_f64(&b[0][0]), 0.0);
        assert_eq!(to_f64(&b[0][1]), 1.0);
        assert_relative_eq!(to_f64(&b[1][0]), c, max_relative = 1e-15);
        assert_eq!(to_f64(&b[1][1]), -(nf + 1.0));
    }
    let b = linearization_matrix(&params(5, 4, 6));
    assert_relative_eq!(to_f64(&b[1][0]), -55.0 / 6.0);
}

#[test]
fn eigenvalues_from_trace_and_determinant() {
    for (n, p, k) in [(3, 2, 2), (3, 2, 4), (5, 4, 6), (7, 4, 2)] {
        let prm = params(n, p, k);
        let b = linearization_matrix(&prm);
        let tr = to_f64(&b[1][1]);
        let det = -to_f64(&b[1][0]);
        let disc = tr * tr - 4.0 * det;
        let got = fixed_point_eigenvalues(&prm).values;
        if disc >= 0.0 {
            assert_relative_eq!(got[0].re, 0.5 * (tr + disc.sqrt()), max_relative = 1e-14);
            assert_relative_eq!(got[1].re, 0.5 * (tr - disc.sqrt()), max_relative = 1e-14);
        } else {
            assert_relative_eq!(got[0].re, 0.5 * tr, max_relative = 1e-14);
            assert_relative_eq!(got[0].im.abs(), 0.5 * (-disc).sqrt(), max_relative = 1e-14);
        }
    }
    let e = fixed_point_eigenvalues(&params(5, 4, 6)).values;
    assert!((e[0].re + 3.0).abs() < 1e-12 && (e[0].im.abs() - 1.0 / 6f64.sqrt()).abs() < 1e-12);
    let e = fixed_point_eigenvalues(&params(3, 2, 4)).values;
    assert!((e[0].re + 2.0).abs() < 1e-12 && (e[0].im.abs() - 5f64.sqrt() / 2.0).abs() < 1e-12);
    let e = fixed_point_eigenvalues(&params(3, 2, 2)).values;
    assert!((e[0].re + 1.5).abs() < 1e-12 && (e[1].re + 2.5).abs() < 1e-12);
}

#[test]
fn christoffels_match_log_derivatives() {
    let h = 1e-5;
    for (n, p, k) in [(3, 2, 2), (5, 4, 6)] {
        let prm = params(n, p, k);
        let r = raw(n, p, k);
        let m = QuotientMetric::new(&prm);
        for &(x, y) in &[(1.0, 1.0), (0.3, 2.0), (2.5, 0.1)] {
            let (a, b) = m.christoffel_ab(x, y).unwrap();
            let fa = 0.5 * (log_u(&r, x + h, y) - log_u(&r, x - h, y)) / (2.0 * h);
            let fb = 0.5 * (log_u(&r, x, y + h) - log_u(&r, x, y - h)) / (2.0 * h);
            assert_relative_eq!(a, fa, max_relative = 1e-6);
            assert_relative_eq!(b, fb, max_relative = 1e-6, epsilon = 1e-9);
        }
    }
}

#[test]
fn curvature_matches_laplacian_of_log_u() {
    let h = 1e-4;
    for (n, p, k) in [(3, 2, 2), (3, 2, 4), (5, 4, 6)] {
        let prm = params(n, p, k);
        let r = raw(n, p, k);
        let m = QuotientMetric::new(&prm);
        for &(x, y) in &[(1.0, 0.7), (0.8, 1.3), (1.7, 0.2)] {
            let f = |a: f64, b: f64| log_u(&r, a, b);
            let lap =
                (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / (h * h);
            let u = f(x, y).exp();
            assert_relative_eq!(
                m.gaussian_curvature(x, y).unwrap(),
                -lap / (2.0 * u),
                max_relative = 1e-5
            );
        }
    }
}

#[test]
fn loc_arclength_by_simpson() {
    for (n, p, k) in [(3, 2, 2), (3, 2, 4), (5, 4, 6)] {
        let prm = params(n, p, k);
        let r = raw(n, p, k);
        let phi = r.t2.sqrt();
        let speed = (1.0 + r.t2).sqrt();
        let g = |x: f64| {
            if x == 0.0 {
                0.0
            } else {
                (0.5 * log_u(&r, x, phi * x)).exp() * speed
            }
        };
        let m = 2000;
        let h = 1.0 / m as f64;
        let mut s = g(0.0) + g(1.0);
        for i in 1..m {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let simpson = s * h / 3.0;
        let got = QuotientMetric::new(&prm).loc_arclength(1.0).unwrap();
        assert_relative_eq!(got, simpson, max_relative = 1e-10);
    }
    let l = QuotientMetric::new(&params(3, 2, 4))
        .loc_arclength(1.0)
        .unwrap();
    assert_relative_eq!(l, 11.0 * 11f64.sqrt() / 4.0, max_relative = 1e-15);
    let l = QuotientMetric::new(&params(3, 2, 2))
        .loc_arclength(1.0)
        .unwrap();
    assert_relative_eq!(l, 2.25, max_relative = 1e-15);
}

#[test]
fn origin_orbit_of_322_is_monotone() {
    let prm = params(3, 2, 2);
    let cfg = IntegratorConfig::default().with_stop(StopRule::FixedPointEntry);
    let orbit = integrate(&prm, origin_launch_state(&prm, 1e-8), 400.0, &cfg).unwrap();
    assert!(orbit.states.windows(2).all(|w| w[1].phi > w[0].phi));
    assert!(orbit.last().offset.abs() < 1e-8);
    assert!(orbit.loc_crossings().is_empty());
}

#[test]
fn first_crossings_of_324() {
    let prm = params(3, 2, 4);
    let cfg = IntegratorConfig::default().with_stop(StopRule::LocCrossings(5));
    let orbit = integrate(&prm, origin_launch_state(&prm, 1e-8), 400.0, &cfg).unwrap();
    let c = orbit.loc_crossings();
    assert_eq!(c.len(), 5);
    // half period of the linearization near the cone point
    let half = std::f64::consts::PI / (5f64.sqrt() / 2.0);
    let last = c[4].t() - c[3].t();
    assert!((last - half).abs() < 1e-3 * half, "{last} vs {half}");
}

#[test]
fn solution_lengths_of_324_stay_below_the_cone() {
    let fam = solution_family(&params(3, 2, 4), 5).unwrap();
    let bound = 11.0 * 11f64.sqrt() / 4.0;
    assert_eq!(fam.len(), 5);
    for w in fam.windows(2) {
        assert!(w[1].deficit < w[0].deficit);
    }
    for s in &fam {
        assert!(s.deficit > 0.0);
        assert!(s.length < bound + 1e-12);
        assert_relative_eq!(s.loc_length, bound, max_relative = 1e-15);
    }
}

#[test]
fn jacobi_exponents_from_quadratic() {
    for (n, p, k) in [(3, 2, 2), (3, 2, 4), (5, 4, 6)] {
        let r = raw(n, p, k);
        let v = closed_form_jacobi(&params(n, p, k)).exponent_values();
        let d = 1.0 - 4.0 * r.a;
        if d > 0.0 {
            assert_relative_eq!(v[0].re, 0.5 + 0.5 * d.sqrt(), max_relative = 1e-14);
        } else {
            assert_relative_eq!(v[0].im.abs(), 0.5 * (-d).sqrt(), max_relative = 1e-12);
        }
        // each exponent solves l^2 - l + a = 0
        for l in v {
            assert!((l * l - l + r.a).norm() < 1e-14);
        }
    }
}

#[test]
fn conjugate_ratio_324() {
    let list = conjugate_points(&params(3, 2, 4), 11.0 * 11f64.sqrt() / 4.0, 3).unwrap();
    let expect = (8.0 * std::f64::consts::PI / 5f64.sqrt()).exp();
    for r in list.ratios() {
        assert_relative_eq!(r, expect, max_relative = 1e-10);
    }
}

#[test]
fn jacobi_scale_covariance() {
    // J(c s) solves the same equation, so data rescaled by c reproduces it
    let prm = params(3, 2, 4);
    let c = 3.0;
    let a = numeric_jacobi(&prm, (1.0, 10.0), 1.0, (0.4, 0.9)).unwrap();
    let b = numeric_jacobi(&prm, (1.0 / c, 10.0 / c), 1.0 / c, (0.4, 0.9 * c)).unwrap();
    for (ja, jb) in a.j.iter().zip(&b.j) {
        assert_relative_eq!(ja, jb, max_relative = 1e-8, epsilon = 1e-10);
    }
}

#[test]
fn translation_frequencies() {
    let r = exponent_translation(&params(5, 4, 6));
    assert!((r.frequency.unwrap() - 1.0 / 6f64.sqrt()).abs() < 1e-12);
    let r = exponent_translation(&params(3, 2, 4));
    assert!((r.frequency.unwrap() - 5f64.sqrt() / 2.0).abs() < 1e-12);
    assert_eq!(r.modulus_exponent.as_deref(), Some("2"));
}
