//! Named invariant suites.
//!
//! Each check reports a measured error and the tolerance it is held to.
//! Exact checks report the number of mismatches against a tolerance of zero.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::Serialize;

use crate::dynamics::{
    foliation_check_with, launch_sensitivity, residual_profile, solution_family_with,
    FoliationConfig, SolutionConfig,
};
use crate::error::{Error, Result};
use crate::geometry::{curve_length, PlaneCurve, QuotientMetric};
use crate::params::{
    derive_params, enumerate_admissible_with, fixed_point_eigenvalues, linearization_matrix,
    ConeType, LomseParams, LomseTriple,
};
use crate::stability::{
    closed_form_jacobi, compare_with_closed_form, conjugate_points, exponent_translation,
    numeric_jacobi, stability_verdict, Verdict,
};
use crate::surd::{int, rat};
use crate::sweep::Strategy;

pub const N_MAX: u32 = 15;
pub const K_MAX: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Algebra,
    Geometry,
    Dynamics,
    Stability,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Algebra,
        Suite::Geometry,
        Suite::Dynamics,
        Suite::Stability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Geometry => "geometry",
            Suite::Dynamics => "dynamics",
            Suite::Stability => "stability",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    One(Suite),
    All,
}

impl Scope {
    pub fn suites(self) -> Vec<Suite> {
        match self {
            Scope::One(s) => vec![s],
            Scope::All => Suite::ALL.to_vec(),
        }
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "algebra" => Scope::One(Suite::Algebra),
            "geometry" => Scope::One(Suite::Geometry),
            "dynamics" => Scope::One(Suite::Dynamics),
            "stability" => Scope::One(Suite::Stability),
            "all" => Scope::All,
            _ => return Err(Error::InvalidArgument(format!("unknown scope '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub suite: Suite,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn within(suite: Suite, name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            suite,
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
            detail: String::new(),
        }
    }

    fn exact(suite: Suite, name: &str, mismatches: usize) -> Self {
        Self::within(suite, name, mismatches as f64, 0.0)
    }

    fn failed(suite: Suite, name: &str, err: &Error) -> Self {
        Self {
            suite,
            name: name.into(),
            measured: f64::NAN,
            tolerance: 0.0,
            passed: false,
            detail: err.to_string(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerifyOptions {
    pub strategy: Strategy,
    /// Perturbs the curvature coefficient fed to the curvature and Jacobi
    /// checks so that they must fail.
    pub inject_fault: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub checks: Vec<CheckOutcome>,
    pub passed: usize,
    pub failed: usize,
}

impl Summary {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

pub fn run(scope: Scope, opts: VerifyOptions) -> Summary {
    let mut checks = Vec::new();
    for suite in scope.suites() {
        checks.extend(match suite {
            Suite::Algebra => algebra(opts),
            Suite::Geometry => geometry(opts),
            Suite::Dynamics => dynamics(opts),
            Suite::Stability => stability(opts),
        });
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    Summary {
        failed: checks.len() - passed,
        passed,
        checks,
    }
}

fn representative(n: u32, p: u32, k: u32) -> LomseParams {
    derive_params(LomseTriple::new(n, p, k).expect("representative triple"))
        .expect("representative triple")
}

/// The Type I / Type II lists as stated for the enumerated range.
pub fn expected_type(t: LomseTriple) -> ConeType {
    match (t.n, t.p) {
        (3, 2) if t.k >= 4 => ConeType::TypeII,
        (5, 4) if t.k >= 6 => ConeType::TypeII,
        _ => ConeType::TypeI,
    }
}

fn all_params(strategy: Strategy) -> Vec<LomseParams> {
    enumerate_admissible_with(N_MAX, K_MAX, strategy)
        .into_iter()
        .map(|(t, _)| derive_params(t).expect("enumerated triple"))
        .collect()
}

fn algebra(opts: VerifyOptions) -> Vec<CheckOutcome> {
    use Suite::Algebra as S;
    let all = all_params(opts.strategy);
    let mut out = Vec::new();

    let wrong = all
        .iter()
        .filter(|p| p.cone_type != expected_type(p.triple))
        .count();
    out.push(
        CheckOutcome::exact(S, "classification_partition", wrong)
            .with_detail(format!("{} triples", all.len())),
    );

    let bridge = all
        .iter()
        .filter(|p| !p.discriminant_bridge_holds())
        .count();
    out.push(CheckOutcome::exact(S, "discriminant_bridge", bridge));

    let sv = all
        .iter()
        .filter(|p| {
            !p.singular_value_residual().is_zero() || !p.angle_identity_residual().is_zero()
        })
        .count();
    out.push(CheckOutcome::exact(S, "singular_value_identities", sv));

    let sign = all
        .iter()
        .filter(|p| {
            let by_sign = if p.jacobi_disc > rat(0, 1) {
                ConeType::TypeI
            } else {
                ConeType::TypeII
            };
            by_sign != p.cone_type || p.jacobi_disc.is_zero()
        })
        .count();
    out.push(CheckOutcome::exact(S, "delta_nonzero_and_sign", sign));

    let p546 = representative(5, 4, 6);
    let b = linearization_matrix(&p546);
    let expect = [[int(0), int(1)], [rat(-55, 6), int(-6)]];
    let mism = (0..4)
        .filter(|i| b[i / 2][i % 2] != expect[i / 2][i % 2])
        .count();
    out.push(CheckOutcome::exact(S, "linearization_546", mism));

    let eig = fixed_point_eigenvalues(&p546).values;
    let im = 1.0 / 6f64.sqrt();
    let err = (eig[0].re + 3.0)
        .abs()
        .max((eig[0].im.abs() - im).abs())
        .max((eig[1].re + 3.0).abs());
    out.push(CheckOutcome::within(S, "eigenvalues_546", err, 1e-12));

    let p322 = representative(3, 2, 2);
    let row = [
        p322.lambda_sq,
        p322.tan_theta_sq,
        p322.a_coeff,
        p322.jacobi_disc,
    ];
    let want = [int(4), rat(5, 4), rat(15, 64), rat(1, 16)];
    let mism = row.iter().zip(&want).filter(|(a, b)| a != b).count();
    out.push(CheckOutcome::exact(S, "derived_constants_322", mism));
    out
}

fn curvature_error(params: &LomseParams, fault: bool) -> Result<f64> {
    let metric = QuotientMetric::new(params);
    let phi0 = params.tan_theta();
    let a = params.a_f64() + if fault { 1e-3 } else { 0.0 };
    let mut worst: f64 = 0.0;
    for i in 0..21 {
        let r = 10f64.powf(-1.0 + 2.0 * i as f64 / 20.0);
        let s = metric.loc_arclength(r)?;
        let ks2 = metric.gaussian_curvature(r, phi0 * r)? * s * s;
        worst = worst.max((ks2 - a).abs() / a.abs());
    }
    Ok(worst)
}

fn geometry(opts: VerifyOptions) -> Vec<CheckOutcome> {
    use Suite::Geometry as S;
    let mut out = Vec::new();
    for (n, p, k) in [(3, 2, 2), (3, 2, 4), (5, 4, 6)] {
        let prm = representative(n, p, k);
        let name = format!("curvature_law_{n}{p}{k}");
        out.push(match curvature_error(&prm, opts.inject_fault) {
            Ok(e) => CheckOutcome::within(S, &name, e, 1e-8),
            Err(e) => CheckOutcome::failed(S, &name, &e),
        });
    }

    let p324 = representative(3, 2, 4);
    let metric = QuotientMetric::new(&p324);
    let closed = 11.0 * 11f64.sqrt() / 4.0;
    let loc = metric.loc_arclength(1.0).unwrap_or(f64::NAN);
    out.push(CheckOutcome::within(
        S,
        "loc_length_324",
        ((loc - closed) / closed).abs(),
        1e-14,
    ));

    let name = "loc_segment_quadrature";
    let checked = (|| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (n, p, k) in [(3, 2, 2), (3, 2, 4), (5, 4, 6), (7, 4, 2)] {
            let prm = representative(n, p, k);
            let metric = QuotientMetric::new(&prm);
            let seg = PlaneCurve::loc_segment(&prm, 0.2, 1.0, 40)?;
            let l = curve_length(&metric, &seg, metric.length_tolerance())?;
            let exact = metric.loc_arclength(1.0)? - metric.loc_arclength(0.2)?;
            worst = worst.max(((l - exact) / exact).abs());
        }
        Ok(worst)
    })();
    out.push(match checked {
        Ok(e) => CheckOutcome::within(S, name, e, 1e-9),
        Err(e) => CheckOutcome::failed(S, name, &e),
    });
    out
}

fn dynamics(opts: VerifyOptions) -> Vec<CheckOutcome> {
    use Suite::Dynamics as S;
    let cfg = SolutionConfig::default();
    let mut out = Vec::new();

    for (n, p, k, m) in [(3, 2, 2, 1), (7, 4, 2, 1), (3, 2, 4, 6), (5, 4, 6, 3)] {
        let prm = representative(n, p, k);
        let tag = format!("{n}{p}{k}");
        let family = match solution_family_with(&prm, m, &cfg, opts.strategy) {
            Ok(f) => f,
            Err(e) => {
                out.push(CheckOutcome::failed(
                    S,
                    &format!("solution_family_{tag}"),
                    &e,
                ));
                continue;
            }
        };
        let profiles: Vec<_> = family
            .iter()
            .map(|s| residual_profile(&prm, &s.curve))
            .collect();
        let mut ode1: f64 = 0.0;
        let mut geo: f64 = 0.0;
        let mut err = None;
        for pr in profiles {
            match pr {
                Ok(pr) => {
                    ode1 = ode1.max(pr.max_ode1());
                    geo = geo.max(pr.max_geodesic());
                }
                Err(e) => err = Some(e),
            }
        }
        if let Some(e) = err {
            out.push(CheckOutcome::failed(S, &format!("residuals_{tag}"), &e));
            continue;
        }
        out.push(CheckOutcome::within(
            S,
            &format!("ode1_residual_{tag}"),
            ode1,
            1e-6,
        ));
        out.push(CheckOutcome::within(
            S,
            &format!("geodesic_residual_{tag}"),
            geo,
            1e-6,
        ));

        let len_err = family
            .iter()
            .map(|s| (s.length - s.identity_length()).abs() / s.loc_length)
            .fold(0.0, f64::max);
        out.push(CheckOutcome::within(
            S,
            &format!("length_identity_{tag}"),
            len_err,
            1e-9,
        ));

        if (n, p, k) == (3, 2, 4) {
            let last = family.last().map_or(f64::NAN, |s| s.deficit / s.loc_length);
            out.push(
                CheckOutcome::within(S, "volume_limit_324", last, 0.01).with_detail(format!(
                    "{} solutions, deficits strictly decreasing",
                    family.len()
                )),
            );
        }
    }

    let prm = representative(3, 2, 4);
    out.push(match launch_sensitivity(&prm, 3, &cfg) {
        Ok(c) => CheckOutcome::within(S, "launch_sensitivity_324", c.deficit_rel_change, 1e-6)
            .with_detail(format!("time shift error {:.3e}", c.time_shift_error)),
        Err(e) => CheckOutcome::failed(S, "launch_sensitivity_324", &e),
    });

    for (n, p, k, dphi) in [(3, 2, 2, 0.05), (7, 4, 2, 0.02)] {
        let prm = representative(n, p, k);
        let name = format!("foliation_{n}{p}{k}");
        let phi1 = prm.tan_theta() + dphi;
        out.push(
            match foliation_check_with(&prm, phi1, &FoliationConfig::default(), opts.strategy) {
                Ok(rep) => {
                    let ok = rep.passed && rep.gamma1.monotone && rep.gamma2.monotone;
                    CheckOutcome::within(S, &name, if ok { 0.0 } else { 1.0 }, 0.0).with_detail(
                        format!(
                            "{}/{} covered, min gaps {:.3e} {:.3e}",
                            rep.covered_points,
                            rep.test_points,
                            rep.min_gap_gamma1,
                            rep.min_gap_gamma2
                        ),
                    )
                }
                Err(e) => CheckOutcome::failed(S, &name, &e),
            },
        );
    }
    out
}

fn stability(opts: VerifyOptions) -> Vec<CheckOutcome> {
    use Suite::Stability as S;
    let all = all_params(opts.strategy);
    let mut out = Vec::new();

    let disagreements = opts.strategy.map(&all, |p| match stability_verdict(p) {
        Ok(v) => {
            let want = match p.cone_type {
                ConeType::TypeI => Verdict::Stable,
                ConeType::TypeII => Verdict::Unstable,
            };
            v.verdict != want
        }
        Err(_) => true,
    });
    let bad = disagreements.iter().filter(|b| **b).count();
    out.push(
        CheckOutcome::exact(S, "verdict_matches_classification", bad)
            .with_detail(format!("{} triples", all.len())),
    );

    let translations = opts.strategy.map(&all, exponent_translation);
    let bad = translations.iter().filter(|r| !r.consistent).count();
    out.push(CheckOutcome::exact(S, "exponent_translation", bad));

    let vieta = all
        .iter()
        .filter(|p| {
            let s = closed_form_jacobi(p);
            s.exponent_sum() != Some(int(1)) || s.exponent_product() != p.a_coeff
        })
        .count();
    out.push(CheckOutcome::exact(S, "exponent_sum_and_product", vieta));

    let p546 = representative(5, 4, 6);
    let rep = exponent_translation(&p546);
    let ok =
        rep.modulus_exponent.as_deref() == Some("3") && rep.frequency_sq.as_deref() == Some("1/6");
    out.push(CheckOutcome::exact(
        S,
        "translation_546_exact",
        usize::from(!ok),
    ));
    let ferr = rep
        .frequency
        .map_or(f64::NAN, |f| (f - 1.0 / 6f64.sqrt()).abs());
    out.push(CheckOutcome::within(
        S,
        "translation_546_frequency",
        ferr,
        1e-12,
    ));

    let p324 = representative(3, 2, 4);
    let ratio_err = conjugate_points(&p324, 11.0 * 11f64.sqrt() / 4.0, 4).map(|l| {
        let expect = (2.0 * std::f64::consts::PI / (4.0 * p324.a_f64() - 1.0).sqrt()).exp();
        l.ratios()
            .iter()
            .map(|r| ((r - expect) / expect).abs())
            .fold(0.0, f64::max)
    });
    out.push(match ratio_err {
        Ok(e) => CheckOutcome::within(S, "conjugate_ratio_324", e, 1e-10),
        Err(e) => CheckOutcome::failed(S, "conjugate_ratio_324", &e),
    });

    for (n, p, k) in [(3, 2, 2), (3, 2, 4)] {
        let prm = representative(n, p, k);
        let name = format!("numeric_jacobi_{n}{p}{k}");
        out.push(match jacobi_cross_check(&prm, opts.inject_fault) {
            Ok(e) => CheckOutcome::within(S, &name, e, 1e-6),
            Err(e) => CheckOutcome::failed(S, &name, &e),
        });
    }
    out
}

/// Largest relative deviation of the numeric field vanishing at `s0` from
/// the closed form on `[s0, 100 s0]`.
pub fn jacobi_cross_check(params: &LomseParams, fault: bool) -> Result<f64> {
    let s0 = QuotientMetric::new(params).loc_arclength(1.0)?;
    let sol = closed_form_jacobi(params);
    let exact = sol.particular(s0, 0.0, 1.0)?;
    let samples = if fault {
        crate::stability::numeric_jacobi_with_coefficient(
            params.a_f64() + 1e-3,
            (s0, 100.0 * s0),
            s0,
            (0.0, 1.0),
        )?
    } else {
        numeric_jacobi(params, (s0, 100.0 * s0), s0, (0.0, 1.0))?
    };
    Ok(compare_with_closed_form(&samples, &exact))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebra_suite_passes() {
        let s = run(Scope::One(Suite::Algebra), VerifyOptions::default());
        assert!(s.all_passed(), "{:#?}", s.checks);
    }

    #[test]
    fn geometry_suite_passes() {
        let s = run(Scope::One(Suite::Geometry), VerifyOptions::default());
        assert!(s.all_passed(), "{:#?}", s.checks);
    }

    #[test]
    fn dynamics_suite_passes() {
        let s = run(Scope::One(Suite::Dynamics), VerifyOptions::default());
        assert!(s.all_passed(), "{:#?}", s.checks);
    }

    #[test]
    fn stability_suite_passes() {
        let s = run(Scope::One(Suite::Stability), VerifyOptions::default());
        assert!(s.all_passed(), "{:#?}", s.checks);
    }

    #[test]
    fn fault_is_detected() {
        let opts = VerifyOptions {
            inject_fault: true,
            ..Default::default()
        };
        assert!(!run(Scope::One(Suite::Geometry), opts).all_passed());
        assert!(!run(Scope::One(Suite::Stability), opts).all_passed());
    }

    #[test]
    fn scope_parsing() {
        assert_eq!("all".parse::<Scope>().unwrap(), Scope::All);
        assert_eq!(
            "dynamics".parse::<Scope>().unwrap(),
            Scope::One(Suite::Dynamics)
        );
        assert!("everything".parse::<Scope>().is_err());
    }
}
