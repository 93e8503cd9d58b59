//! Residuals of the graph form of the geodesic equation on sampled curves.
//!
//! Both residuals are homogeneous of degree -1 under dilation, so they are
//! reported multiplied by `r`. This keeps them comparable between the part
//! of a solution curve close to the origin and the part near `r = 1`.
//!
//! Derivatives are taken by local polynomial differentiation of
//! `phi = rho / r` against `x = ln r`, then converted with
//! `rho_r = phi + phi_x` and `rho_rr = (phi_x + phi_xx) / r`. Solutions
//! behave like powers of `r` near the origin, which are smooth in `x`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{PlaneCurve, QuotientMetric};
use crate::params::LomseParams;

/// Number of samples in each differentiation stencil.
pub const STENCIL: usize = 7;

/// Finite-difference weights on arbitrary nodes (Fornberg's recursion).
/// `c[d][j]` is the weight of node `j` for the `d`-th derivative at `z`.
pub(crate) fn fornberg(z: f64, x: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualProfile {
    /// Sample indices at which both residuals were evaluated.
    pub indices: Vec<usize>,
    pub r: Vec<f64>,
    /// `r` times the left side of the graph equation.
    pub ode1: Vec<f64>,
    /// `r (rho_rr - (1 + rho_r^2)(B - A rho_r))`.
    pub geodesic: Vec<f64>,
}

impl ResidualProfile {
    pub fn max_ode1(&self) -> f64 {
        self.ode1.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_geodesic(&self) -> f64 {
        self.geodesic.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Evaluates both residuals at every interior sample whose centred stencil
/// stays inside the open half plane.
pub fn residual_profile(params: &LomseParams, curve: &PlaneCurve) -> Result<ResidualProfile> {
    let samples = curve.samples();
    let m = samples.len();
    if m < STENCIL {
        return Err(Error::InvalidArgument(format!(
            "need at least {STENCIL} samples, got {m}"
        )));
    }
    let increasing = samples[1].r > samples[0].r;
    for (i, w) in samples.windows(2).enumerate() {
        let ok = if increasing {
            w[1].r > w[0].r
        } else {
            w[1].r < w[0].r
        };
        if !ok {
            return Err(Error::NotAGraph { index: i + 1 });
        }
    }

    let metric = QuotientMetric::new(params);
    let n = params.n() as f64;
    let p = params.p() as f64;
    let l2 = params.lambda_sq_f64();
    let half = STENCIL / 2;
    let mut out = ResidualProfile {
        indices: Vec::new(),
        r: Vec::new(),
        ode1: Vec::new(),
        geodesic: Vec::new(),
    };
    for i in half..m - half {
        let window = &samples[i - half..=i + half];
        if window.iter().any(|s| s.r <= 0.0) {
            continue;
        }
        let xs: Vec<f64> = window.iter().map(|s| s.r.ln()).collect();
        let r = samples[i].r;
        let rho = samples[i].rho;
        let phi = rho / r;
        let w = fornberg(r.ln(), &xs, 2);
        let phi_x: f64 = w[1]
            .iter()
            .zip(window)
            .map(|(c, s)| c * (s.rho / s.r))
            .sum();
        let phi_xx: f64 = w[2]
            .iter()
            .zip(window)
            .map(|(c, s)| c * (s.rho / s.r))
            .sum();
        let d1 = phi + phi_x;
        let d2 = (phi_x + phi_xx) / r;

        let ode1 = d2 / (1.0 + d1 * d1)
            + (n - p) * d1 / r
            + p * (d1 / r - l2 * rho / (r * r)) / (1.0 + l2 * rho * rho / (r * r));
        let (a, b) = metric.christoffel_ab(r, rho)?;
        let geo = d2 - (1.0 + d1 * d1) * (b - a * d1);

        out.indices.push(i);
        out.r.push(r);
        out.ode1.push(r * ode1);
        out.geodesic.push(r * geo);
    }
    if out.indices.is_empty() {
        return Err(Error::InvalidArgument(
            "no stencil inside the half plane".into(),
        ));
    }
    Ok(out)
}

/// Largest scaled residual of the graph equation over the samples.
pub fn ode1_residual(params: &LomseParams, curve: &PlaneCurve) -> Result<f64> {
    Ok(residual_profile(params, curve)?.max_ode1())
}

/// Largest scaled discrepancy between `rho_rr` and the geodesic form
/// `(1 + rho_r^2)(B - A rho_r)`.
pub fn geodesic_equivalence_check(params: &LomseParams, curve: &PlaneCurve) -> Result<f64> {
    Ok(residual_profile(params, curve)?.max_geodesic())
}
