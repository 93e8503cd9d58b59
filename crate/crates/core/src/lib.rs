//! Numerical laboratory for Lawson-Osserman cones of `(n, p, k)`-type.
//!
//! * [`params`]: exact parameter algebra and the Type I / Type II split.
//! * [`geometry`]: the conformal quotient metric, curvature and curve lengths.
//! * [`dynamics`]: the phase-plane system in `t = log r`, the oscillating
//!   Dirichlet solution family, geodesic residual checks and the Type I
//!   foliation certificate.
//! * [`stability`]: Jacobi fields along the cone ray, conjugate points and
//!   the translation between both pictures.
//! * [`verify`]: named invariant suites used by the CLI and the tests.

pub mod dynamics;
pub mod error;
pub mod export;
pub mod geometry;
pub mod ode;
pub mod params;
pub mod quadrature;
pub mod stability;
pub mod surd;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{curve_length, Curve, PlaneCurve, QuotientMetric};
pub use params::{derive_params, ConeType, LomseParams, LomseTriple};
pub use sweep::Strategy;
