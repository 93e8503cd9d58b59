//! Parameter algebra for `(n, p, k)`-type Lawson-Osserman maps.
//!
//! Everything here is exact rational arithmetic. The Type I / Type II
//! boundary `a = 1/4` is decided without rounding; floating values are only
//! produced on demand through the `*_f64` accessors.

use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surd::{int, rat, to_f64, QuadSurd, Rational};
use crate::sweep::Strategy;

/// Largest `n` or `k` accepted; keeps every intermediate well inside `i128`.
pub const MAX_DIMENSION: u32 = 10_000;

/// Admissible `(n, p)` pairs come from the three Hopf fibrations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HopfFamily {
    /// `S^{2q+1} -> CP^q`, `(n, p) = (2q+1, 2q)`.
    Complex,
    /// `S^{4q+3} -> HP^q`, `(n, p) = (4q+3, 4q)`.
    Quaternionic,
    /// `S^15 -> S^8`.
    Octonionic,
}

impl HopfFamily {
    pub fn of(n: u32, p: u32) -> Option<Self> {
        if n >= 3 && n % 2 == 1 && p + 1 == n {
            Some(HopfFamily::Complex)
        } else if n >= 7 && n % 4 == 3 && p + 3 == n {
            Some(HopfFamily::Quaternionic)
        } else if n == 15 && p == 8 {
            Some(HopfFamily::Octonionic)
        } else {
            None
        }
    }

    /// Admissible projective dimensions for a source sphere `S^n`, ascending.
    pub fn projective_dims(n: u32) -> Vec<u32> {
        let mut dims: Vec<u32> = [n.saturating_sub(1), n.saturating_sub(3), 8]
            .into_iter()
            .filter(|&p| p > 0 && HopfFamily::of(n, p).is_some())
            .collect();
        dims.sort_unstable();
        dims.dedup();
        dims
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LomseTriple {
    pub n: u32,
    pub p: u32,
    pub k: u32,
}

impl LomseTriple {
    pub fn new(n: u32, p: u32, k: u32) -> Result<Self> {
        let bad = |reason| Error::InadmissibleTriple { n, p, k, reason };
        if n.is_multiple_of(2) {
            return Err(bad("n must be odd"));
        }
        if k == 0 || k % 2 == 1 {
            return Err(bad("k must be a positive even integer"));
        }
        if n > MAX_DIMENSION || k > MAX_DIMENSION {
            return Err(bad("dimension exceeds supported range"));
        }
        if p >= n {
            return Err(bad("p must be smaller than n"));
        }
        if HopfFamily::of(n, p).is_none() {
            return Err(bad("(n, p) is not a Hopf fibration"));
        }
        Ok(Self { n, p, k })
    }

    pub fn family(&self) -> HopfFamily {
        HopfFamily::of(self.n, self.p).expect("validated at construction")
    }

    /// The integer polynomial whose sign separates the two types:
    /// `(n^2-6n+1)k^2 + k(n-1)(n^2-6n+1) + 8n^2`.
    pub fn type_polynomial(&self) -> i128 {
        let n = self.n as i128;
        let k = self.k as i128;
        let c = n * n - 6 * n + 1;
        c * k * k + k * (n - 1) * c + 8 * n * n
    }
}

impl fmt::Display for LomseTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.n, self.p, self.k)
    }
}

impl std::str::FromStr for LomseTriple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s
            .trim_matches(|c| c == '(' || c == ')')
            .split(',')
            .map(str::trim)
            .collect();
        let parse = |x: &str| {
            x.parse::<u32>()
                .map_err(|_| Error::InvalidArgument(format!("bad triple component '{x}'")))
        };
        match parts.as_slice() {
            [n, p, k] => LomseTriple::new(parse(n)?, parse(p)?, parse(k)?),
            _ => Err(Error::InvalidArgument(format!(
                "expected n,p,k but got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConeType {
    /// Stable: real, distinct linearization eigenvalues.
    TypeI,
    /// Unstable: spiral fixed point.
    TypeII,
}

impl fmt::Display for ConeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeType::TypeI => write!(f, "I"),
            ConeType::TypeII => write!(f, "II"),
        }
    }
}

/// Derived constants of one admissible triple.
#[derive(Debug, Clone, PartialEq)]
pub struct LomseParams {
    pub triple: LomseTriple,
    /// `lambda^2 = k(k+n-1)/p`.
    pub lambda_sq: Rational,
    /// `tan^2(theta) = (p lambda^2 - n) / ((n-p) lambda^2)`.
    pub tan_theta_sq: Rational,
    /// Coefficient of the curvature law `K(s) = a / s^2` along the cone ray.
    pub a_coeff: Rational,
    /// `1 - 4a`.
    pub jacobi_disc: Rational,
    /// `(n+1)^2 + 8n(n/(k(n+k-1)) - 1)`.
    pub dyn_disc: Rational,
    pub cone_type: ConeType,
}

pub fn derive_params(triple: LomseTriple) -> Result<LomseParams> {
    // re-validate: the fields are public
    let triple = LomseTriple::new(triple.n, triple.p, triple.k)?;
    let n = triple.n as i128;
    let p = triple.p as i128;
    let k = triple.k as i128;

    let lambda_sq = rat(k * (k + n - 1), p);
    let p_lambda_sq = lambda_sq * int(p);
    if p_lambda_sq <= int(n) {
        return Err(Error::DegenerateAngle);
    }
    let tan_theta_sq = (p_lambda_sq - int(n)) / (int(n - p) * lambda_sq);

    let a_coeff = rat(
        2 * (k * k + k * n - k - n) * n,
        (k + n - 1) * k * (n + 1) * (n + 1),
    );
    let jacobi_disc = Rational::one() - int(4) * a_coeff;
    let dyn_disc =
        int((n + 1) * (n + 1)) + int(8 * n) * (rat(n, k * (n + k - 1)) - Rational::one());

    let cone_type = classify_checked(&triple, &jacobi_disc)?;

    Ok(LomseParams {
        triple,
        lambda_sq,
        tan_theta_sq,
        a_coeff,
        jacobi_disc,
        dyn_disc,
        cone_type,
    })
}

fn classify_checked(triple: &LomseTriple, jacobi_disc: &Rational) -> Result<ConeType> {
    if jacobi_disc.is_zero() {
        return Err(Error::InternalInconsistency(format!(
            "a = 1/4 at {triple}: the type boundary is attained"
        )));
    }
    let poly = triple.type_polynomial();
    let by_poly = poly > 0;
    let by_disc = jacobi_disc.is_positive();
    if by_poly != by_disc {
        return Err(Error::InternalInconsistency(format!(
            "type polynomial and 1-4a disagree at {triple}"
        )));
    }
    Ok(if by_poly {
        ConeType::TypeI
    } else {
        ConeType::TypeII
    })
}

pub fn classify(triple: LomseTriple) -> Result<ConeType> {
    Ok(derive_params(triple)?.cone_type)
}

pub fn jacobi_coefficient(params: &LomseParams) -> Rational {
    params.a_coeff
}

/// All admissible triples with `n <= n_max`, `k <= k_max`, in lexicographic
/// `(n, p, k)` order.
pub fn enumerate_admissible(n_max: u32, k_max: u32) -> Vec<(LomseTriple, ConeType)> {
    enumerate_admissible_with(n_max, k_max, Strategy::default())
}

pub fn enumerate_admissible_with(
    n_max: u32,
    k_max: u32,
    strategy: Strategy,
) -> Vec<(LomseTriple, ConeType)> {
    let triples = admissible_triples(n_max, k_max);
    strategy.map(&triples, |t| {
        let ty = classify(*t).expect("enumerated triples are admissible");
        (*t, ty)
    })
}

pub fn admissible_triples(n_max: u32, k_max: u32) -> Vec<LomseTriple> {
    let n_max = n_max.min(MAX_DIMENSION);
    let k_max = k_max.min(MAX_DIMENSION);
    let mut out = Vec::new();
    for n in (3..=n_max).step_by(2) {
        for p in HopfFamily::projective_dims(n) {
            for k in (2..=k_max).step_by(2) {
                out.push(LomseTriple { n, p, k });
            }
        }
    }
    out
}

/// Linearization of the phase-plane system at the cone fixed point.
pub fn linearization_matrix(params: &LomseParams) -> [[Rational; 2]; 2] {
    let n = params.triple.n as i128;
    let k = params.triple.k as i128;
    let lower_left = int(2 * n) * (rat(n, k * (k + n - 1)) - Rational::one());
    [
        [Rational::zero(), Rational::one()],
        [lower_left, int(-(n + 1))],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    /// `-(n+1)/2 ± (1/2) sqrt(dyn_disc)`, larger real part first.
    pub exact: [QuadSurd; 2],
    pub values: [Complex64; 2],
}

impl EigenPair {
    pub fn is_spiral(&self) -> bool {
        !self.exact[0].is_real()
    }
}

pub fn fixed_point_eigenvalues(params: &LomseParams) -> EigenPair {
    assert!(
        !params.dyn_disc.is_zero(),
        "repeated eigenvalue at {}",
        params.triple
    );
    let n = params.triple.n as i128;
    let first = QuadSurd::new(rat(-(n + 1), 2), rat(1, 2), params.dyn_disc);
    let second = first.conj();
    EigenPair {
        exact: [first, second],
        values: [first.to_complex(), second.to_complex()],
    }
}

impl LomseParams {
    pub fn n(&self) -> u32 {
        self.triple.n
    }

    pub fn p(&self) -> u32 {
        self.triple.p
    }

    pub fn k(&self) -> u32 {
        self.triple.k
    }

    pub fn lambda_sq_f64(&self) -> f64 {
        to_f64(&self.lambda_sq)
    }

    pub fn tan_theta(&self) -> f64 {
        to_f64(&self.tan_theta_sq).sqrt()
    }

    pub fn a_f64(&self) -> f64 {
        to_f64(&self.a_coeff)
    }

    /// `cos^2(theta)` and `sin^2(theta)`, exact.
    pub fn cos_sin_sq(&self) -> (Rational, Rational) {
        let sec_sq = Rational::one() + self.tan_theta_sq;
        (sec_sq.recip(), self.tan_theta_sq / sec_sq)
    }

    /// `(n-p)/cos^2 + p/(cos^2 + lambda^2 sin^2) - n`; zero for a genuine
    /// Lawson-Osserman angle.
    pub fn singular_value_residual(&self) -> Rational {
        let (c2, s2) = self.cos_sin_sq();
        let n = int(self.triple.n as i128);
        let p = int(self.triple.p as i128);
        (n - p) / c2 + p / (c2 + self.lambda_sq * s2) - n
    }

    /// `(n-p) - p(lambda^2-1)/(1+lambda^2 tan^2)`; zero by construction.
    pub fn angle_identity_residual(&self) -> Rational {
        let n = int(self.triple.n as i128);
        let p = int(self.triple.p as i128);
        (n - p)
            - p * (self.lambda_sq - Rational::one())
                / (Rational::one() + self.lambda_sq * self.tan_theta_sq)
    }

    /// Exact identity `dyn_disc == (n+1)^2 (1 - 4a)`.
    pub fn discriminant_bridge_holds(&self) -> bool {
        let n1 = int(self.triple.n as i128 + 1);
        self.dyn_disc == n1 * n1 * self.jacobi_disc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, p: u32, k: u32) -> LomseParams {
        derive_params(LomseTriple::new(n, p, k).unwrap()).unwrap()
    }

    #[test]
    fn derived_constants_for_reference_triples() {
        let p = params(3, 2, 2);
        assert_eq!(p.lambda_sq, int(4));
        assert_eq!(p.tan_theta_sq, rat(5, 4));
        assert_eq!(p.a_coeff, rat(15, 64));
        assert_eq!(p.jacobi_disc, rat(1, 16));
        assert_eq!(p.dyn_disc, int(1));

        let p = params(5, 4, 6);
        assert_eq!(p.lambda_sq, int(15));
        assert_eq!(p.tan_theta_sq, rat(11, 3));
        assert_eq!(p.a_coeff, rat(55, 216));

        assert_eq!(params(3, 2, 4).a_coeff, rat(21, 64));
    }

    #[test]
    fn singular_value_identity_at_322() {
        let p = params(3, 2, 2);
        let (c2, s2) = p.cos_sin_sq();
        assert_eq!(c2, rat(4, 9));
        assert_eq!(s2, rat(5, 9));
        let first = int(1) / c2;
        let second = int(2) / (c2 + p.lambda_sq * s2);
        assert_eq!(first, rat(9, 4));
        assert_eq!(second, rat(3, 4));
        assert!(p.singular_value_residual().is_zero());
    }

    #[test]
    fn rejects_inadmissible() {
        assert!(LomseTriple::new(4, 3, 2).is_err()); // n even
        assert!(LomseTriple::new(3, 2, 3).is_err()); // k odd
        assert!(LomseTriple::new(3, 2, 0).is_err());
        assert!(LomseTriple::new(5, 2, 2).is_err()); // not Hopf
        assert!(LomseTriple::new(3, 3, 2).is_err()); // p = n
        assert!(LomseTriple::new(3, 0, 2).is_err()); // (4q+3, 4q) needs q >= 1
        assert!(LomseTriple::new(7, 4, 2).is_ok());
        assert!(LomseTriple::new(15, 8, 2).is_ok());
        assert!(LomseTriple::new(15, 12, 2).is_ok());
        assert!(LomseTriple::new(13, 8, 2).is_err());
    }

    #[test]
    fn classification_examples() {
        let t = |n, p, k| LomseTriple::new(n, p, k).unwrap();
        assert_eq!(classify(t(3, 2, 2)).unwrap(), ConeType::TypeI);
        assert_eq!(classify(t(3, 2, 4)).unwrap(), ConeType::TypeII);
        assert_eq!(classify(t(7, 4, 2)).unwrap(), ConeType::TypeI);
        assert_eq!(classify(t(5, 4, 4)).unwrap(), ConeType::TypeI);
        assert_eq!(classify(t(5, 4, 6)).unwrap(), ConeType::TypeII);
    }

    #[test]
    fn enumeration_small_ranges() {
        use ConeType::*;
        let got = enumerate_admissible(5, 4);
        let want: Vec<(LomseTriple, ConeType)> = vec![
            (LomseTriple { n: 3, p: 2, k: 2 }, TypeI),
            (LomseTriple { n: 3, p: 2, k: 4 }, TypeII),
            (LomseTriple { n: 5, p: 4, k: 2 }, TypeI),
            (LomseTriple { n: 5, p: 4, k: 4 }, TypeI),
        ];
        assert_eq!(got, want);

        let got = enumerate_admissible(5, 6);
        assert_eq!(got.len(), 6);
        assert!(got.contains(&(LomseTriple { n: 5, p: 4, k: 6 }, TypeII)));
        assert!(got.contains(&(LomseTriple { n: 3, p: 2, k: 6 }, TypeII)));

        assert_eq!(
            enumerate_admissible(3, 2),
            vec![(LomseTriple { n: 3, p: 2, k: 2 }, TypeI)]
        );
        assert!(enumerate_admissible(2, 2).is_empty());
    }

    #[test]
    fn lexicographic_order_with_two_families() {
        let ts = admissible_triples(15, 2);
        let mut sorted = ts.clone();
        sorted.sort();
        assert_eq!(ts, sorted);
        let pairs: Vec<(u32, u32)> = ts.iter().map(|t| (t.n, t.p)).collect();
        assert_eq!(
            pairs,
            vec![
                (3, 2),
                (5, 4),
                (7, 4),
                (7, 6),
                (9, 8),
                (11, 8),
                (11, 10),
                (13, 12),
                (15, 8),
                (15, 12),
                (15, 14)
            ]
        );
    }

    #[test]
    fn linearization_matrices() {
        let b = linearization_matrix(&params(5, 4, 6));
        assert_eq!(b, [[int(0), int(1)], [rat(-55, 6), int(-6)]]);
        let b = linearization_matrix(&params(3, 2, 4));
        assert_eq!(b[1], [rat(-21, 4), int(-4)]);
        let b = linearization_matrix(&params(3, 2, 2));
        assert_eq!(b[1], [rat(-15, 4), int(-4)]);
    }

    #[test]
    fn eigenvalues_reference() {
        let e = fixed_point_eigenvalues(&params(5, 4, 6));
        assert!(e.is_spiral());
        assert!((e.values[0].re + 3.0).abs() < 1e-15);
        assert!((e.values[0].im - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(e.exact[0].imag_sq_exact(), rat(1, 6));

        let e = fixed_point_eigenvalues(&params(3, 2, 4));
        assert_eq!(e.exact[0].real_part_exact(), Some(int(-2)));
        assert_eq!(e.exact[0].imag_sq_exact(), rat(5, 4));

        let e = fixed_point_eigenvalues(&params(3, 2, 2));
        assert!(!e.is_spiral());
        assert_eq!(e.values[0].re, -1.5);
        assert_eq!(e.values[1].re, -2.5);
    }

    #[test]
    fn type_polynomial_matches_numerator_of_one_minus_4a() {
        for t in admissible_triples(25, 40) {
            let p = derive_params(t).unwrap();
            let n = t.n as i128;
            let k = t.k as i128;
            let den = int((k + n - 1) * k * (n + 1) * (n + 1));
            assert_eq!(p.jacobi_disc * den, int(t.type_polynomial()), "{t}");
        }
    }

    #[test]
    fn parse_triple() {
        let t: LomseTriple = "5,4,6".parse().unwrap();
        assert_eq!(t, LomseTriple { n: 5, p: 4, k: 6 });
        let t: LomseTriple = "(3, 2, 2)".parse().unwrap();
        assert_eq!(t.k, 2);
        assert!("3,2".parse::<LomseTriple>().is_err());
        assert!("3,2,x".parse::<LomseTriple>().is_err());
    }
}
