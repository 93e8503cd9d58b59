//! Exact quadratic surds `q + c * sqrt(d)` over the rationals.
//!
//! Square roots of rationals are never materialized in exact code paths:
//! the radicand is kept as a rational and may be negative, in which case the
//! surd is the complex number `q + i * c * sqrt(-d)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

pub fn rat(num: i128, den: i128) -> Rational {
    Rational::new(num, den)
}

pub fn int(v: i128) -> Rational {
    Rational::from_integer(v)
}

pub fn to_f64(q: &Rational) -> f64 {
    // i128 -> f64 conversion of numerator and denominator separately keeps
    // 53 bits of each; the quotient is correctly rounded to within 1 ulp.
    q.to_f64()
        .unwrap_or_else(|| *q.numer() as f64 / *q.denom() as f64)
}

/// Renders a rational as `num/den` (or just `num` for integers).
pub fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn isqrt(v: i128) -> Option<i128> {
    if v < 0 {
        return None;
    }
    let mut r = (v as f64).sqrt() as i128;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    (r * r == v).then_some(r)
}

/// Exact square root of a non-negative rational, when it is rational.
pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    Some(Rational::new(isqrt(*q.numer())?, isqrt(*q.denom())?))
}

#[derive(Debug, Clone, Copy)]
pub struct QuadSurd {
    pub rational: Rational,
    pub coeff: Rational,
    pub radicand: Rational,
}

impl QuadSurd {
    pub fn new(rational: Rational, coeff: Rational, radicand: Rational) -> Self {
        Self {
            rational,
            coeff,
            radicand,
        }
    }

    pub fn rational_only(q: Rational) -> Self {
        Self::new(q, Rational::zero(), Rational::zero())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.rational, -self.coeff, self.radicand)
    }

    pub fn is_real(&self) -> bool {
        self.coeff.is_zero() || !self.radicand.is_negative()
    }

    /// Multiplies the whole surd by a rational.
    pub fn scale(&self, s: Rational) -> Self {
        Self::new(self.rational * s, self.coeff * s, self.radicand)
    }

    pub fn shift(&self, s: Rational) -> Self {
        Self::new(self.rational + s, self.coeff, self.radicand)
    }

    /// Rewrites `c * sqrt(d)` as `sign(c) * sqrt(c^2 d)`; two surds are equal
    /// iff their canonical forms are equal.
    fn canonical(&self) -> (Rational, Rational, i8) {
        if self.coeff.is_zero() || self.radicand.is_zero() {
            return (self.rational, Rational::zero(), 0);
        }
        let sign = if self.coeff.is_positive() { 1 } else { -1 };
        (self.rational, self.coeff * self.coeff * self.radicand, sign)
    }

    /// The value as a rational, when the radical part is a perfect square.
    pub fn as_rational(&self) -> Option<Rational> {
        let (q, c2, sign) = self.canonical();
        if sign == 0 {
            return Some(q);
        }
        let root = rational_sqrt(&c2)?;
        Some(if sign > 0 { q + root } else { q - root })
    }

    /// Exact sum with another surd sharing the same radical part.
    /// Returns `None` when the radicals differ.
    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        let (_, a2, sa) = self.canonical();
        let (_, b2, sb) = other.canonical();
        if sa == 0 {
            return Some(Self::new(
                self.rational + other.rational,
                other.coeff,
                other.radicand,
            ));
        }
        if sb == 0 {
            return Some(Self::new(
                self.rational + other.rational,
                self.coeff,
                self.radicand,
            ));
        }
        if a2 == b2 {
            // same magnitude of radical part
            let coeff = if sa == sb {
                self.coeff.abs() * int(2)
            } else {
                Rational::zero()
            };
            let coeff = if sa < 0 { -coeff } else { coeff };
            return Some(Self::new(
                self.rational + other.rational,
                coeff,
                self.radicand,
            ));
        }
        None
    }

    /// Exact product of the two conjugate roots `(q + c√d)(q - c√d)`.
    pub fn norm(&self) -> Rational {
        self.rational * self.rational - self.coeff * self.coeff * self.radicand
    }

    /// Exact trace `(q + c√d) + (q - c√d)`.
    pub fn trace(&self) -> Rational {
        self.rational + self.rational
    }

    pub fn to_complex(&self) -> Complex64 {
        let q = to_f64(&self.rational);
        let c = to_f64(&self.coeff);
        let d = to_f64(&self.radicand);
        if d >= 0.0 {
            Complex64::new(q + c * d.sqrt(), 0.0)
        } else {
            Complex64::new(q, c * (-d).sqrt())
        }
    }

    /// Real part as an exact rational (exact only when the surd is complex
    /// or rational).
    pub fn real_part_exact(&self) -> Option<Rational> {
        if self.coeff.is_zero() || self.radicand.is_zero() || self.radicand.is_negative() {
            Some(self.rational)
        } else {
            None
        }
    }

    /// Square of the imaginary part, exact; zero for real surds.
    pub fn imag_sq_exact(&self) -> Rational {
        if self.radicand.is_negative() {
            -(self.coeff * self.coeff * self.radicand)
        } else {
            Rational::zero()
        }
    }
}

impl PartialEq for QuadSurd {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for QuadSurd {}

impl Neg for QuadSurd {
    type Output = QuadSurd;
    fn neg(self) -> QuadSurd {
        QuadSurd::new(-self.rational, -self.coeff, self.radicand)
    }
}

impl Add<Rational> for QuadSurd {
    type Output = QuadSurd;
    fn add(self, rhs: Rational) -> QuadSurd {
        self.shift(rhs)
    }
}

impl Sub<QuadSurd> for QuadSurd {
    type Output = Option<QuadSurd>;
    fn sub(self, rhs: QuadSurd) -> Option<QuadSurd> {
        self.checked_add(&-rhs)
    }
}

impl Mul<Rational> for QuadSurd {
    type Output = QuadSurd;
    fn mul(self, rhs: Rational) -> QuadSurd {
        self.scale(rhs)
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(v) = self.as_rational() {
            return write!(f, "{}", fmt_rational(&v));
        }
        let (q, c2, sign) = self.canonical();
        let op = if sign > 0 { "+" } else { "-" };
        if c2.is_negative() {
            write!(
                f,
                "{} {} i*sqrt({})",
                fmt_rational(&q),
                op,
                fmt_rational(&-c2)
            )
        } else {
            write!(f, "{} {} sqrt({})", fmt_rational(&q), op, fmt_rational(&c2))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_equality_absorbs_coefficients() {
        // 1/2 * sqrt(4) == 1 * sqrt(1)
        let a = QuadSurd::new(int(0), rat(1, 2), int(4));
        let b = QuadSurd::new(int(0), int(1), int(1));
        assert_eq!(a, b);
        assert_ne!(a, a.conj());
    }

    #[test]
    fn perfect_square_radicals_collapse() {
        let s = QuadSurd::new(int(-2), rat(1, 2), int(1));
        assert_eq!(s.as_rational(), Some(rat(-3, 2)));
        assert_eq!(s.conj().to_string(), "-5/2");
        assert_eq!(QuadSurd::new(int(0), int(1), int(2)).as_rational(), None);
        assert_eq!(rational_sqrt(&rat(9, 49)), Some(rat(3, 7)));
        assert_eq!(rational_sqrt(&rat(-9, 49)), None);
    }

    #[test]
    fn norm_and_trace_are_vieta() {
        // roots of x^2 + 4x + 15/4: -2 ± (1/2)sqrt(1)
        let s = QuadSurd::new(int(-2), rat(1, 2), int(1));
        assert_eq!(s.trace(), int(-4));
        assert_eq!(s.norm(), rat(15, 4));
    }

    #[test]
    fn complex_materialization() {
        let s = QuadSurd::new(int(-2), rat(1, 2), int(-5));
        let z = s.to_complex();
        assert_eq!(z.re, -2.0);
        assert!((z.im - 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(s.imag_sq_exact(), rat(5, 4));
        assert!(!s.is_real());
    }

    #[test]
    fn display_forms() {
        assert_eq!(QuadSurd::rational_only(rat(3, 2)).to_string(), "3/2");
        assert_eq!(
            QuadSurd::new(int(-3), int(-1), rat(-1, 6)).to_string(),
            "-3 - i*sqrt(1/6)"
        );
    }
}
