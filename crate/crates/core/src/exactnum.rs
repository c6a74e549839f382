//! Exact arithmetic: arbitrary-precision rationals and the field Q(√3).
//!
//! Every coefficient of every tabulated shadow function lives in Q(√3).
//! Radicals are rationalized on construction, so `1/√3` is stored as
//! `(0, 1/3)` and equality is structural.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always reduced with a positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("malformed number `{0}`")]
    Malformed(String),
}

/// Builds `num/den` from machine integers.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"` (optional leading sign).
pub fn parse_rational(s: &str) -> Result<Rational, NumError> {
    let s = s.trim();
    let bad = || NumError::Malformed(s.to_string());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    if num.is_empty() || den.is_empty() || den.starts_with(['+', '-']) {
        return Err(bad());
    }
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(NumError::DivisionByZero);
    }
    Ok(Rational::new(num, den))
}

/// Formats as `"p/q"`, or `"p"` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Nearest double to a rational, robust for numerators and denominators
/// far beyond the f64 range.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && n.abs() < 9.0e15 && d < 9.0e15 {
            return n / d;
        }
    }
    // Scale both sides down to 60 significant bits before dividing.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 60).max(0);
    let shift_d = (db - 60).max(0);
    let n = (r.numer() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    (n / d) * 2f64.powi((shift_n - shift_d) as i32)
}

/// An element `a + b·√3` of Q(√3).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ExtScalar {
    pub a: Rational,
    pub b: Rational,
}

impl ExtScalar {
    pub fn new(a: Rational, b: Rational) -> Self {
        ExtScalar { a, b }
    }

    pub fn zero() -> Self {
        ExtScalar::from_rational(Rational::zero())
    }

    pub fn one() -> Self {
        ExtScalar::from_rational(Rational::one())
    }

    /// √3 itself.
    pub fn sqrt3() -> Self {
        ExtScalar::new(Rational::zero(), Rational::one())
    }

    pub fn from_rational(a: Rational) -> Self {
        ExtScalar { a, b: Rational::zero() }
    }

    pub fn from_ints(a: (i64, i64), b: (i64, i64)) -> Self {
        ExtScalar::new(rat(a.0, a.1), rat(b.0, b.1))
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Field norm `a² − 3b²`.
    pub fn norm(&self) -> Rational {
        &self.a * &self.a - rat_int(3) * &self.b * &self.b
    }

    pub fn conjugate(&self) -> Self {
        ExtScalar::new(self.a.clone(), -self.b.clone())
    }

    pub fn scale(&self, r: &Rational) -> Self {
        ExtScalar::new(&self.a * r, &self.b * r)
    }

    pub fn inv(&self) -> Result<Self, NumError> {
        if self.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        // a² − 3b² ≠ 0 for rational (a, b) ≠ 0 since √3 is irrational.
        let n = self.norm();
        Ok(ExtScalar::new(&self.a / &n, -&self.b / &n))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, NumError> {
        Ok(self * &rhs.inv()?)
    }

    pub fn to_f64(&self) -> f64 {
        let a = rational_to_f64(&self.a);
        let b = rational_to_f64(&self.b);
        a + b * 3f64.sqrt()
    }

    /// Sign of the real number `a + b√3`, computed exactly.
    pub fn signum(&self) -> i32 {
        let sa = sign(&self.a);
        let sb = sign(&self.b);
        if sa == sb || sb == 0 {
            return sa;
        }
        if sa == 0 {
            return sb;
        }
        // Opposite signs: compare a² with 3b².
        let a2 = &self.a * &self.a;
        let b2 = rat_int(3) * &self.b * &self.b;
        if a2 > b2 {
            sa
        } else {
            sb
        }
    }
}

fn sign(r: &Rational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl From<Rational> for ExtScalar {
    fn from(a: Rational) -> Self {
        ExtScalar::from_rational(a)
    }
}

impl From<i64> for ExtScalar {
    fn from(n: i64) -> Self {
        ExtScalar::from_rational(rat_int(n))
    }
}

impl Add for &ExtScalar {
    type Output = ExtScalar;
    fn add(self, rhs: &ExtScalar) -> ExtScalar {
        ExtScalar::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl Add for ExtScalar {
    type Output = ExtScalar;
    fn add(self, rhs: ExtScalar) -> ExtScalar {
        &self + &rhs
    }
}

impl AddAssign<&ExtScalar> for ExtScalar {
    fn add_assign(&mut self, rhs: &ExtScalar) {
        self.a += &rhs.a;
        self.b += &rhs.b;
    }
}

impl Sub for &ExtScalar {
    type Output = ExtScalar;
    fn sub(self, rhs: &ExtScalar) -> ExtScalar {
        ExtScalar::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl Sub for ExtScalar {
    type Output = ExtScalar;
    fn sub(self, rhs: ExtScalar) -> ExtScalar {
        &self - &rhs
    }
}

impl Mul for &ExtScalar {
    type Output = ExtScalar;
    fn mul(self, rhs: &ExtScalar) -> ExtScalar {
        let a = &self.a * &rhs.a + rat_int(3) * &self.b * &rhs.b;
        let b = &self.a * &rhs.b + &self.b * &rhs.a;
        ExtScalar::new(a, b)
    }
}

impl Mul for ExtScalar {
    type Output = ExtScalar;
    fn mul(self, rhs: ExtScalar) -> ExtScalar {
        &self * &rhs
    }
}

impl Neg for ExtScalar {
    type Output = ExtScalar;
    fn neg(self) -> ExtScalar {
        ExtScalar::new(-self.a, -self.b)
    }
}

impl Neg for &ExtScalar {
    type Output = ExtScalar;
    fn neg(self) -> ExtScalar {
        ExtScalar::new(-&self.a, -&self.b)
    }
}

/// DSL form: `a`, `a+br3` or `a-br3`.
impl fmt::Display for ExtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_rational(&self.a))?;
        if !self.b.is_zero() {
            let sign = if self.b.is_negative() { '-' } else { '+' };
            write!(f, "{}{}r3", sign, format_rational(&self.b.abs()))?;
        }
        Ok(())
    }
}

impl FromStr for ExtScalar {
    type Err = NumError;

    /// Accepts the `Display` form, with optional whitespace.
    fn from_str(s: &str) -> Result<Self, NumError> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let Some(body) = compact.strip_suffix("r3") else {
            return Ok(ExtScalar::from_rational(parse_rational(&compact)?));
        };
        // Split at the sign that separates the rational part from the √3 part.
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last()
            .ok_or_else(|| NumError::Malformed(s.to_string()))?;
        let a = parse_rational(&body[..split])?;
        let b = parse_rational(&body[split..])?;
        Ok(ExtScalar::new(a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(a: (i64, i64), b: (i64, i64)) -> ExtScalar {
        ExtScalar::from_ints(a, b)
    }

    #[test]
    fn mul_examples() {
        assert_eq!(x((1, 1), (0, 1)) * x((0, 1), (1, 1)), x((0, 1), (1, 1)));
        assert_eq!(x((0, 1), (1, 1)) * x((0, 1), (1, 1)), x((3, 1), (0, 1)));
        // (1/2 + √3/6)(√3/3) = 1/6 + √3/6
        assert_eq!(x((1, 2), (1, 6)) * x((0, 1), (1, 3)), x((1, 6), (1, 6)));
    }

    #[test]
    fn inv_examples() {
        assert_eq!(x((2, 1), (0, 1)).inv().unwrap(), x((1, 2), (0, 1)));
        assert_eq!(x((0, 1), (1, 1)).inv().unwrap(), x((0, 1), (1, 3)));
        let v = x((1, 1), (1, 1));
        let vi = v.inv().unwrap();
        assert_eq!(vi, x((-1, 2), (1, 2)));
        assert_eq!(&v * &vi, ExtScalar::one());
        assert_eq!(ExtScalar::zero().inv(), Err(NumError::DivisionByZero));
    }

    #[test]
    fn to_float_examples() {
        assert_eq!(x((1, 1), (0, 1)).to_f64(), 1.0);
        assert_eq!(x((0, 1), (1, 1)).to_f64(), 1.7320508075688772);
        assert_eq!(x((1, 4), (0, 1)).to_f64(), 0.25);
    }

    #[test]
    fn huge_rationals_convert() {
        let r = parse_rational("-46189/268435456").unwrap();
        assert!((rational_to_f64(&r) + 46189.0 / 268435456.0).abs() < 1e-20);
        let big = Rational::new(BigInt::from(10).pow(400) * 3, BigInt::from(10).pow(400) * 4);
        assert_eq!(rational_to_f64(&big), 0.75);
    }

    #[test]
    fn textual_forms() {
        assert_eq!(format_rational(&rat(6, 4)), "3/2");
        assert_eq!(format_rational(&rat(-4, 2)), "-2");
        assert_eq!(x((0, 1), (1, 3)).to_string(), "0+1/3r3");
        assert_eq!(x((-1, 2), (-1, 3)).to_string(), "-1/2-1/3r3");
        for s in ["0+1/3r3", "-1/2-1/3r3", "7", "-46189/268435456", "5/4+2r3"] {
            assert_eq!(s.parse::<ExtScalar>().unwrap().to_string(), s);
        }
        assert_eq!(" 2 / 4 ".parse::<ExtScalar>().unwrap(), x((1, 2), (0, 1)));
        assert!("1/0".parse::<ExtScalar>().is_err());
        assert!("abc".parse::<ExtScalar>().is_err());
        assert!("r3".parse::<ExtScalar>().is_err());
    }

    #[test]
    fn exact_sign() {
        assert_eq!(x((2, 1), (-1, 1)).signum(), 1); // 2 - √3 > 0
        assert_eq!(x((1, 1), (-1, 1)).signum(), -1);
        assert_eq!(x((-7, 4), (1, 1)).signum(), -1); // √3 ≈ 1.732 < 7/4
        assert_eq!(ExtScalar::zero().signum(), 0);
    }
}
