//! Exact field arithmetic.
//!
//! Two fields are supported: the rationals, backed by arbitrary-precision
//! integers, and prime fields GF(p) for primes below 2^31. Every element is
//! kept in canonical form (reduced fraction with positive denominator, or a
//! residue in `[0, p)`), so equality is structural.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Largest modulus accepted for prime fields (exclusive).
pub const MAX_MODULUS: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field mismatch: {left} vs {right}")]
    FieldMismatch { left: FieldSpec, right: FieldSpec },
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse field element {text:?}: {reason}")]
    Parse { text: String, reason: &'static str },
    #[error("modulus {0} is not a prime below 2^31")]
    InvalidModulus(u64),
}

/// A prime modulus, checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Modulus(u32);

impl Modulus {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p >= MAX_MODULUS || !is_prime(p) {
            return Err(FieldError::InvalidModulus(p));
        }
        Ok(Modulus(p as u32))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Which field a weight lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    Rational,
    Prime(Modulus),
}

impl FieldSpec {
    pub fn prime(p: u64) -> Result<Self, FieldError> {
        Modulus::new(p).map(FieldSpec::Prime)
    }

    pub fn zero(self) -> FieldElement {
        FieldElement::from_i64(self, 0)
    }

    pub fn one(self) -> FieldElement {
        FieldElement::from_i64(self, 1)
    }

    pub fn parse(self, text: &str) -> Result<FieldElement, FieldError> {
        FieldElement::parse(text, self)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Rational => f.write_str("Q"),
            FieldSpec::Prime(p) => write!(f, "GF({})", p.0),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Rational(BigRational),
    Residue { value: u32, modulus: u32 },
}

/// An exact element of a [`FieldSpec`].
///
/// The arithmetic operators (`+`, `-`, `*`, unary `-`) are implemented on
/// references and panic when the operands come from different fields; the
/// `checked_*` methods report [`FieldError::FieldMismatch`] instead.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElement(Repr);

impl FieldElement {
    pub fn from_i64(spec: FieldSpec, n: i64) -> Self {
        match spec {
            FieldSpec::Rational => FieldElement(Repr::Rational(BigRational::from_integer(n.into()))),
            FieldSpec::Prime(m) => {
                let p = i64::from(m.0);
                FieldElement(Repr::Residue {
                    value: n.rem_euclid(p) as u32,
                    modulus: m.0,
                })
            }
        }
    }

    /// The rational `num/den`, reduced.
    pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self, FieldError> {
        let den = den.into();
        if den.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(FieldElement(Repr::Rational(BigRational::new(num.into(), den))))
    }

    pub fn spec(&self) -> FieldSpec {
        match &self.0 {
            Repr::Rational(_) => FieldSpec::Rational,
            Repr::Residue { modulus, .. } => FieldSpec::Prime(Modulus(*modulus)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Rational(r) => r.is_zero(),
            Repr::Residue { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.0 {
            Repr::Rational(r) => r.is_one(),
            Repr::Residue { value, .. } => *value == 1,
        }
    }

    /// The underlying rational, if this is an element of Q.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match &self.0 {
            Repr::Rational(r) => Some(r),
            Repr::Residue { .. } => None,
        }
    }

    /// The canonical residue, if this is an element of GF(p).
    pub fn as_residue(&self) -> Option<u32> {
        match &self.0 {
            Repr::Residue { value, .. } => Some(*value),
            Repr::Rational(_) => None,
        }
    }

    fn mismatch(&self, other: &Self) -> FieldError {
        FieldError::FieldMismatch {
            left: self.spec(),
            right: other.spec(),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, FieldError> {
        match (&self.0, &other.0) {
            (Repr::Rational(a), Repr::Rational(b)) => Ok(FieldElement(Repr::Rational(a + b))),
            (Repr::Residue { value: a, modulus: p }, Repr::Residue { value: b, modulus: q }) if p == q => {
                let s = (u64::from(*a) + u64::from(*b)) % u64::from(*p);
                Ok(FieldElement(Repr::Residue { value: s as u32, modulus: *p }))
            }
            _ => Err(self.mismatch(other)),
        }
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.checked_add(&other.negate())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, FieldError> {
        match (&self.0, &other.0) {
            (Repr::Rational(a), Repr::Rational(b)) => Ok(FieldElement(Repr::Rational(a * b))),
            (Repr::Residue { value: a, modulus: p }, Repr::Residue { value: b, modulus: q }) if p == q => {
                let s = (u64::from(*a) * u64::from(*b)) % u64::from(*p);
                Ok(FieldElement(Repr::Residue { value: s as u32, modulus: *p }))
            }
            _ => Err(self.mismatch(other)),
        }
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, FieldError> {
        self.checked_mul(&other.inverse()?)
    }

    pub fn negate(&self) -> Self {
        match &self.0 {
            Repr::Rational(a) => FieldElement(Repr::Rational(-a)),
            Repr::Residue { value, modulus } => FieldElement(Repr::Residue {
                value: if *value == 0 { 0 } else { modulus - value },
                modulus: *modulus,
            }),
        }
    }

    pub fn inverse(&self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(match &self.0 {
            Repr::Rational(a) => FieldElement(Repr::Rational(a.recip())),
            Repr::Residue { value, modulus } => FieldElement(Repr::Residue {
                value: mod_inverse(*value, *modulus),
                modulus: *modulus,
            }),
        })
    }

    /// Parses `[+-]digits[/digits]` (rationals) or `[+-]digits` (prime fields).
    pub fn parse(text: &str, spec: FieldSpec) -> Result<Self, FieldError> {
        let err = |reason| FieldError::Parse {
            text: text.to_string(),
            reason,
        };
        let (num, den) = match text.split_once('/') {
            Some((n, d)) => (n, Some(d)),
            None => (text, None),
        };
        let num = parse_integer(num).ok_or_else(|| err("malformed numerator"))?;
        match spec {
            FieldSpec::Rational => match den {
                None => Ok(FieldElement(Repr::Rational(BigRational::from_integer(num)))),
                Some(d) => {
                    let d = parse_unsigned(d).ok_or_else(|| err("malformed denominator"))?;
                    FieldElement::ratio(num, d)
                }
            },
            FieldSpec::Prime(m) => {
                if den.is_some() {
                    return Err(err("fractions are not accepted in a prime field"));
                }
                let p = BigInt::from(m.0);
                let value = ((num % &p) + &p) % &p;
                Ok(FieldElement(Repr::Residue {
                    value: value.to_u32().expect("residue below modulus"),
                    modulus: m.0,
                }))
            }
        }
    }
}

fn parse_unsigned(text: &str) -> Option<BigInt> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::from_str(text).ok()
}

fn parse_integer(text: &str) -> Option<BigInt> {
    let (negative, digits) = match text.as_bytes().first() {
        Some(b'-') => (true, &text[1..]),
        Some(b'+') => (false, &text[1..]),
        _ => (false, text),
    };
    let value = parse_unsigned(digits)?;
    Some(if negative { -value } else { value })
}

fn mod_inverse(a: u32, p: u32) -> u32 {
    // extended Euclid on i64
    let (mut old_r, mut r) = (i64::from(a), i64::from(p));
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1);
    old_s.rem_euclid(i64::from(p)) as u32
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Rational(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Repr::Residue { value, .. } => write!(f, "{value}"),
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Rational(_) => write!(f, "{self}"),
            Repr::Residue { modulus, .. } => write!(f, "{self} (mod {modulus})"),
        }
    }
}

impl<'a> Add<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &'a FieldElement) -> FieldElement {
        self.checked_add(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<'a> Sub<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &'a FieldElement) -> FieldElement {
        self.checked_sub(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<'a> Mul<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &'a FieldElement) -> FieldElement {
        self.checked_mul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.negate()
    }
}
