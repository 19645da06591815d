//! Scalars used throughout the crate.
//!
//! Measures are exact rationals whenever their inputs are, and operator
//! coefficients are square roots of measure ratios. [`Surd`] keeps those exact:
//! it is a finite sum `Σ c_j √d_j` with rational `c_j` and pairwise
//! non-equivalent square classes `d_j`. Square roots of rationals lying in
//! distinct square classes are linearly independent over `Q`, so a surd is
//! zero exactly when its canonical term list is empty. Anything that leaves
//! this field (a square root of a non-rational surd, division by a sum)
//! degrades to `f64`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Absolute tolerance for floating point entry comparisons.
pub const FLOAT_TOL: f64 = 1e-10;

const SMALL_PRIMES: [u32; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Scale both sides down until they fit.
            let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000);
            let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

fn is_perfect_square(n: &BigUint) -> Option<BigUint> {
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

/// Exact element of the field generated by square roots of rationals.
#[derive(Clone, Debug, Default)]
pub struct Surd {
    // (radicand, coefficient), radicands positive integers, sorted, pairwise in
    // distinct square classes, coefficients nonzero.
    terms: Vec<(BigUint, Rational)>,
}

impl Surd {
    pub fn zero() -> Self {
        Surd { terms: Vec::new() }
    }

    pub fn from_rational(q: Rational) -> Self {
        if q.is_zero() {
            return Surd::zero();
        }
        Surd {
            terms: vec![(BigUint::one(), q)],
        }
    }

    /// `√q` for a nonnegative rational `q`.
    pub fn sqrt_of(q: &Rational) -> Option<Self> {
        if q.is_negative() {
            return None;
        }
        if q.is_zero() {
            return Some(Surd::zero());
        }
        // √(n/d) = √(n·d) / d
        let n = q.numer().magnitude();
        let d = q.denom().magnitude();
        let (radicand, factor) = reduce_radicand(n * d);
        let coef = Rational::new(BigInt::from(factor), BigInt::from(d.clone()));
        Some(Surd {
            terms: vec![(radicand, coef)],
        })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value as a rational, when it has no irrational part.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(d, c)] if d.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(d, c)| {
                let d = d.to_f64().unwrap_or(f64::INFINITY);
                rational_to_f64(c) * d.sqrt()
            })
            .sum()
    }

    fn single(&self) -> Option<(&BigUint, &Rational)> {
        match self.terms.as_slice() {
            [(d, c)] => Some((d, c)),
            _ => None,
        }
    }

    fn from_terms(mut raw: Vec<(BigUint, Rational)>) -> Self {
        raw.retain(|(_, c)| !c.is_zero());
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(BigUint, Rational)> = Vec::with_capacity(raw.len());
        for (d, c) in raw {
            if let Some(last) = out.last_mut() {
                if last.0 == d {
                    last.1 += c;
                    continue;
                }
            }
            out.push((d, c));
        }
        out.retain(|(_, c)| !c.is_zero());
        // Radicands are only reduced by small primes, so two distinct radicands
        // may still share a square class.
        let mut i = 0;
        while i < out.len() {
            let mut j = i + 1;
            while j < out.len() {
                if let Some(root) = is_perfect_square(&(&out[i].0 * &out[j].0)) {
                    // √d_j = √(d_i d_j) / √d_i = root/d_i · √d_i
                    let scale = Rational::new(BigInt::from(root), BigInt::from(out[i].0.clone()));
                    let (_, cj) = out.remove(j);
                    out[i].1 += cj * scale;
                } else {
                    j += 1;
                }
            }
            if out[i].1.is_zero() {
                out.remove(i);
            } else {
                i += 1;
            }
        }
        Surd { terms: out }
    }

    fn mul_ref(&self, other: &Surd) -> Surd {
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (d1, c1) in &self.terms {
            for (d2, c2) in &other.terms {
                if d1.is_one() {
                    raw.push((d2.clone(), c1 * c2));
                } else if d2.is_one() {
                    raw.push((d1.clone(), c1 * c2));
                } else if d1 == d2 {
                    raw.push((
                        BigUint::one(),
                        c1 * c2 * Rational::from(BigInt::from(d1.clone())),
                    ));
                } else {
                    let (d, f) = reduce_radicand(d1 * d2);
                    raw.push((d, c1 * c2 * Rational::from(BigInt::from(f))));
                }
            }
        }
        Surd::from_terms(raw)
    }

    fn add_ref(&self, other: &Surd) -> Surd {
        let mut raw = self.terms.clone();
        raw.extend(other.terms.iter().cloned());
        Surd::from_terms(raw)
    }

    fn neg_ref(&self) -> Surd {
        Surd {
            terms: self.terms.iter().map(|(d, c)| (d.clone(), -c)).collect(),
        }
    }

    /// Inverse of a single-term surd.
    fn recip(&self) -> Option<Surd> {
        let (d, c) = self.single()?;
        // 1/(c√d) = √d / (c d)
        let denom = c * Rational::from(BigInt::from(d.clone()));
        Some(Surd {
            terms: vec![(d.clone(), denom.recip())],
        })
    }
}

impl PartialEq for Surd {
    fn eq(&self, other: &Self) -> bool {
        self.add_ref(&other.neg_ref()).is_zero()
    }
}

impl Eq for Surd {}

fn reduce_radicand(mut n: BigUint) -> (BigUint, BigUint) {
    let mut factor = BigUint::one();
    if let Some(r) = is_perfect_square(&n) {
        return (BigUint::one(), r);
    }
    for &p in &SMALL_PRIMES {
        let p2 = BigUint::from(p * p);
        while (&n % &p2).is_zero() {
            n /= &p2;
            factor *= p;
        }
    }
    if let Some(r) = is_perfect_square(&n) {
        return (BigUint::one(), factor * r);
    }
    (n, factor)
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (d, c)) in self.terms.iter().enumerate() {
            let (sign, mag) = if c.is_negative() {
                ("-", -c)
            } else {
                ("+", c.clone())
            };
            if k == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", sign)?;
            }
            if d.is_one() {
                write!(f, "{}", mag)?;
            } else if mag.is_one() {
                write!(f, "sqrt({})", d)?;
            } else {
                write!(f, "{}*sqrt({})", mag, d)?;
            }
        }
        Ok(())
    }
}

/// A scalar that is exact when it can be and floating point otherwise.
#[derive(Clone, Debug)]
pub enum Value {
    Exact(Surd),
    Float(f64),
}

impl Value {
    pub fn zero() -> Self {
        Value::Exact(Surd::zero())
    }

    pub fn one() -> Self {
        Value::Exact(Surd::from_rational(Rational::one()))
    }

    pub fn from_rational(q: Rational) -> Self {
        Value::Exact(Surd::from_rational(q))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Value::from_rational(rational(num, den))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Value::Exact(s) => s.as_rational(),
            Value::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(s) => s.to_f64(),
            Value::Float(x) => *x,
        }
    }

    pub fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Exact zero for exact values, `|x| <= FLOAT_TOL` for floats.
    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(s) => s.is_zero(),
            Value::Float(x) => x.abs() <= FLOAT_TOL,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Value::Exact(s) if s.is_zero())
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Value::Exact(s) => match s.as_rational() {
                Some(q) => q.is_positive(),
                None => s.to_f64() > 0.0,
            },
            Value::Float(x) => *x > 0.0,
        }
    }

    pub fn to_float(&self) -> Value {
        Value::Float(self.to_f64())
    }

    /// Equality: exact when both sides are exact, within `FLOAT_TOL` otherwise.
    pub fn approx_eq(&self, other: &Value) -> bool {
        (self - other).is_zero()
    }

    pub fn sqrt(&self) -> Value {
        if let Value::Exact(s) = self {
            if let Some(q) = s.as_rational() {
                if let Some(r) = Surd::sqrt_of(&q) {
                    return Value::Exact(r);
                }
            }
        }
        Value::Float(self.to_f64().sqrt())
    }

    pub fn div(&self, other: &Value) -> Value {
        if let (Value::Exact(a), Value::Exact(b)) = (self, other) {
            if let Some(inv) = b.recip() {
                return Value::Exact(a.mul_ref(&inv));
            }
        }
        Value::Float(self.to_f64() / other.to_f64())
    }

    pub fn recip(&self) -> Value {
        Value::one().div(self)
    }

    pub fn pow(&self, exp: u32) -> Value {
        let mut acc = Value::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Compare magnitudes; used only to pick the largest residual.
    pub fn cmp_abs(&self, other: &Value) -> Ordering {
        self.abs_f64()
            .partial_cmp(&other.abs_f64())
            .unwrap_or(Ordering::Equal)
    }

    /// Largest magnitude among `values`, exact zero when empty.
    pub fn max_abs<'a>(values: impl IntoIterator<Item = &'a Value>) -> Value {
        let mut best = Value::zero();
        for v in values {
            let mag = if v.to_f64() < 0.0 { -v } else { v.clone() };
            // A nonzero exact value outranks a float within tolerance of zero.
            let better = match mag.cmp_abs(&best) {
                Ordering::Greater => true,
                Ordering::Equal => best.is_exact_zero() && !mag.is_exact_zero(),
                Ordering::Less => false,
            };
            if better {
                best = mag;
            }
        }
        best
    }
}

impl Default for Value {
    fn default() -> Self {
        Value::zero()
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(s) => write!(f, "{}", s),
            Value::Float(x) => write!(f, "{}", x),
        }
    }
}

impl FromStr for Value {
    type Err = Error;

    /// `"p/q"` and integers parse as exact rationals, decimals as floats.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::Parse(format!("invalid number {:?}", s));
        if t.contains(['.', 'e', 'E'])
            || t.eq_ignore_ascii_case("inf")
            || t.eq_ignore_ascii_case("nan")
        {
            let x: f64 = t.parse().map_err(|_| bad())?;
            if !x.is_finite() {
                return Err(bad());
            }
            return Ok(Value::Float(x));
        }
        let q = match t.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                if d.sign() == Sign::NoSign {
                    return Err(bad());
                }
                Rational::new(n, d)
            }
            None => Rational::from(t.parse::<BigInt>().map_err(|_| bad())?),
        };
        Ok(Value::from_rational(q))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $exact:expr, $float:expr) => {
        impl<'a, 'b> $trait<&'b Value> for &'a Value {
            type Output = Value;
            fn $method(self, rhs: &'b Value) -> Value {
                match (self, rhs) {
                    (Value::Exact(a), Value::Exact(b)) => Value::Exact($exact(a, b)),
                    _ => Value::Float($float(self.to_f64(), rhs.to_f64())),
                }
            }
        }
        impl $trait<Value> for Value {
            type Output = Value;
            fn $method(self, rhs: Value) -> Value {
                (&self).$method(&rhs)
            }
        }
        impl<'b> $trait<&'b Value> for Value {
            type Output = Value;
            fn $method(self, rhs: &'b Value) -> Value {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(
    Add,
    add,
    |a: &Surd, b: &Surd| a.add_ref(b),
    |x: f64, y: f64| x + y
);
binop!(
    Sub,
    sub,
    |a: &Surd, b: &Surd| a.add_ref(&b.neg_ref()),
    |x: f64, y: f64| x - y
);
binop!(
    Mul,
    mul,
    |a: &Surd, b: &Surd| a.mul_ref(b),
    |x: f64, y: f64| x * y
);

impl Neg for &Value {
    type Output = Value;
    fn neg(self) -> Value {
        match self {
            Value::Exact(s) => Value::Exact(s.neg_ref()),
            Value::Float(x) => Value::Float(-x),
        }
    }
}

impl Neg for Value {
    type Output = Value;
    fn neg(self) -> Value {
        -&self
    }
}

impl std::iter::Sum for Value {
    fn sum<I: Iterator<Item = Value>>(iter: I) -> Value {
        iter.fold(Value::zero(), |acc, v| acc + v)
    }
}

impl<'a> std::iter::Sum<&'a Value> for Value {
    fn sum<I: Iterator<Item = &'a Value>>(iter: I) -> Value {
        iter.fold(Value::zero(), |acc, v| acc + v)
    }
}

impl serde::Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(d)?;
        match raw {
            serde_json::Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Value::ratio(i, 1))
                } else {
                    Ok(Value::Float(n.as_f64().unwrap_or(f64::NAN)))
                }
            }
            other => Err(serde::de::Error::custom(format!(
                "expected a number or numeric string, got {}",
                other
            ))),
        }
    }
}
