//! Exact scalars: rationals and the number field K = Q(i, sqrt2, sqrt3).
//!
//! An [`ExtScalar`] stores eight rational coordinates over the basis
//! `1, sqrt2, sqrt3, sqrt6, i, i*sqrt2, i*sqrt3, i*sqrt6`.  The basis index of
//! `i^a * sqrt3^c * sqrt2^b` is `4a + 2c + b`, so multiplying two basis
//! elements is an xor of indices together with a rational factor.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number, always kept in lowest terms.
pub type Rational = num_rational::BigRational;

/// Names of the basis elements, in coordinate order.
pub const BASIS_NAMES: [&str; 8] = ["1", "sqrt2", "sqrt3", "sqrt6", "i", "i*sqrt2", "i*sqrt3", "i*sqrt6"];

/// Builds the rational `n / d`.
pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Builds the integer `n` as a rational.
pub fn qi(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Formats a rational as `"num/den"`, or `"num"` when the denominator is one.
pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"num/den"` or `"num"` into a rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse_int = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("not a rational: {s:?}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(Error::DivisionByZero);
            }
            Ok(Rational::new(parse_int(n)?, d))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

/// Rational factor picked up when multiplying basis elements `a` and `b`.
fn basis_sign(a: usize, b: usize) -> i64 {
    let common = a & b;
    let mut f = 1;
    if common & 4 != 0 {
        f *= -1;
    }
    if common & 2 != 0 {
        f *= 3;
    }
    if common & 1 != 0 {
        f *= 2;
    }
    f
}

/// Element of K = Q(i, sqrt2, sqrt3).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExtScalar {
    coords: [Rational; 8],
}

impl Default for ExtScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl ExtScalar {
    /// The additive identity.
    pub fn zero() -> Self {
        Self {
            coords: std::array::from_fn(|_| Rational::zero()),
        }
    }

    /// The multiplicative identity.
    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    /// Embeds a rational number.
    pub fn from_rational(r: Rational) -> Self {
        let mut s = Self::zero();
        s.coords[0] = r;
        s
    }

    /// Embeds an integer.
    pub fn from_int(n: i64) -> Self {
        Self::from_rational(qi(n))
    }

    /// Embeds `n / d`.
    pub fn frac(n: i64, d: i64) -> Self {
        Self::from_rational(q(n, d))
    }

    /// Builds an element from its eight coordinates.
    pub fn from_coords(coords: [Rational; 8]) -> Self {
        Self { coords }
    }

    /// `r` times the basis element with the given index.
    pub fn basis(index: usize, r: Rational) -> Self {
        let mut s = Self::zero();
        s.coords[index] = r;
        s
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self::basis(4, Rational::one())
    }

    /// sqrt(2).
    pub fn sqrt2() -> Self {
        Self::basis(1, Rational::one())
    }

    /// sqrt(3).
    pub fn sqrt3() -> Self {
        Self::basis(2, Rational::one())
    }

    /// sqrt(6).
    pub fn sqrt6() -> Self {
        Self::basis(3, Rational::one())
    }

    /// sqrt(-3) = i*sqrt3.
    pub fn sqrt_minus3() -> Self {
        Self::basis(6, Rational::one())
    }

    /// The coordinates over the fixed basis.
    pub fn coords(&self) -> &[Rational; 8] {
        &self.coords
    }

    /// Coordinate at a basis index.
    pub fn coord(&self, index: usize) -> &Rational {
        &self.coords[index]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.is_rational() && self.coords[0].is_one()
    }

    /// True when every non-unit coordinate vanishes.
    pub fn is_rational(&self) -> bool {
        self.coords[1..].iter().all(Zero::is_zero)
    }

    /// The rational value, if the element is rational.
    pub fn to_rational(&self) -> Option<Rational> {
        self.is_rational().then(|| self.coords[0].clone())
    }

    /// Applies the field automorphism flipping the signs of the generators
    /// whose bits are set in `mask` (4: i, 2: sqrt3, 1: sqrt2).
    pub fn automorphism(&self, mask: usize) -> Self {
        let mut out = self.clone();
        for (idx, c) in out.coords.iter_mut().enumerate() {
            if (idx & mask).count_ones() % 2 == 1 {
                *c = -c.clone();
            }
        }
        out
    }

    /// Complex conjugation i -> -i.
    pub fn conj(&self) -> Self {
        self.automorphism(4)
    }

    /// Multiplies by a rational.
    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Self {
            coords: std::array::from_fn(|k| &self.coords[k] * r),
        }
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if let Some(r) = self.to_rational() {
            return Ok(Self::from_rational(r.recip()));
        }
        // Norm down the tower Q(sqrt2) < Q(sqrt2, sqrt3) < K.
        let a1 = self.automorphism(4);
        let b = self * &a1;
        let b1 = b.automorphism(2);
        let c = &b * &b1;
        let c1 = c.automorphism(1);
        let n = (&c * &c1)
            .to_rational()
            .ok_or_else(|| Error::Invalid("norm is not rational".into()))?;
        Ok((&(&a1 * &b1) * &c1).scale(&n.recip()))
    }

    /// Checked division.
    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    /// Integer power (negative exponents invert).
    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = Self::one();
        let mut sq = base;
        let mut k = e.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &sq;
            }
            k >>= 1;
            if k > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    /// Square root chosen deterministically: the root whose first nonzero
    /// coordinate (in basis order) is positive.
    pub fn sqrt(&self) -> Result<Self> {
        if self.is_zero() {
            return Ok(Self::zero());
        }
        match sqrt_level(self, 3) {
            Some(s) => Ok(normalize_sign(s)),
            None => Err(Error::NotRepresentable(self.to_string())),
        }
    }

    /// Sign of the first nonzero coordinate (0 for zero).
    pub fn leading_sign(&self) -> i32 {
        for c in &self.coords {
            if c.is_positive() {
                return 1;
            }
            if c.is_negative() {
                return -1;
            }
        }
        0
    }
}

fn normalize_sign(s: ExtScalar) -> ExtScalar {
    if s.leading_sign() < 0 {
        -s
    } else {
        s
    }
}

fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer();
    let d = r.denom();
    let sn = n.sqrt();
    let sd = d.sqrt();
    (&sn * &sn == *n && &sd * &sd == *d).then(|| Rational::new(sn, sd))
}

/// Square root inside the subfield generated by the first `level` tower
/// generators (sqrt2, sqrt3, i).  The element must live in that subfield.
fn sqrt_level(a: &ExtScalar, level: usize) -> Option<ExtScalar> {
    if level == 0 {
        return rational_sqrt(&a.coords[0]).map(ExtScalar::from_rational);
    }
    let half = 1usize << (level - 1);
    let d = match level {
        1 => 2,
        2 => 3,
        _ => -1,
    };
    let mut alpha = ExtScalar::zero();
    let mut beta = ExtScalar::zero();
    for k in 0..half {
        alpha.coords[k] = a.coords[k].clone();
        beta.coords[k] = a.coords[k + half].clone();
    }
    let gen = ExtScalar::basis(half, Rational::one());
    if beta.is_zero() {
        if let Some(x) = sqrt_level(&alpha, level - 1) {
            return Some(x);
        }
        let t = sqrt_level(&alpha.scale(&q(1, d)), level - 1)?;
        return Some(&t * &gen);
    }
    let disc = &(&alpha * &alpha) - &(&beta * &beta).scale(&qi(d));
    let r = sqrt_level(&disc, level - 1)?;
    for cand in [&alpha + &r, &alpha - &r] {
        let x2 = cand.scale(&q(1, 2));
        if x2.is_zero() {
            continue;
        }
        if let Some(x) = sqrt_level(&x2, level - 1) {
            let y = (&beta * &(&x.scale(&qi(2))).inv().ok()?).clone();
            return Some(&x + &(&y * &gen));
        }
    }
    None
}

impl fmt::Display for ExtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (idx, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            if idx == 0 {
                write!(f, "{}", fmt_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", BASIS_NAMES[idx])?;
            } else {
                write!(f, "{}*{}", fmt_rational(&mag), BASIS_NAMES[idx])?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ExtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl ExtScalar {
    /// LaTeX rendering, e.g. `\frac{35}{243}` or `-\frac{1}{24}i`.
    pub fn to_latex(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let names = [
            "",
            "\\sqrt{2}",
            "\\sqrt{3}",
            "\\sqrt{6}",
            "i",
            "i\\sqrt{2}",
            "i\\sqrt{3}",
            "i\\sqrt{6}",
        ];
        let mut out = String::new();
        for (idx, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mag = c.abs();
            let num = if mag.denom().is_one() {
                mag.numer().to_string()
            } else {
                format!("\\frac{{{}}}{{{}}}", mag.numer(), mag.denom())
            };
            if idx == 0 {
                out.push_str(&num);
            } else if mag.is_one() {
                out.push_str(names[idx]);
            } else {
                out.push_str(&num);
                out.push_str(names[idx]);
            }
        }
        out
    }

    /// JSON object mapping basis name to `"num/den"`, zeros omitted.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (idx, c) in self.coords.iter().enumerate() {
            if !c.is_zero() {
                map.insert(BASIS_NAMES[idx].to_string(), fmt_rational(c).into());
            }
        }
        serde_json::Value::Object(map)
    }

    /// Inverse of [`ExtScalar::to_json`].  A bare rational string such as
    /// `"-3/4"` or an integer is also accepted.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        if let Some(text) = v.as_str() {
            return Ok(Self::from_rational(parse_rational(text)?));
        }
        if let Some(n) = v.as_i64() {
            return Ok(Self::from_int(n));
        }
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("scalar must be a rational string, an integer or an object".into()))?;
        let mut s = Self::zero();
        for (k, val) in obj {
            let idx = BASIS_NAMES
                .iter()
                .position(|n| n == k)
                .ok_or_else(|| Error::Parse(format!("unknown basis element {k:?}")))?;
            let text = val
                .as_str()
                .ok_or_else(|| Error::Parse("coordinate must be a string".into()))?;
            s.coords[idx] = parse_rational(text)?;
        }
        Ok(s)
    }
}

impl Serialize for ExtScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        ExtScalar::from_json(&v).map_err(D::Error::custom)
    }
}

impl From<Rational> for ExtScalar {
    fn from(r: Rational) -> Self {
        Self::from_rational(r)
    }
}

impl From<i64> for ExtScalar {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl<'a> Add<&'a ExtScalar> for &'a ExtScalar {
    type Output = ExtScalar;
    fn add(self, rhs: &ExtScalar) -> ExtScalar {
        ExtScalar {
            coords: std::array::from_fn(|k| &self.coords[k] + &rhs.coords[k]),
        }
    }
}

impl<'a> Sub<&'a ExtScalar> for &'a ExtScalar {
    type Output = ExtScalar;
    fn sub(self, rhs: &ExtScalar) -> ExtScalar {
        ExtScalar {
            coords: std::array::from_fn(|k| &self.coords[k] - &rhs.coords[k]),
        }
    }
}

impl<'a> Mul<&'a ExtScalar> for &'a ExtScalar {
    type Output = ExtScalar;
    fn mul(self, rhs: &ExtScalar) -> ExtScalar {
        let mut out = ExtScalar::zero();
        for (a, ca) in self.coords.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (b, cb) in rhs.coords.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                let f = basis_sign(a, b);
                let prod = ca * cb;
                let term = if f == 1 { prod } else { prod * qi(f) };
                out.coords[a ^ b] += term;
            }
        }
        out
    }
}

impl Neg for &ExtScalar {
    type Output = ExtScalar;
    fn neg(self) -> ExtScalar {
        ExtScalar {
            coords: std::array::from_fn(|k| -self.coords[k].clone()),
        }
    }
}

impl Neg for ExtScalar {
    type Output = ExtScalar;
    fn neg(self) -> ExtScalar {
        -&self
    }
}

impl Add for ExtScalar {
    type Output = ExtScalar;
    fn add(self, rhs: ExtScalar) -> ExtScalar {
        &self + &rhs
    }
}

impl Sub for ExtScalar {
    type Output = ExtScalar;
    fn sub(self, rhs: ExtScalar) -> ExtScalar {
        &self - &rhs
    }
}

impl Mul for ExtScalar {
    type Output = ExtScalar;
    fn mul(self, rhs: ExtScalar) -> ExtScalar {
        &self * &rhs
    }
}

impl AddAssign<&ExtScalar> for ExtScalar {
    fn add_assign(&mut self, rhs: &ExtScalar) {
        for (a, b) in self.coords.iter_mut().zip(rhs.coords.iter()) {
            if !b.is_zero() {
                *a += b;
            }
        }
    }
}

impl SubAssign<&ExtScalar> for ExtScalar {
    fn sub_assign(&mut self, rhs: &ExtScalar) {
        for (a, b) in self.coords.iter_mut().zip(rhs.coords.iter()) {
            if !b.is_zero() {
                *a -= b;
            }
        }
    }
}

impl MulAssign<&ExtScalar> for ExtScalar {
    fn mul_assign(&mut self, rhs: &ExtScalar) {
        *self = &*self * rhs;
    }
}

/// Double factorial `(2m-1)!!` with the convention `(-1)!! = 1`.
pub fn odd_double_factorial(m: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut k = 2 * m - 1;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}
