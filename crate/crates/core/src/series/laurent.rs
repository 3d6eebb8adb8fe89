//! Truncated univariate Laurent series over K with explicit precision tracking.
//!
//! A series stores its coefficients from the valuation upwards together with
//! the largest exponent whose coefficient is guaranteed correct.  Exact
//! (finite) series use the [`EXACT`] sentinel.  Binary operations propagate the
//! pessimistic order, so reading a coefficient beyond it is an error rather
//! than a silent precision loss.

use std::fmt;

use num_traits::One;

use crate::error::{Error, Result};
use crate::exact::{q, qi, ExtScalar, Rational};

/// Order sentinel for series known exactly (polynomials in s and 1/s).
pub const EXACT: i64 = i64::MAX / 4;

/// `sum_j coeffs[j] * s^(val + j)`, correct for exponents `<= order`.
#[derive(Clone, PartialEq)]
pub struct LaurentSeries {
    val: i64,
    coeffs: Vec<ExtScalar>,
    order: i64,
}

fn min_order(a: i64, b: i64) -> i64 {
    a.min(b).min(EXACT)
}

fn add_order(a: i64, b: i64) -> i64 {
    if a >= EXACT || b >= EXACT {
        EXACT
    } else {
        (a + b).min(EXACT)
    }
}

impl LaurentSeries {
    /// Builds a series from coefficients starting at exponent `val`.
    pub fn new(val: i64, coeffs: Vec<ExtScalar>, order: i64) -> Self {
        let mut s = Self { val, coeffs, order };
        s.normalize();
        s
    }

    /// The zero series known to the given order.
    pub fn zero(order: i64) -> Self {
        Self {
            val: 0,
            coeffs: Vec::new(),
            order,
        }
    }

    /// The exact constant series `c`.
    pub fn constant(c: ExtScalar) -> Self {
        Self::new(0, vec![c], EXACT)
    }

    /// The exact constant one.
    pub fn one() -> Self {
        Self::constant(ExtScalar::one())
    }

    /// The exact monomial `c * s^e`.
    pub fn monomial(c: ExtScalar, e: i64) -> Self {
        Self::new(e, vec![c], EXACT)
    }

    /// The exact series `s`.
    pub fn var() -> Self {
        Self::monomial(ExtScalar::one(), 1)
    }

    /// Builds an exact series from rational coefficients starting at `val`.
    pub fn from_rationals(val: i64, coeffs: &[Rational]) -> Self {
        Self::new(
            val,
            coeffs.iter().cloned().map(ExtScalar::from_rational).collect(),
            EXACT,
        )
    }

    fn normalize(&mut self) {
        if self.order < EXACT {
            let keep = self.order - self.val + 1;
            if keep <= 0 {
                self.coeffs.clear();
            } else if (keep as usize) < self.coeffs.len() {
                self.coeffs.truncate(keep as usize);
            }
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead == self.coeffs.len() {
            self.coeffs.clear();
            self.val = 0;
            return;
        }
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.val += lead as i64;
        }
        while self.coeffs.last().is_some_and(ExtScalar::is_zero) {
            self.coeffs.pop();
        }
    }

    /// Largest exponent whose coefficient is guaranteed.
    pub fn order(&self) -> i64 {
        self.order
    }

    /// True when the series is known exactly.
    pub fn is_exact(&self) -> bool {
        self.order >= EXACT
    }

    /// Exponent of the first nonzero coefficient, `None` if every known
    /// coefficient vanishes.
    pub fn valuation(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then_some(self.val)
    }

    /// True when every known coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest exponent carrying a nonzero stored coefficient.
    pub fn top_exponent(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then(|| self.val + self.coeffs.len() as i64 - 1)
    }

    /// Coefficient of `s^e`, failing when `e` lies beyond the known order.
    pub fn coeff(&self, e: i64) -> Result<ExtScalar> {
        if e > self.order {
            return Err(Error::Truncation {
                have: self.order,
                need: e,
                context: "coefficient read beyond known order".into(),
            });
        }
        Ok(self.coeff_unchecked(e))
    }

    /// Coefficient of `s^e` without the precision check.
    pub fn coeff_unchecked(&self, e: i64) -> ExtScalar {
        if e < self.val {
            return ExtScalar::zero();
        }
        self.coeffs
            .get((e - self.val) as usize)
            .cloned()
            .unwrap_or_else(ExtScalar::zero)
    }

    fn coeff_ref(&self, e: i64) -> Option<&ExtScalar> {
        if e < self.val {
            return None;
        }
        self.coeffs.get((e - self.val) as usize)
    }

    /// Coefficient of `s^-1`.
    pub fn residue(&self) -> Result<ExtScalar> {
        self.coeff(-1)
    }

    /// Iterator over `(exponent, coefficient)` for nonzero stored terms.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &ExtScalar)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(j, c)| (self.val + j as i64, c))
    }

    /// Lowers the known order to `order` (no-op if already lower).
    pub fn truncate(&self, order: i64) -> Self {
        Self::new(self.val, self.coeffs.clone(), self.order.min(order))
    }

    /// Multiplies by `s^e`.
    pub fn shift(&self, e: i64) -> Self {
        Self::new(self.val + e, self.coeffs.clone(), add_order(self.order, e))
    }

    /// Multiplies by a scalar.
    pub fn scale(&self, c: &ExtScalar) -> Self {
        Self::new(self.val, self.coeffs.iter().map(|a| a * c).collect(), self.order)
    }

    /// Multiplies by a rational.
    pub fn scale_q(&self, r: &Rational) -> Self {
        Self::new(self.val, self.coeffs.iter().map(|a| a.scale(r)).collect(), self.order)
    }

    /// Sum of two series.
    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, false)
    }

    /// Difference of two series.
    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, true)
    }

    fn combine(&self, other: &Self, negate: bool) -> Self {
        let order = min_order(self.order, other.order);
        if self.is_zero() && other.is_zero() {
            return Self::zero(order);
        }
        let lo = match (self.valuation(), other.valuation()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => 0,
        };
        let hi_a = self.top_exponent().unwrap_or(lo);
        let hi_b = other.top_exponent().unwrap_or(lo);
        let hi = hi_a.max(hi_b).min(order);
        if hi < lo {
            return Self::zero(order);
        }
        let mut out = Vec::with_capacity((hi - lo + 1) as usize);
        for e in lo..=hi {
            let mut c = self.coeff_unchecked(e);
            if let Some(b) = other.coeff_ref(e) {
                if negate {
                    c -= b;
                } else {
                    c += b;
                }
            }
            out.push(c);
        }
        Self::new(lo, out, order)
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        Self::new(self.val, self.coeffs.iter().map(|c| -c).collect(), self.order)
    }

    /// Product with pessimistic order propagation.
    pub fn mul(&self, other: &Self) -> Self {
        let order = match (self.valuation(), other.valuation()) {
            (Some(va), Some(vb)) => min_order(add_order(va, other.order), add_order(vb, self.order)),
            (Some(va), None) => add_order(va, other.order),
            (None, Some(vb)) => add_order(vb, self.order),
            (None, None) => add_order(self.order.min(0), other.order.min(0)),
        };
        if self.is_zero() || other.is_zero() {
            // Known zeros still bound the product's precision from the other factor.
            let bound = if self.is_zero() && other.is_zero() {
                add_order(self.order, other.order)
            } else if self.is_zero() {
                add_order(self.order, other.valuation().unwrap_or(0))
            } else {
                add_order(other.order, self.valuation().unwrap_or(0))
            };
            return Self::zero(bound);
        }
        let val = self.val + other.val;
        let full = self.coeffs.len() + other.coeffs.len() - 1;
        let len = if order >= EXACT {
            full
        } else {
            ((order - val + 1).max(0) as usize).min(full)
        };
        let mut out = vec![ExtScalar::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i >= len {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                if b.is_zero() {
                    continue;
                }
                out[i + j] += &(a * b);
            }
        }
        Self::new(val, out, order)
    }

    /// Multiplicative inverse.  A series that is exact but not a monomial
    /// gets the finite precision `default_order`.
    pub fn inv_to(&self, default_order: i64) -> Result<Self> {
        let v = self.valuation().ok_or(Error::DivisionByZero)?;
        let rel = if self.is_exact() {
            if self.coeffs.len() == 1 {
                return Ok(Self::monomial(self.coeffs[0].inv()?, -v));
            }
            default_order + v
        } else {
            self.order - v
        };
        let len = (rel + 1).max(1) as usize;
        let a0inv = self.coeffs[0].inv()?;
        let mut b: Vec<ExtScalar> = Vec::with_capacity(len);
        b.push(a0inv.clone());
        for nidx in 1..len {
            let mut acc = ExtScalar::zero();
            for k in 1..=nidx.min(self.coeffs.len() - 1) {
                let a = &self.coeffs[k];
                if a.is_zero() {
                    continue;
                }
                acc += &(a * &b[nidx - k]);
            }
            b.push(-(&acc * &a0inv));
        }
        Ok(Self::new(-v, b, rel - v))
    }

    /// Inverse for series known to finite order.
    pub fn inv(&self) -> Result<Self> {
        self.inv_to(self.order.min(EXACT - 1))
    }

    /// Quotient `self / other`, using `default_order` if `other` is exact.
    pub fn div_to(&self, other: &Self, default_order: i64) -> Result<Self> {
        Ok(self.mul(&other.inv_to(default_order)?))
    }

    /// Derivative in s.
    pub fn derive(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c.scale(&qi(self.val + j as i64)))
            .collect();
        Self::new(self.val - 1, coeffs, add_order(self.order, -1))
    }

    /// Antiderivative with zero constant term; fails on an `s^-1` term.
    pub fn integrate(&self) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (j, c) in self.coeffs.iter().enumerate() {
            let e = self.val + j as i64;
            if e == -1 {
                if !c.is_zero() {
                    return Err(Error::Series(
                        "cannot integrate a series with a nonzero s^-1 term".into(),
                    ));
                }
                coeffs.push(ExtScalar::zero());
            } else {
                coeffs.push(c.scale(&q(1, e + 1)));
            }
        }
        Ok(Self::new(self.val + 1, coeffs, add_order(self.order, 1)))
    }

    /// The series `f(-s)`.
    pub fn reflect(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if (self.val + j as i64).rem_euclid(2) == 1 {
                    -c
                } else {
                    c.clone()
                }
            })
            .collect();
        Self::new(self.val, coeffs, self.order)
    }

    /// Keeps only the terms whose exponent has the given parity (0 even, 1 odd).
    pub fn parity_part(&self, parity: i64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if (self.val + j as i64).rem_euclid(2) == parity {
                    c.clone()
                } else {
                    ExtScalar::zero()
                }
            })
            .collect();
        Self::new(self.val, coeffs, self.order)
    }

    /// Non-negative integer power.
    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Composition `self(inner)`.  Either `inner` has positive valuation, or
    /// `self` is exact with finitely many terms.  Negative powers of the outer
    /// series are realized through the inverse of `inner`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        let iv = inner.valuation();
        let positive = iv.is_some_and(|v| v > 0);
        if !positive && !self.is_exact() {
            return Err(Error::Series(
                "composition needs an inner series of positive valuation".into(),
            ));
        }
        if self.is_zero() {
            return Ok(Self::zero(self.order));
        }
        let inner_order = inner.order.min(EXACT - 1);
        let mut result = Self::zero(EXACT);
        // Negative part via powers of 1/inner.
        if self.val < 0 {
            let inv = inner.inv_to(inner_order)?;
            let mut p = Self::one();
            for e in 1..=(-self.val) {
                p = p.mul(&inv);
                let c = self.coeff_unchecked(-e);
                if !c.is_zero() {
                    result = result.add(&p.scale(&c));
                }
            }
        }
        // Non-negative part by Horner's rule.
        let top = self.top_exponent().unwrap_or(0).max(0);
        if top >= 0 {
            let mut acc = Self::zero(EXACT);
            for e in (0..=top).rev() {
                acc = acc.mul(inner).add(&Self::constant(self.coeff_unchecked(e)));
                if !acc.is_exact() {
                    acc = acc.truncate(acc.order);
                }
            }
            result = result.add(&acc);
        }
        if !self.is_exact() {
            // Terms beyond the outer order contribute at exponents >= (order+1)*val(inner).
            let v = iv.unwrap_or(1);
            result = result.truncate(add_order(self.order + 1, 0) * v - 1);
        }
        Ok(result)
    }

    /// Compositional inverse of `c1 s + c2 s^2 + ...` (c1 != 0).
    pub fn reversion(&self) -> Result<Self> {
        if self.valuation() != Some(1) {
            return Err(Error::Series("reversion needs valuation exactly one".into()));
        }
        let order = if self.is_exact() {
            return Err(Error::Series("reversion needs a finite order".into()));
        } else {
            self.order
        };
        // Lagrange inversion: [v^n] w = (1/n) [u^(n-1)] (u / s(u))^n.
        let phi = self.shift(-1).inv()?;
        let mut power = Self::one();
        let mut coeffs = Vec::with_capacity(order as usize);
        for n in 1..=order {
            power = power.mul(&phi).truncate(order - 1);
            coeffs.push(power.coeff_unchecked(n - 1).scale(&q(1, n)));
        }
        Ok(Self::new(1, coeffs, order))
    }

    /// Square root of `1 + p` where `p` has positive valuation.
    pub fn sqrt_one_plus(p: &Self) -> Result<Self> {
        if p.valuation().is_some_and(|v| v <= 0) {
            return Err(Error::Series("sqrt_one_plus needs p = O(s)".into()));
        }
        let order = p.order.min(EXACT - 1);
        let full = Self::one().add(p);
        let mut qc: Vec<ExtScalar> = vec![ExtScalar::one()];
        let half = q(1, 2);
        for n in 1..=order {
            let pn = full.coeff_unchecked(n);
            let mut acc = ExtScalar::zero();
            for j in 1..n {
                acc += &(&qc[j as usize] * &qc[(n - j) as usize]);
            }
            qc.push((&pn - &acc).scale(&half));
        }
        Ok(Self::new(0, qc, order))
    }

    /// Truncated exponential series of `s`, used as a composition test input.
    pub fn exp_truncated(order: i64) -> Self {
        let mut coeffs = Vec::new();
        let mut fact = Rational::one();
        for k in 0..=order {
            if k > 0 {
                fact *= qi(k);
            }
            coeffs.push(ExtScalar::from_rational(fact.recip()));
        }
        Self::new(0, coeffs, order)
    }
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})*s^{e}")?;
        }
        if first {
            write!(f, "0")?;
        }
        if !self.is_exact() {
            write!(f, " + O(s^{})", self.order + 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(n: i64) -> ExtScalar {
        ExtScalar::from_int(n)
    }

    fn ser(val: i64, c: &[i64], order: i64) -> LaurentSeries {
        LaurentSeries::new(val, c.iter().map(|&x| sq(x)).collect(), order)
    }

    #[test]
    fn spec_arithmetic_examples() {
        let a = ser(-2, &[1, 0, 1], EXACT);
        let b = LaurentSeries::monomial(sq(1), 2);
        assert_eq!(a.mul(&b), ser(0, &[1, 0, 1], EXACT));
        let d = LaurentSeries::monomial(sq(1), -1).derive();
        assert_eq!(d, LaurentSeries::monomial(sq(-1), -2));
        let inv = ser(0, &[1, -1], EXACT).inv_to(3).unwrap();
        assert_eq!(inv, ser(0, &[1, 1, 1, 1], 3));
    }

    #[test]
    fn reversion_examples() {
        let s = ser(1, &[2], 5);
        assert_eq!(
            s.reversion().unwrap(),
            LaurentSeries::new(1, vec![ExtScalar::frac(1, 2)], 5)
        );
        let s = ser(1, &[1, 1], 3);
        assert_eq!(s.reversion().unwrap(), ser(1, &[1, -1, 2], 3));
        // Lagrange inversion oracle: [v^n] w = (1/n) [u^{n-1}] (u/s(u))^n.
        let s = ser(1, &[1, 1, 3, -2], 7);
        let w = s.reversion().unwrap();
        let phi = ser(0, &[1, 1, 3, -2], 6).inv().unwrap();
        for n in 1..=7 {
            let lag = phi.pow(n as u32).coeff_unchecked(n - 1).scale(&q(1, n));
            assert_eq!(w.coeff(n).unwrap(), lag, "n = {n}");
        }
    }

    #[test]
    fn reversion_leading_coefficient_in_field() {
        let c = ExtScalar::basis(7, qi(1));
        let s = LaurentSeries::new(1, vec![c, sq(1)], 6);
        let w = s.reversion().unwrap();
        assert_eq!(w.coeff(1).unwrap(), ExtScalar::basis(7, q(-1, 6)));
    }

    #[test]
    fn compose_examples() {
        let outer = LaurentSeries::monomial(sq(1), 2);
        let inner = LaurentSeries::monomial(sq(-1), 1);
        assert_eq!(outer.compose(&inner).unwrap(), LaurentSeries::monomial(sq(1), 2));
        let outer = LaurentSeries::monomial(sq(1), -1);
        let inner = ser(1, &[1, 1], 3);
        let c = outer.compose(&inner).unwrap();
        assert_eq!(c.order(), 1);
        assert_eq!(c, ser(-1, &[1, -1, 1], 1));
        let e = LaurentSeries::exp_truncated(3).compose(&LaurentSeries::var()).unwrap();
        assert_eq!(
            e,
            LaurentSeries::new(0, vec![sq(1), sq(1), ExtScalar::frac(1, 2), ExtScalar::frac(1, 6)], 3)
        );
    }

    #[test]
    fn truncation_is_reported() {
        let a = ser(0, &[1, 2], 1);
        assert!(matches!(a.coeff(2), Err(Error::Truncation { .. })));
        let b = ser(-3, &[1], EXACT);
        let p = a.mul(&b);
        assert_eq!(p.order(), -2);
        assert!(p.residue().is_err());
    }

    #[test]
    fn sqrt_one_plus_squares_back() {
        let p = ser(1, &[2, -1, 3], 6);
        let r = LaurentSeries::sqrt_one_plus(&p).unwrap();
        assert_eq!(r.mul(&r), LaurentSeries::one().add(&p));
    }
}
