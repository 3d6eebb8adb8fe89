//! Dense polynomials and rational functions over K.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{qi, ExtScalar, Rational};
use crate::series::laurent::{LaurentSeries, EXACT};

/// Polynomial with coefficients indexed by degree; trailing zeros stripped.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<ExtScalar>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<ExtScalar>) -> Self {
        while coeffs.last().is_some_and(ExtScalar::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(ExtScalar::one())
    }

    pub fn constant(c: ExtScalar) -> Self {
        Self::new(vec![c])
    }

    /// `c * z^d`.
    pub fn monomial(c: ExtScalar, d: usize) -> Self {
        let mut v = vec![ExtScalar::zero(); d + 1];
        v[d] = c;
        Self::new(v)
    }

    /// The polynomial `z`.
    pub fn var() -> Self {
        Self::monomial(ExtScalar::one(), 1)
    }

    /// Integer coefficients, lowest degree first.
    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&n| ExtScalar::from_int(n)).collect())
    }

    /// `z - a`.
    pub fn linear_root(a: &ExtScalar) -> Self {
        Self::new(vec![-a, ExtScalar::one()])
    }

    pub fn coeffs(&self) -> &[ExtScalar] {
        &self.coeffs
    }

    pub fn coeff(&self, d: usize) -> ExtScalar {
        self.coeffs.get(d).cloned().unwrap_or_else(ExtScalar::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Leading coefficient (zero for the zero polynomial).
    pub fn lead(&self) -> ExtScalar {
        self.coeffs.last().cloned().unwrap_or_else(ExtScalar::zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|k| &self.coeff(k) + &o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|k| &self.coeff(k) - &o.coeff(k)).collect())
    }

    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, c: &ExtScalar) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut out = vec![ExtScalar::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += &(a * b);
                }
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// Euclidean division `self = q * d + r` with `deg r < deg d`.
    pub fn div_rem(&self, d: &Self) -> Result<(Self, Self)> {
        let dd = d.degree().ok_or(Error::DivisionByZero)?;
        let linv = d.lead().inv()?;
        let mut r = self.coeffs.clone();
        let mut qv = vec![ExtScalar::zero(); self.coeffs.len().saturating_sub(dd).max(1)];
        while r.len() > dd {
            let top = r.len() - 1;
            let c = &r[top] * &linv;
            if !c.is_zero() {
                for (j, b) in d.coeffs.iter().enumerate() {
                    r[top - dd + j] -= &(&c * b);
                }
            }
            qv[top - dd] = c;
            r.pop();
        }
        Ok((Self::new(qv), Self::new(r)))
    }

    /// Monic greatest common divisor (zero if both are zero).
    pub fn gcd(&self, o: &Self) -> Result<Self> {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b)?;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> Result<Self> {
        if self.is_zero() {
            return Ok(Self::zero());
        }
        Ok(self.scale(&self.lead().inv()?))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.scale(&qi(k as i64)))
                .collect(),
        )
    }

    pub fn eval(&self, z: &ExtScalar) -> ExtScalar {
        let mut acc = ExtScalar::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * z) + c;
        }
        acc
    }

    /// `p(a + t)` as a polynomial in t.
    pub fn shift(&self, a: &ExtScalar) -> Self {
        let lin = Self::new(vec![a.clone(), ExtScalar::one()]);
        self.compose(&lin)
    }

    /// `p(inner(z))`.
    pub fn compose(&self, inner: &Self) -> Self {
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(inner).add(&Self::constant(c.clone()));
        }
        acc
    }

    /// `p` evaluated on a Laurent series.
    pub fn eval_series(&self, s: &LaurentSeries) -> Result<LaurentSeries> {
        LaurentSeries::new(0, self.coeffs.clone(), EXACT).compose(s)
    }

    /// The series of `p` in t around `a` (exact).
    pub fn series_at(&self, a: &ExtScalar) -> LaurentSeries {
        LaurentSeries::new(0, self.shift(a).coeffs, EXACT)
    }

    /// Order of vanishing at `a` (`None` for the zero polynomial).
    pub fn multiplicity(&self, a: &ExtScalar) -> Option<usize> {
        if self.is_zero() {
            return None;
        }
        self.shift(a).coeffs.iter().position(|c| !c.is_zero())
    }

    /// Roots in K with multiplicity, found by rational-root extraction
    /// followed by the quadratic formula.  Fails naming the leftover factor
    /// when it has degree above two or a root outside K.
    pub fn roots(&self) -> Result<Vec<(ExtScalar, usize)>> {
        if self.is_zero() {
            return Err(Error::Invalid("roots of the zero polynomial".into()));
        }
        let mut rest = self.monic()?;
        let mut out: Vec<(ExtScalar, usize)> = Vec::new();
        let push = |r: ExtScalar, out: &mut Vec<(ExtScalar, usize)>| {
            if let Some(e) = out.iter_mut().find(|(x, _)| *x == r) {
                e.1 += 1;
            } else {
                out.push((r, 1));
            }
        };
        if rest.coeffs.iter().all(ExtScalar::is_rational) {
            for r in rational_root_candidates(&rest) {
                loop {
                    let rs = ExtScalar::from_rational(r.clone());
                    if rest.degree().unwrap_or(0) == 0 || !rest.eval(&rs).is_zero() {
                        break;
                    }
                    rest = rest.div_rem(&Self::linear_root(&rs))?.0;
                    push(rs, &mut out);
                }
            }
        }
        // Peel off zero roots for non-rational coefficient polynomials too.
        while rest.degree().unwrap_or(0) > 0 && rest.coeff(0).is_zero() {
            rest = rest.div_rem(&Self::var())?.0;
            push(ExtScalar::zero(), &mut out);
        }
        match rest.degree().unwrap_or(0) {
            0 => {}
            1 => push(-rest.coeff(0), &mut out),
            2 => {
                let b = rest.coeff(1);
                let c = rest.coeff(0);
                let disc = &(&b * &b) - &c.scale(&qi(4));
                let sq = disc
                    .sqrt()
                    .map_err(|_| Error::InvalidCurve(format!("factor {rest} has roots outside K")))?;
                let half = crate::exact::q(1, 2);
                push((&(-&b) + &sq).scale(&half), &mut out);
                push((&(-&b) - &sq).scale(&half), &mut out);
            }
            _ => {
                return Err(Error::InvalidCurve(format!(
                    "cannot find the roots of the factor {rest} inside K"
                )))
            }
        }
        Ok(out)
    }

    /// Plain text rendering in the variable `var`.
    pub fn render(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (d, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mono = match d {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{d}"),
            };
            let cs = if c.coords().iter().filter(|x| !x.is_zero()).count() > 1 {
                format!("({c})")
            } else {
                c.to_string()
            };
            parts.push(match (mono.is_empty(), c.is_one()) {
                (true, _) => cs,
                (false, true) => mono,
                (false, false) if cs == "-1" => format!("-{mono}"),
                (false, false) => format!("{cs}*{mono}"),
            });
        }
        parts.join(" + ").replace("+ -", "- ")
    }
}

/// Candidate rational roots p/q of a monic rational polynomial.
fn rational_root_candidates(p: &Poly) -> Vec<Rational> {
    let rats: Vec<Rational> = p.coeffs.iter().map(|c| c.coord(0).clone()).collect();
    let lcm = rats.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let ints: Vec<BigInt> = rats
        .iter()
        .map(|r| (r * Rational::from_integer(lcm.clone())).to_integer())
        .collect();
    let lead = ints.last().cloned().unwrap_or_else(BigInt::one).abs();
    let Some(low) = ints.iter().find(|c| !c.is_zero()).cloned() else {
        return vec![Rational::zero()];
    };
    let mut cands = vec![Rational::zero()];
    let dp = divisors(&low.abs());
    let dq = divisors(&lead);
    for a in &dp {
        for b in &dq {
            let r = Rational::new(a.clone(), b.clone());
            if !cands.contains(&r) {
                cands.push(r.clone());
                cands.push(-r);
            }
        }
    }
    cands
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= *n {
        if (n % &d).is_zero() {
            out.push(d.clone());
            let other = n / &d;
            if other != d {
                out.push(other);
            }
        }
        d += 1;
        if d > BigInt::from(1_000_000) {
            break;
        }
    }
    out
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render("z"))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Reduced rational function `num / den` with monic denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    /// Normalizes `num / den`.
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = num.gcd(&den)?;
        let (mut n, _) = num.div_rem(&g)?;
        let (mut d, _) = den.div_rem(&g)?;
        let l = d.lead().inv()?;
        n = n.scale(&l);
        d = d.scale(&l);
        Ok(Self { num: n, den: d })
    }

    pub fn zero() -> Self {
        Self {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        Self {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: ExtScalar) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den)).expect("nonzero denominators")
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn scale(&self, c: &ExtScalar) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.num), self.den.mul(&o.den)).expect("nonzero denominators")
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        if o.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Self::new(self.num.mul(&o.den), self.den.mul(&o.num))
    }

    pub fn derivative(&self) -> Self {
        let n = self
            .num
            .derivative()
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.derivative()));
        Self::new(n, self.den.mul(&self.den)).expect("nonzero denominators")
    }

    pub fn eval(&self, z: &ExtScalar) -> Result<ExtScalar> {
        self.num.eval(z).div(&self.den.eval(z))
    }

    /// `deg num - deg den` (`None` for zero).
    pub fn degree(&self) -> Option<i64> {
        Some(self.num.degree()? as i64 - self.den.degree().unwrap_or(0) as i64)
    }

    /// Laurent expansion in `t = z - a`, known through `t^order`.
    pub fn expand_at(&self, a: &ExtScalar, order: i64) -> Result<LaurentSeries> {
        let n = self.num.series_at(a);
        let d = self.den.series_at(a);
        let vn = n.valuation().unwrap_or(0);
        Ok(n.mul(&d.inv_to(order - vn)?).truncate(order))
    }

    /// Expansion at infinity in `w = 1/z`, known through `w^order`.
    pub fn expand_at_infinity(&self, order: i64) -> Result<LaurentSeries> {
        let rev = |p: &Poly| {
            let d = p.degree().unwrap_or(0) as i64;
            LaurentSeries::new(-d, p.coeffs().iter().rev().cloned().collect(), EXACT)
        };
        let n = rev(&self.num);
        let d = rev(&self.den);
        let vn = n.valuation().unwrap_or(0);
        Ok(n.mul(&d.inv_to(order - vn)?).truncate(order))
    }

    /// `f(inner)` for a series `inner` around a point where `f` has at most
    /// a pole.  `order` bounds the precision of the inverted denominator.
    pub fn compose_series(&self, inner: &LaurentSeries, order: i64) -> Result<LaurentSeries> {
        let n = self.num.eval_series(inner)?;
        let d = self.den.eval_series(inner)?;
        let vn = n.valuation().unwrap_or(0);
        Ok(n.mul(&d.inv_to(order - vn)?).truncate(order))
    }

    /// Plain text rendering `(num)/(den)`.
    pub fn render(&self, var: &str) -> String {
        if self.den.degree() == Some(0) {
            return self.num.render(var);
        }
        format!("({})/({})", self.num.render(var), self.den.render(var))
    }

    /// Antiderivative, failing when a residue is nonzero (logarithmic case).
    pub fn antiderivative(&self) -> Result<Self> {
        let (poly, rem) = self.num.div_rem(&self.den)?;
        let mut out = Self::from_poly(Poly::new(
            std::iter::once(ExtScalar::zero())
                .chain(
                    poly.coeffs()
                        .iter()
                        .enumerate()
                        .map(|(k, c)| c.scale(&crate::exact::q(1, k as i64 + 1))),
                )
                .collect(),
        ));
        if rem.is_zero() {
            return Ok(out);
        }
        let proper = Self::new(rem, self.den.clone())?;
        for (root, mult) in self.den.roots()? {
            let ser = proper.expand_at(&root, -1)?;
            let res = ser.coeff(-1)?;
            if !res.is_zero() {
                return Err(Error::Invalid(format!(
                    "nonzero residue {res} at z = {root}: no rational antiderivative"
                )));
            }
            for k in 2..=mult as i64 {
                let c = ser.coeff(-k)?;
                if c.is_zero() {
                    continue;
                }
                // c t^-k integrates to c t^(1-k)/(1-k).
                let term = Self::new(
                    Poly::constant(c.scale(&crate::exact::q(1, 1 - k))),
                    Poly::linear_root(&root).pow((k - 1) as u32),
                )?;
                out = out.add(&term);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render("z"))
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
