//! Truncated multivariate series in ħ and the times t₀, t₁, …, t_m.
//!
//! Monomials are keyed by the ħ exponent and an exponent vector over the
//! times.  The truncation bound is on the total t-degree; every stored
//! monomial respects it.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::exact::{qi, Rational};

/// Exponent key: (ħ exponent, exponents of t₀..t_m).
pub type Monomial = (u32, Vec<u32>);

/// Sparse truncated series with rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSeries {
    nvars: usize,
    max_degree: u32,
    terms: BTreeMap<Monomial, Rational>,
}

impl MultiSeries {
    /// The zero series in `nvars` time variables truncated at total degree
    /// `max_degree`.
    pub fn zero(nvars: usize, max_degree: u32) -> Self {
        Self {
            nvars,
            max_degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Adds `c * ħ^h * t^exps`, dropping it when beyond the bound.
    pub fn add_term(&mut self, h: u32, exps: Vec<u32>, c: Rational) {
        assert_eq!(exps.len(), self.nvars, "exponent vector length");
        if c.is_zero() || exps.iter().sum::<u32>() > self.max_degree {
            return;
        }
        let key = (h, exps);
        let entry = self.terms.entry(key.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    /// Coefficient of a monomial (zero if absent).
    pub fn coeff(&self, h: u32, exps: &[u32]) -> Rational {
        self.terms
            .get(&(h, exps.to_vec()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.max_degree = self.max_degree.min(o.max_degree);
        out.terms.retain(|(_, e), _| e.iter().sum::<u32>() <= out.max_degree);
        for ((h, e), c) in &o.terms {
            out.add_term(*h, e.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, r: &Rational) -> Self {
        let mut out = Self::zero(self.nvars, self.max_degree);
        for ((h, e), c) in &self.terms {
            out.add_term(*h, e.clone(), c * r);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&qi(-1))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Truncated product.
    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.nvars, self.max_degree.min(o.max_degree));
        for ((h1, e1), c1) in &self.terms {
            for ((h2, e2), c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(h1 + h2, e, c1 * c2);
            }
        }
        out
    }

    /// Multiplies by ħ^k.
    pub fn shift_hbar(&self, k: u32) -> Self {
        let mut out = Self::zero(self.nvars, self.max_degree);
        for ((h, e), c) in &self.terms {
            out.add_term(h + k, e.clone(), c.clone());
        }
        out
    }

    /// Partial derivative in t_var; the truncation bound drops by one.
    pub fn derive(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars, self.max_degree.saturating_sub(1));
        for ((h, e), c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            out.add_term(*h, e2, c * qi(e[var] as i64));
        }
        out
    }

    /// Keeps only monomials with ħ exponent at most `h_max`.
    pub fn truncate_hbar(&self, h_max: u32) -> Self {
        let mut out = self.clone();
        out.terms.retain(|(h, _), _| *h <= h_max);
        out
    }

    /// Lowers the degree bound.
    pub fn truncate_degree(&self, d: u32) -> Self {
        let mut out = self.clone();
        out.max_degree = d.min(self.max_degree);
        out.terms.retain(|(_, e), _| e.iter().sum::<u32>() <= out.max_degree);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    #[test]
    fn product_respects_bound() {
        let mut a = MultiSeries::zero(2, 2);
        a.add_term(0, vec![1, 0], q(1, 2));
        a.add_term(1, vec![0, 1], q(3, 1));
        let p = a.mul(&a);
        assert_eq!(p.coeff(0, &[2, 0]), q(1, 4));
        assert_eq!(p.coeff(1, &[1, 1]), q(3, 1));
        let c = p.mul(&a);
        assert!(c.is_zero());
    }

    #[test]
    fn derivative() {
        let mut a = MultiSeries::zero(1, 4);
        a.add_term(0, vec![3], q(1, 6));
        assert_eq!(a.derive(0).coeff(0, &[2]), q(1, 2));
    }
}
