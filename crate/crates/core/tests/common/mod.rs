//! Independent oracles shared by the integration tests.
//!
//! Intersection numbers are produced here by Virasoro-type recursions that
//! never touch the spectral-curve code.

#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thetakdv::exact::{odd_double_factorial, q, Rational};
use thetakdv::graphs::StableGraph;

fn dfact(k: i64) -> Rational {
    // (2k+1)!! for k >= -1.
    Rational::from_integer(odd_double_factorial(k + 1))
}

/// Which family of numbers the recursion produces.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Family {
    Kw,
    Bgw,
}

/// Memoized Virasoro recursion for ψ-class (`Kw`) or Θ-class (`Bgw`)
/// intersection numbers.
pub struct Oracle {
    family: Family,
    memo: HashMap<(u32, Vec<u32>), Rational>,
}

impl Oracle {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            memo: HashMap::new(),
        }
    }

    fn stable(&self, g: i64, n: usize) -> bool {
        match self.family {
            Family::Kw => 2 * g - 2 + n as i64 > 0,
            Family::Bgw => g >= 1 && n >= 1,
        }
    }

    fn dimension_ok(&self, g: i64, ks: &[u32]) -> bool {
        let s: i64 = ks.iter().map(|&k| k as i64).sum();
        match self.family {
            Family::Kw => s == 3 * g - 3 + ks.len() as i64,
            Family::Bgw => s == g - 1,
        }
    }

    /// `<τ_{k1} … τ_{kn}>_g`.
    pub fn value(&mut self, g: i64, ks: &[u32]) -> Rational {
        if g < 0 || ks.is_empty() || !self.stable(g, ks.len()) || !self.dimension_ok(g, ks) {
            return Rational::zero();
        }
        let mut sorted = ks.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let key = (g as u32, sorted.clone());
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let v = self.compute(g, &sorted);
        self.memo.insert(key, v.clone());
        v
    }

    fn compute(&mut self, g: i64, ks: &[u32]) -> Rational {
        let n = ks.len();
        match self.family {
            Family::Kw => {
                if g == 0 && n == 3 && ks.iter().all(|&k| k == 0) {
                    return Rational::one();
                }
                if g == 1 && ks == [1] {
                    return q(1, 24);
                }
            }
            Family::Bgw => {
                if g == 1 && ks == [0] {
                    return q(1, 8);
                }
            }
        }
        // Recursion on the largest index.
        let shift: i64 = if self.family == Family::Kw { 1 } else { 0 };
        let k1 = ks[0] as i64;
        let rest = &ks[1..];
        let mut total = Rational::zero();
        for j in 0..rest.len() {
            let kj = rest[j] as i64;
            let merged = k1 + kj - shift;
            if merged < 0 {
                continue;
            }
            let mut next: Vec<u32> = rest.to_vec();
            next[j] = merged as u32;
            let coef = dfact(k1 + kj - shift) / dfact(kj - 1);
            total += coef * self.value(g, &next);
        }
        let top = k1 - 1 - shift;
        for i in 0..=top.max(-1) {
            let jj = top - i;
            if jj < 0 {
                continue;
            }
            let c = dfact(i) * dfact(jj) / Rational::from_integer(BigInt::from(2));
            let mut lower = vec![i as u32, jj as u32];
            lower.extend_from_slice(rest);
            let mut s = self.value(g - 1, &lower);
            let m = rest.len();
            for mask in 0..(1u32 << m) {
                let (mut a, mut b) = (vec![i as u32], vec![jj as u32]);
                for (t, &k) in rest.iter().enumerate() {
                    if mask >> t & 1 == 1 {
                        a.push(k);
                    } else {
                        b.push(k);
                    }
                }
                for g1 in 0..=g {
                    let va = self.value(g1, &a);
                    if va.is_zero() {
                        continue;
                    }
                    s += va * self.value(g - g1, &b);
                }
            }
            total += c * s;
        }
        total / dfact(k1)
    }
}

/// Sorted index lists of length `n` with sum `s`.
pub fn partitions(n: usize, s: u32) -> Vec<Vec<u32>> {
    fn go(n: usize, s: u32, min: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            if s == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let mut k = min;
        while k as usize * n <= s as usize {
            cur.push(k);
            go(n - 1, s - k, k, cur, out);
            cur.pop();
            k += 1;
        }
    }
    let mut out = Vec::new();
    go(n, s, 0, &mut Vec::new(), &mut out);
    out
}

/// Brute-force automorphism count: vertex permutations together with
/// half-edge bijections preserving incidence, genera and legs.
pub fn brute_force_aut(g: &StableGraph) -> u64 {
    let nv = g.num_vertices();
    // Half-edges: (edge, side).
    let halves: Vec<(usize, usize)> = (0..g.edges.len()).flat_map(|e| [(e, 0), (e, 1)]).collect();
    let vertex_of = |h: (usize, usize)| if h.1 == 0 { g.edges[h.0].0 } else { g.edges[h.0].1 };
    let mut count = 0;
    permutations(nv, &mut |vp| {
        if (0..nv).any(|v| g.genera[vp[v]] != g.genera[v]) || g.legs.iter().any(|&l| vp[l] != l) {
            return;
        }
        permutations(halves.len(), &mut |hp| {
            // Half-edge h maps to halves[hp[i]]; incidence and the involution must be preserved.
            let ok = (0..halves.len()).all(|i| {
                let h = halves[i];
                let img = halves[hp[i]];
                let partner = (h.0, 1 - h.1);
                let j = halves.iter().position(|&x| x == partner).unwrap();
                let pimg = halves[hp[j]];
                vp[vertex_of(h)] == vertex_of(img) && pimg == (img.0, 1 - img.1)
            });
            if ok {
                count += 1;
            }
        });
    });
    count
}

pub fn permutations(n: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(k: usize, p: &mut Vec<usize>, used: &mut Vec<bool>, f: &mut dyn FnMut(&[usize])) {
        if k == p.capacity() {
            f(p);
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                p.push(x);
                rec(k + 1, p, used, f);
                p.pop();
                used[x] = false;
            }
        }
    }
    let mut p = Vec::with_capacity(n);
    rec(0, &mut p, &mut vec![false; n], f);
}
