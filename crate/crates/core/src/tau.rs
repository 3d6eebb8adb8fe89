//! Partition-function coefficient tables assembled from correlators, and the
//! KdV, dilaton and initial-condition checks.
//!
//! A [`TauTable`] entry `(g, [k₁..k_n])` is the intersection-number value
//! `<τ_{k₁}…τ_{k_n}>_g`.  The coefficient of `∏ t_k^{a_k}` in `F_g` is the
//! entry divided by `∏ a_k!`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exact::{factorial, fmt_rational, q, qi, ExtScalar, Rational};
use crate::recursion::{enumerate_keys, Engine, Label};
use crate::series::{MultiSeries, RatFunc};

/// Dimension constraint obeyed by a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionRule {
    /// `Σk = 3g - 3 + n` (Kontsevich-Witten type).
    KontsevichWitten,
    /// `Σk = g - 1` (Brezin-Gross-Witten / Θ type).
    BrezinGrossWitten,
}

impl SelectionRule {
    /// True when the entry is allowed to be nonzero.
    pub fn allows(self, g: u32, ks: &[u32]) -> bool {
        let sum: i64 = ks.iter().map(|&k| k as i64).sum();
        match self {
            Self::KontsevichWitten => sum == 3 * g as i64 - 3 + ks.len() as i64,
            Self::BrezinGrossWitten => sum == g as i64 - 1,
        }
    }

    /// Index of the insertion that realizes the dilaton equation.
    pub fn dilaton_index(self) -> u32 {
        match self {
            Self::KontsevichWitten => 1,
            Self::BrezinGrossWitten => 0,
        }
    }
}

/// Origin of a table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    Airy,
    Bessel,
    ThetaRelations,
    User(String),
}

impl Provenance {
    pub fn name(&self) -> &str {
        match self {
            Self::Airy => "airy",
            Self::Bessel => "bessel",
            Self::ThetaRelations => "theta-relations",
            Self::User(s) => s,
        }
    }
}

/// Table of intersection-number entries.
#[derive(Clone, Debug, PartialEq)]
pub struct TauTable {
    pub rule: SelectionRule,
    pub provenance: Provenance,
    entries: BTreeMap<(u32, Vec<u32>), Rational>,
    complete: BTreeSet<(u32, usize)>,
}

impl TauTable {
    pub fn new(rule: SelectionRule, provenance: Provenance) -> Self {
        Self {
            rule,
            provenance,
            entries: BTreeMap::new(),
            complete: BTreeSet::new(),
        }
    }

    /// Inserts an entry; a nonzero value violating the selection rule is
    /// rejected.
    pub fn insert(&mut self, g: u32, ks: &[u32], value: Rational) -> Result<()> {
        let mut k = ks.to_vec();
        k.sort_unstable();
        if !value.is_zero() && !self.rule.allows(g, &k) {
            return Err(Error::Invalid(format!(
                "entry ({g}, {k:?}) = {} violates the selection rule",
                fmt_rational(&value)
            )));
        }
        if value.is_zero() {
            self.entries.remove(&(g, k));
        } else {
            self.entries.insert((g, k), value);
        }
        Ok(())
    }

    /// Marks every entry of type `(g, n)` as present (absent ones are zero).
    pub fn mark_complete(&mut self, g: u32, n: usize) {
        self.complete.insert((g, n));
    }

    pub fn is_complete(&self, g: u32, n: usize) -> bool {
        self.complete.contains(&(g, n))
    }

    /// Entry value; `None` if `(g, n)` is not covered.
    pub fn get(&self, g: u32, ks: &[u32]) -> Option<Rational> {
        let mut k = ks.to_vec();
        k.sort_unstable();
        if let Some(v) = self.entries.get(&(g, k.clone())) {
            return Some(v.clone());
        }
        self.complete.contains(&(g, k.len())).then(Rational::zero)
    }

    /// Entry value or an error naming the missing entry.
    pub fn require(&self, g: u32, ks: &[u32]) -> Result<Rational> {
        self.get(g, ks)
            .ok_or_else(|| Error::MissingEntry(format!("({g}, {ks:?})")))
    }

    /// Nonzero entries in sorted order.
    pub fn entries(&self) -> impl Iterator<Item = (&(u32, Vec<u32>), &Rational)> {
        self.entries.iter()
    }

    /// Covered `(g, n)` types.
    pub fn complete_types(&self) -> impl Iterator<Item = &(u32, usize)> {
        self.complete.iter()
    }

    /// Overwrites an entry without the selection-rule check (for
    /// sensitivity tests).
    pub fn perturb(&mut self, g: u32, ks: &[u32], delta: &Rational) {
        let mut k = ks.to_vec();
        k.sort_unstable();
        let e = self.entries.entry((g, k)).or_insert_with(Rational::zero);
        *e += delta;
    }

    /// `[{"g":…,"k":[…],"value":"num/den"}]`.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.entries
                .iter()
                .map(|((g, k), v)| json!({"g": g, "k": k, "value": fmt_rational(v)}))
                .collect(),
        )
    }

    /// Aligned LaTeX table of the nonzero entries.
    pub fn to_latex(&self) -> String {
        let mut out = String::from("\\begin{align*}\n");
        for ((g, k), v) in &self.entries {
            let taus: Vec<String> = k.iter().map(|x| format!("\\tau_{{{x}}}")).collect();
            let val = if v.denom().is_one() {
                v.numer().to_string()
            } else {
                format!("\\frac{{{}}}{{{}}}", v.numer(), v.denom())
            };
            out.push_str(&format!("\\langle {} \\rangle_{{{g}}} &= {val} \\\\\n", taus.join(" ")));
        }
        out.push_str("\\end{align*}\n");
        out
    }

    /// Plain text listing, one entry per line.
    pub fn to_plain(&self) -> String {
        self.entries
            .iter()
            .map(|((g, k), v)| format!("g={g} k={k:?} value={}\n", fmt_rational(v)))
            .collect()
    }
}

/// Reads a single-point curve's correlators into a table for all stable
/// `(g, n)` with `g <= g_max`, `1 <= n <= n_max`.
pub fn assemble(engine: &Engine, g_max: u32, n_max: usize, provenance: Provenance) -> Result<TauTable> {
    let curve = engine.curve();
    if curve.num_points() != 1 {
        return Err(Error::Invalid(
            "V-basis tables need a curve with one critical point; use assemble_flat".into(),
        ));
    }
    let rule = if curve.is_regular() {
        SelectionRule::KontsevichWitten
    } else {
        SelectionRule::BrezinGrossWitten
    };
    let mut table = TauTable::new(rule, provenance);
    for g in 0..=g_max {
        for n in 1..=n_max {
            if 2 * g as i64 - 2 + n as i64 <= 0 {
                continue;
            }
            let c = engine.correlator(g, n)?;
            for (key, v) in &c.coeffs {
                let ks: Vec<u32> = key.iter().map(|l| l.1 as u32).collect();
                let r = v
                    .to_rational()
                    .ok_or_else(|| Error::Invalid(format!("non-rational coefficient {v} at ({g}, {ks:?})")))?;
                table.insert(g, &ks, r)?;
            }
            table.mark_complete(g, n);
        }
    }
    Ok(table)
}

/// Table over two-index times `t^α_k`, values in K.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatTauTable {
    pub entries: BTreeMap<(u32, Vec<(usize, usize)>), ExtScalar>,
}

impl FlatTauTable {
    /// Entry for a (not necessarily sorted) multi-index with 0-based α.
    pub fn get(&self, g: u32, key: &[(usize, usize)]) -> ExtScalar {
        let mut k = key.to_vec();
        k.sort_unstable();
        self.entries.get(&(g, k)).cloned().unwrap_or_else(ExtScalar::zero)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.entries
                .iter()
                .map(|((g, k), v)| {
                    let idx: Vec<Value> = k.iter().map(|(a, kk)| json!([a + 1, kk])).collect();
                    json!({"g": g, "index": idx, "value": v.to_json()})
                })
                .collect(),
        )
    }
}

/// Matrix `T` with `V^i_k = Σ_α T[i][α] ξ^α_k` on the A2 curve, obtained by
/// matching double-pole coefficients of `V^i_0` and `ξ^α_0`.
pub fn flat_transform(engine: &Engine) -> Result<[[ExtScalar; 2]; 2]> {
    let curve = engine.curve();
    if curve.num_points() != 2 {
        return Err(Error::Invalid("flat basis needs two critical points".into()));
    }
    let double_pole = |f: &RatFunc| -> Result<[ExtScalar; 2]> {
        let a = f.expand_at(&curve.points[0].z, -2)?.coeff(-2)?;
        let b = f.expand_at(&curve.points[1].z, -2)?.coeff(-2)?;
        Ok([a, b])
    };
    let xi = [
        double_pole(&curve.flat_differential(0, 0)?)?,
        double_pole(&curve.flat_differential(1, 0)?)?,
    ];
    // Solve [v_a, v_b] = T1 * xi0 + T2 * xi1 by Cramer's rule.
    let det = &(&xi[0][0] * &xi[1][1]) - &(&xi[1][0] * &xi[0][1]);
    let dinv = det.inv()?;
    let mut t: [[ExtScalar; 2]; 2] = Default::default();
    for (i, row) in t.iter_mut().enumerate() {
        let v = double_pole(&curve.aux_differential(i, 0)?)?;
        row[0] = &(&(&v[0] * &xi[1][1]) - &(&xi[1][0] * &v[1])) * &dinv;
        row[1] = &(&(&xi[0][0] * &v[1]) - &(&v[0] * &xi[0][1])) * &dinv;
    }
    Ok(t)
}

/// Reads correlators of a two-point curve in the flat basis `ξ^α_k`.
pub fn assemble_flat(engine: &Engine, g_max: u32, n_max: usize) -> Result<FlatTauTable> {
    let t = flat_transform(engine)?;
    let mut entries = BTreeMap::new();
    for g in 0..=g_max {
        for n in 1..=n_max {
            if 2 * g as i64 - 2 + n as i64 <= 0 {
                continue;
            }
            let c = engine.correlator(g, n)?;
            let kb = engine.k_bound(g, n).unwrap_or(0);
            for fkey in enumerate_keys(2, n, kb, kb) {
                let mut total = ExtScalar::zero();
                for assign in 0..(1usize << n) {
                    let vkey: Vec<Label> = fkey
                        .iter()
                        .enumerate()
                        .map(|(pos, &(_, k))| ((assign >> pos) & 1, k))
                        .collect();
                    let cv = c.get(&vkey);
                    if cv.is_zero() {
                        continue;
                    }
                    let mut prod = cv;
                    for (pos, &(alpha, _)) in fkey.iter().enumerate() {
                        prod = &prod * &t[(assign >> pos) & 1][alpha];
                    }
                    total += &prod;
                }
                if !total.is_zero() {
                    entries.insert((g, fkey), total);
                }
            }
        }
    }
    Ok(FlatTauTable { entries })
}

fn multiplicities(ks: &[u32], nvars: usize) -> Option<Vec<u32>> {
    let mut e = vec![0u32; nvars];
    for &k in ks {
        *e.get_mut(k as usize)? += 1;
    }
    Some(e)
}

/// `F_g` restricted to times `t_0..t_m` and t-degree `<= degree`.
pub fn free_energy(table: &TauTable, g: u32, m: usize, degree: u32) -> Result<MultiSeries> {
    let mut f = MultiSeries::zero(m + 1, degree);
    for n in 1..=degree as usize {
        if 2 * g as i64 - 2 + n as i64 <= 0 {
            continue;
        }
        if !table.is_complete(g, n) {
            return Err(Error::MissingEntry(format!("table lacks type ({g}, {n})")));
        }
    }
    for ((eg, ks), v) in table.entries() {
        if *eg != g || ks.len() > degree as usize {
            continue;
        }
        let Some(exps) = multiplicities(ks, m + 1) else {
            continue;
        };
        let denom: Rational = exps
            .iter()
            .map(|&a| Rational::from_integer(factorial(a as u64)))
            .product();
        f.add_term(0, exps, v / denom);
    }
    Ok(f)
}

/// Verifies `U_{t₁} = U U_{t₀} + (ħ/12) U_{t₀t₀t₀}` for `U = Σ_g ħ^g ∂²_{t₀} F_g`
/// in every monomial of t-degree `<= degree` in `t_0..t_m` and ħ-degree
/// `<= genus_max`.
pub fn kdv_check(table: &TauTable, degree: u32, m: usize, genus_max: u32) -> Result<bool> {
    let bound = degree + 5;
    let mut u = MultiSeries::zero(m + 1, bound - 2);
    for g in 0..=genus_max {
        let f = free_energy(table, g, m, bound)?;
        let d2 = f.derive(0).derive(0);
        u = u.add(&d2.shift_hbar(g));
    }
    let lhs = u.derive(1);
    let u0 = u.derive(0);
    let rhs = u.mul(&u0).add(&u0.derive(0).derive(0).shift_hbar(1).scale(&q(1, 12)));
    let diff = lhs.sub(&rhs).truncate_degree(degree).truncate_hbar(genus_max);
    Ok(diff.is_zero())
}

/// Checks `ħ∂²_{t₀} log Z |_{t_{≥1}=0} = (ħ/8) Σ (n+1) t₀ⁿ` through `t₀^{n_max-2}`:
/// genus-one all-zero entries equal `(n-1)!/8` and no other genus has a
/// nonzero all-zero entry.
pub fn bgw_initial_condition_check(table: &TauTable, n_max: usize) -> Result<bool> {
    for n in 1..=n_max {
        let zeros = vec![0u32; n];
        let v = table.require(1, &zeros)?;
        let expect = Rational::from_integer(factorial(n as u64 - 1)) * q(1, 8);
        if v != expect {
            return Ok(false);
        }
    }
    for ((g, ks), v) in table.entries() {
        if *g != 1 && ks.iter().all(|&k| k == 0) && !v.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks the dilaton equation `<τ_d ∏τ_k>_g = (2g-2+n) <∏τ_k>_g`, with `d`
/// the table's dilaton index, on every covered pair of types with `g <= g_max`.
pub fn dilaton_homogeneity_check(table: &TauTable, g_max: u32) -> Result<bool> {
    let d = table.rule.dilaton_index();
    let types: Vec<(u32, usize)> = table.complete_types().copied().collect();
    for &(g, n) in &types {
        if g > g_max || !table.is_complete(g, n + 1) {
            continue;
        }
        let factor = qi(2 * g as i64 - 2 + n as i64);
        // Every nonzero entry on either side is compared.
        for ((eg, ks), v) in table.entries() {
            if *eg != g {
                continue;
            }
            if ks.len() == n {
                let mut big = ks.clone();
                big.push(d);
                if table.require(g, &big)? != v * &factor {
                    return Ok(false);
                }
            } else if ks.len() == n + 1 {
                if let Some(pos) = ks.iter().position(|&k| k == d) {
                    let mut small = ks.clone();
                    small.remove(pos);
                    if &(table.require(g, &small)? * &factor) != v {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Genus-zero primary three-point values `(0, [(α,0),(β,0),(γ,0)])` of a
/// flat table, keyed by sorted 0-based `[α, β, γ]`.
pub fn flat_primaries(table: &FlatTauTable) -> BTreeMap<Vec<usize>, ExtScalar> {
    let mut out = BTreeMap::new();
    for a in 0..2 {
        for b in a..2 {
            for c in b..2 {
                let v = table.get(0, &[(a, 0), (b, 0), (c, 0)]);
                out.insert(vec![a, b, c], v);
            }
        }
    }
    out
}
