//! Tautological relations paired with Θ: κ removal, evaluation of decorated
//! graph sums, and solving a relation for one unknown intersection number.
//!
//! Values are polynomials in the genus-one parameter λ (with
//! `∫Θ_{1,1} = λ/24`); a table of rationals is the constant case.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::{DecoratedGraph, StableGraph};
use crate::error::{Error, Result};
use crate::exact::{fmt_rational, parse_rational, ExtScalar, Rational};
use crate::series::Poly;
use crate::tau::{SelectionRule, TauTable};

/// Source of `∫Θ_{g,n} ∏ψ^{k}` values.
pub trait ThetaOracle {
    /// The intersection number, zero for genus zero or when the dimension
    /// constraint `Σk = g - 1` fails.
    fn theta(&self, g: u32, ks: &[u32]) -> Result<Poly>;
}

impl ThetaOracle for TauTable {
    fn theta(&self, g: u32, ks: &[u32]) -> Result<Poly> {
        if g == 0 || !SelectionRule::BrezinGrossWitten.allows(g, ks) {
            return Ok(Poly::zero());
        }
        if self.rule != SelectionRule::BrezinGrossWitten {
            return Err(Error::Invalid("Θ values need a Θ-type table".into()));
        }
        let v = self.require(g, ks)?;
        Ok(Poly::constant(ExtScalar::from_rational(v)))
    }
}

/// Reduced table of λ-polynomial values: stored keys carry no zero index
/// except `(1, [0])`; other entries follow from the dilaton equation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LambdaTable {
    entries: BTreeMap<(u32, Vec<u32>), Poly>,
}

/// Strips zero indices while the remaining type stays stable, returning the
/// reduced key and the dilaton multiplier.
pub fn dilaton_reduce(g: u32, ks: &[u32]) -> (Vec<u32>, Rational) {
    let mut k: Vec<u32> = ks.to_vec();
    k.sort_unstable_by(|a, b| b.cmp(a));
    let mut factor = Rational::from_integer(1.into());
    while k.last() == Some(&0) && 2 * g as i64 - 2 + k.len() as i64 - 1 > 0 {
        k.pop();
        factor *= Rational::from_integer((2 * g as i64 - 2 + k.len() as i64).into());
    }
    k.sort_unstable();
    (k, factor)
}

impl LambdaTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Table seeded with `∫Θ_{1,1} = λ/24`.
    pub fn genus_one() -> Self {
        let mut t = Self::new();
        let lambda_over_24 = Poly::monomial(ExtScalar::frac(1, 24), 1);
        t.entries.insert((1, vec![0]), lambda_over_24);
        t
    }

    /// Stores a value under its reduced key.
    pub fn insert(&mut self, g: u32, ks: &[u32], value: Poly) -> Result<()> {
        let (key, factor) = dilaton_reduce(g, ks);
        let inv = ExtScalar::from_rational(factor).inv()?;
        self.entries.insert((g, key), value.scale(&inv));
        Ok(())
    }

    /// Stored reduced entries.
    pub fn reduced_entries(&self) -> impl Iterator<Item = (&(u32, Vec<u32>), &Poly)> {
        self.entries.iter()
    }

    /// Value with λ specialized.
    pub fn specialize(&self, g: u32, ks: &[u32], lambda: &Rational) -> Result<Rational> {
        let p = self.theta(g, ks)?;
        p.eval(&ExtScalar::from_rational(lambda.clone()))
            .to_rational()
            .ok_or_else(|| Error::Invalid("non-rational Θ value".into()))
    }
}

impl ThetaOracle for LambdaTable {
    fn theta(&self, g: u32, ks: &[u32]) -> Result<Poly> {
        if g == 0 || !SelectionRule::BrezinGrossWitten.allows(g, ks) {
            return Ok(Poly::zero());
        }
        let (key, factor) = dilaton_reduce(g, ks);
        let v = self
            .entries
            .get(&(g, key.clone()))
            .ok_or_else(|| Error::MissingEntry(format!("Θ entry ({g}, {key:?})")))?;
        Ok(v.scale(&ExtScalar::from_rational(factor)))
    }
}

/// Oracle answering one reduced key with a trial value.
struct WithUnknown<'a> {
    base: &'a LambdaTable,
    key: (u32, Vec<u32>),
    value: Poly,
}

impl ThetaOracle for WithUnknown<'_> {
    fn theta(&self, g: u32, ks: &[u32]) -> Result<Poly> {
        if g == 0 || !SelectionRule::BrezinGrossWitten.allows(g, ks) {
            return Ok(Poly::zero());
        }
        let (key, factor) = dilaton_reduce(g, ks);
        if (g, key.clone()) == self.key {
            return Ok(self.value.scale(&ExtScalar::from_rational(factor)));
        }
        self.base.theta(g, ks)
    }
}

/// Set partitions of `0..n` as lists of blocks.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![Vec::new()];
    for i in 0..n {
        let mut next = Vec::new();
        for p in out {
            for b in 0..p.len() {
                let mut q: Vec<Vec<usize>> = p.clone();
                q[b].push(i);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![i]);
            next.push(q);
        }
        out = next;
    }
    out
}

/// `∫Θ_{g,n} ∏ψ_i^{k_i} ∏κ_{ℓ_j}` with the κ-monomial written in the basis
/// `R_m = π_*(∏ψ^{m_j+1})` by Möbius inversion over set partitions:
/// `κ_{ℓ_1}⋯κ_{ℓ_N} = Σ_P ∏_B (-1)^{|B|-1} R_{(Σ_{j∈B} ℓ_j)_B}`.
pub fn kappa_to_psi(g: u32, psi: &[u32], kappa: &[u32], oracle: &dyn ThetaOracle) -> Result<Poly> {
    if g == 0 {
        return Ok(Poly::zero());
    }
    let mut total = Poly::zero();
    for p in set_partitions(kappa.len()) {
        let mut ks = psi.to_vec();
        let mut sign = 1i64;
        for block in &p {
            ks.push(block.iter().map(|&j| kappa[j]).sum());
            if block.len() % 2 == 0 {
                sign = -sign;
            }
        }
        let v = oracle.theta(g, &ks)?;
        total = total.add(&v.scale(&ExtScalar::from_int(sign)));
    }
    Ok(total)
}

/// One decorated graph with its coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationTerm {
    pub graph: DecoratedGraph,
    pub coeff: Rational,
    /// Free-form tag such as `"lhs"` or `"boundary"`.
    pub role: Option<String>,
}

/// `0 = Σ coeff · [Γ, ω]` on `M̄_{g,n}`, optionally paired with Θ pulled
/// back along the map forgetting one leg.
#[derive(Clone, Debug, PartialEq)]
pub struct TautRelation {
    pub name: String,
    pub g: u32,
    pub n: usize,
    /// 1-based leg forgotten by the pull-back, if any.
    pub forgotten_leg: Option<usize>,
    pub terms: Vec<RelationTerm>,
}

fn as_u32_list(v: Option<&Value>, what: &str) -> Result<Vec<u32>> {
    match v {
        None => Ok(Vec::new()),
        Some(Value::Array(a)) => a
            .iter()
            .map(|x| {
                x.as_u64()
                    .map(|y| y as u32)
                    .ok_or_else(|| Error::Parse(format!("{what}: expected integers")))
            })
            .collect(),
        Some(_) => Err(Error::Parse(format!("{what}: expected a list"))),
    }
}

impl RelationTerm {
    fn from_json(v: &Value, n: usize) -> Result<Self> {
        let verts = v["vertices"]
            .as_array()
            .ok_or_else(|| Error::Parse("term without vertices".into()))?;
        let genera: Vec<u32> = verts
            .iter()
            .map(|x| {
                x["genus"]
                    .as_u64()
                    .map(|g| g as u32)
                    .ok_or_else(|| Error::Parse("vertex without genus".into()))
            })
            .collect::<Result<_>>()?;
        let ends: Vec<Vec<u32>> = verts
            .iter()
            .map(|x| as_u32_list(x.get("psi_on_ends"), "psi_on_ends"))
            .collect::<Result<_>>()?;
        let kappa: Vec<Vec<u32>> = verts
            .iter()
            .map(|x| as_u32_list(x.get("kappa"), "kappa"))
            .collect::<Result<_>>()?;
        let edges: Vec<(usize, usize)> = match v.get("edges") {
            None => Vec::new(),
            Some(Value::Array(a)) => a
                .iter()
                .map(|e| {
                    let pair = e.as_array().filter(|p| p.len() == 2);
                    let pair = pair.ok_or_else(|| Error::Parse("edge must be a pair".into()))?;
                    let a = pair[0].as_u64().ok_or_else(|| Error::Parse("edge vertex".into()))?;
                    let b = pair[1].as_u64().ok_or_else(|| Error::Parse("edge vertex".into()))?;
                    Ok((a as usize, b as usize))
                })
                .collect::<Result<_>>()?,
            Some(_) => return Err(Error::Parse("edges must be a list".into())),
        };
        let mut legs = vec![usize::MAX; n];
        let mut leg_psi = vec![0u32; n];
        if let Some(map) = v.get("legs").and_then(Value::as_object) {
            for (k, val) in map {
                let j: usize = k.parse().map_err(|_| Error::Parse(format!("leg label {k}")))?;
                if j == 0 || j > n {
                    return Err(Error::Parse(format!("leg {j} outside 1..={n}")));
                }
                let (vert, psi) = match val {
                    Value::Number(x) => (x.as_u64(), 0),
                    Value::Object(o) => (
                        o.get("vertex").and_then(Value::as_u64),
                        o.get("psi").and_then(Value::as_u64).unwrap_or(0),
                    ),
                    _ => (None, 0),
                };
                legs[j - 1] = vert.ok_or_else(|| Error::Parse(format!("leg {j} vertex")))? as usize;
                leg_psi[j - 1] = psi as u32;
            }
        }
        if legs.contains(&usize::MAX) {
            return Err(Error::Parse("every leg must be placed".into()));
        }
        let graph = StableGraph::new(genera, edges, legs)?;
        // Distribute per-vertex end exponents onto edges.
        let mut cursor = vec![0usize; graph.num_vertices()];
        let mut take = |v: usize| -> Result<u32> {
            let list = &ends[v];
            let x = if list.is_empty() {
                0
            } else {
                *list
                    .get(cursor[v])
                    .ok_or_else(|| Error::Parse(format!("vertex {v}: too few psi_on_ends")))?
            };
            cursor[v] += 1;
            Ok(x)
        };
        let mut end_psi = Vec::new();
        for &(a, b) in &graph.edges {
            let p = take(a)?;
            let q = take(b)?;
            end_psi.push((p, q));
        }
        for (v, list) in ends.iter().enumerate() {
            if !list.is_empty() && list.len() != cursor[v] {
                return Err(Error::Parse(format!("vertex {v}: psi_on_ends has the wrong length")));
            }
        }
        let coeff = parse_rational(
            v["coeff"]
                .as_str()
                .ok_or_else(|| Error::Parse("coeff must be a string".into()))?,
        )?;
        Ok(Self {
            graph: DecoratedGraph {
                graph,
                end_psi,
                leg_psi,
                kappa,
            },
            coeff,
            role: v.get("role").and_then(Value::as_str).map(str::to_owned),
        })
    }

    fn to_json(&self) -> Value {
        let g = &self.graph.graph;
        let vertices: Vec<Value> = (0..g.num_vertices())
            .map(|v| {
                let mut ends = Vec::new();
                for (e, &(a, b)) in g.edges.iter().enumerate() {
                    if a == v {
                        ends.push(self.graph.end_psi[e].0);
                    }
                    if b == v {
                        ends.push(self.graph.end_psi[e].1);
                    }
                }
                json!({"genus": g.genera[v], "psi_on_ends": ends, "kappa": self.graph.kappa[v]})
            })
            .collect();
        let mut legs = Map::new();
        for (j, &v) in g.legs.iter().enumerate() {
            legs.insert((j + 1).to_string(), json!({"vertex": v, "psi": self.graph.leg_psi[j]}));
        }
        let mut out = json!({
            "vertices": vertices,
            "edges": g.edges.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
            "legs": legs,
            "coeff": fmt_rational(&self.coeff),
        });
        if let Some(r) = &self.role {
            out["role"] = json!(r);
        }
        out
    }
}

impl TautRelation {
    pub fn from_json(v: &Value) -> Result<Self> {
        let g = v["g"].as_u64().ok_or_else(|| Error::Parse("relation needs g".into()))? as u32;
        let n = v["n"].as_u64().ok_or_else(|| Error::Parse("relation needs n".into()))? as usize;
        let terms = v["terms"]
            .as_array()
            .ok_or_else(|| Error::Parse("relation needs terms".into()))?
            .iter()
            .map(|t| RelationTerm::from_json(t, n))
            .collect::<Result<Vec<_>>>()?;
        let forgotten_leg = v.get("forgotten_leg").and_then(Value::as_u64).map(|x| x as usize);
        if let Some(f) = forgotten_leg {
            if f == 0 || f > n {
                return Err(Error::Parse(format!("forgotten leg {f} outside 1..={n}")));
            }
        }
        for t in &terms {
            if t.graph.graph.genus() != g {
                return Err(Error::Relation(format!(
                    "term of genus {} in a genus-{g} relation",
                    t.graph.graph.genus()
                )));
            }
        }
        Ok(Self {
            name: v.get("name").and_then(Value::as_str).unwrap_or("relation").to_owned(),
            g,
            n,
            forgotten_leg,
            terms,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&v)
    }

    pub fn to_json(&self) -> Value {
        let mut out = json!({
            "name": self.name,
            "g": self.g,
            "n": self.n,
            "terms": self.terms.iter().map(RelationTerm::to_json).collect::<Vec<_>>(),
        });
        if let Some(f) = self.forgotten_leg {
            out["forgotten_leg"] = json!(f);
        }
        out
    }

    /// Multiplies every coefficient by `c`.
    pub fn scaled(&self, c: &Rational) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= c;
        }
        out
    }

    /// Concatenation of the two term lists.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if (self.g, self.n, self.forgotten_leg) != (other.g, other.n, other.forgotten_leg) {
            return Err(Error::Relation("relations live on different spaces".into()));
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }
}

/// Θ-integral over one vertex.  At the vertex carrying the forgotten leg the
/// class is pulled back: a trivalent genus-zero vertex contracts (value 1),
/// a ψ-power `b ≥ 1` on the leg becomes `Θ` with exponent `b - 1`, and
/// `b = 0` applies the string equation to the other exponents.
fn vertex_value(
    genus: u32,
    exps: &[u32],
    kappa: &[u32],
    forgotten: Option<usize>,
    oracle: &dyn ThetaOracle,
) -> Result<Poly> {
    let Some(pos) = forgotten else {
        return kappa_to_psi(genus, exps, kappa, oracle);
    };
    if !kappa.is_empty() {
        return Err(Error::Relation("κ at the vertex of a forgotten leg".into()));
    }
    let b = exps[pos];
    let mut rest: Vec<u32> = exps.to_vec();
    rest.remove(pos);
    if genus == 0 && rest.len() == 2 {
        return Ok(if b == 0 && rest.iter().all(|&x| x == 0) {
            Poly::one()
        } else {
            Poly::zero()
        });
    }
    if b >= 1 {
        let mut ks = rest;
        ks.push(b - 1);
        return oracle.theta(genus, &ks);
    }
    let mut total = Poly::zero();
    for i in 0..rest.len() {
        if rest[i] == 0 {
            continue;
        }
        let mut ks = rest.clone();
        ks[i] -= 1;
        total = total.add(&oracle.theta(genus, &ks)?);
    }
    Ok(total)
}

/// Value of one term without its coefficient: `∏_v ∫Θ·(decorations) / |Aut|`.
pub fn evaluate_term(term: &RelationTerm, forgotten_leg: Option<usize>, oracle: &dyn ThetaOracle) -> Result<Poly> {
    let d = &term.graph;
    let g = &d.graph;
    let mut prod = Poly::one();
    for v in 0..g.num_vertices() {
        let exps = d.vertex_exponents(v);
        // Position of the forgotten leg inside `exps` (legs follow edge ends).
        let forgotten = forgotten_leg.filter(|&f| g.legs[f - 1] == v).map(|f| {
            let ends = exps.len() - g.legs.iter().filter(|&&l| l == v).count();
            ends + g.legs[..f - 1].iter().filter(|&&l| l == v).count()
        });
        let val = vertex_value(g.genera[v], &exps, &d.kappa[v], forgotten, oracle)?;
        if val.is_zero() {
            return Ok(Poly::zero());
        }
        prod = prod.mul(&val);
    }
    let aut = ExtScalar::from_int(d.automorphisms() as i64);
    Ok(prod.scale(&aut.inv()?))
}

/// `Σ coeff · value` over the terms, optionally restricted to one role.
pub fn evaluate_terms(rel: &TautRelation, role: Option<&str>, oracle: &dyn ThetaOracle) -> Result<Poly> {
    let mut total = Poly::zero();
    for t in &rel.terms {
        if role.is_some() && t.role.as_deref() != role {
            continue;
        }
        let v = evaluate_term(t, rel.forgotten_leg, oracle)?;
        total = total.add(&v.scale(&ExtScalar::from_rational(t.coeff.clone())));
    }
    Ok(total)
}

/// Full pairing of the relation with Θ (zero for a valid relation).
pub fn evaluate_relation(rel: &TautRelation, oracle: &dyn ThetaOracle) -> Result<Poly> {
    evaluate_terms(rel, None, oracle)
}

/// Solves `evaluate_relation = 0` for the single unknown `∫Θ_{g} ∏ψ^{ks}`
/// and stores it in `table`.
pub fn solve_theta(rel: &TautRelation, g: u32, ks: &[u32], table: &mut LambdaTable) -> Result<Poly> {
    let (key, factor) = dilaton_reduce(g, ks);
    let trial = |x: i64| -> Result<Poly> {
        let oracle = WithUnknown {
            base: table,
            key: (g, key.clone()),
            value: Poly::constant(ExtScalar::from_int(x)),
        };
        evaluate_relation(rel, &oracle)
    };
    let a = trial(0)?;
    let b = trial(1)?;
    let c = trial(2)?;
    let slope = b.sub(&a);
    if c.sub(&a) != slope.scale(&ExtScalar::from_int(2)) {
        return Err(Error::Relation("relation is not linear in the unknown".into()));
    }
    if slope.is_zero() {
        return Err(Error::Relation(format!(
            "unknown ({g}, {ks:?}) has zero coefficient in {}",
            rel.name
        )));
    }
    if slope.degree() != Some(0) {
        return Err(Error::Relation("unknown has a λ-dependent coefficient".into()));
    }
    let reduced = a.neg().scale(&slope.coeff(0).inv()?);
    table.insert(g, &key, reduced.clone())?;
    Ok(reduced.scale(&ExtScalar::from_rational(factor)))
}

/// Relation fixtures shipped with the crate.
pub mod fixtures {
    use super::TautRelation;
    use crate::error::Result;

    /// κ₁ in terms of boundary divisors on M̄₂.
    pub const MUMFORD_GENUS_TWO: &str = include_str!("../../data/relations/mumford_genus2.json");
    /// ψ₁³ as a boundary sum on M̄_{3,1}, paired with Θ pulled back from M̄₃.
    pub const GENUS_THREE_PSI_CUBED: &str = include_str!("../../data/relations/genus3_psi_cubed.json");
    /// ψ₁²ψ₂ - ψ₁ψ₂² as a boundary sum on M̄_{3,2}, paired with Θ pulled
    /// back from M̄_{3,1}.
    pub const GENUS_THREE_MIXED: &str = include_str!("../../data/relations/genus3_mixed.json");
    /// λ₁ as a combination of boundary divisors on M̄₂.
    pub const LAMBDA_ONE_GENUS_TWO: &str = include_str!("../../data/relations/lambda1_genus2.json");

    pub fn mumford() -> Result<TautRelation> {
        TautRelation::parse(MUMFORD_GENUS_TWO)
    }

    pub fn genus_three_psi_cubed() -> Result<TautRelation> {
        TautRelation::parse(GENUS_THREE_PSI_CUBED)
    }

    pub fn genus_three_mixed() -> Result<TautRelation> {
        TautRelation::parse(GENUS_THREE_MIXED)
    }

    pub fn lambda_one() -> Result<TautRelation> {
        TautRelation::parse(LAMBDA_ONE_GENUS_TWO)
    }
}
