//! Givental graph sum for curves whose critical points are all of Bessel
//! type: stable graphs with Θ-type vertex tables, edges weighted by the
//! R-matrix propagator, legs by `R⁻¹`, and dilaton leaves by the
//! translation `T₀ = 𝟙 - R⁻¹𝟙`.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::{enumerate, StableGraph};
use crate::curve::SpectralCurve;
use crate::error::{Error, Result};
use crate::exact::{factorial, ExtScalar, Rational};
use crate::givental::{
    edge_weight, laplace_b_inverse, laplace_dy, translation, EdgeWeight, MatrixSeries, TranslationSeries,
};
use crate::recursion::{Key, Label};
use crate::tau::{SelectionRule, TauTable};

/// Contribution of one stable graph with a fixed number of dilaton leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphTerm {
    pub graph: StableGraph,
    pub automorphisms: u64,
    pub dilaton_leaves: usize,
    /// Coefficients in the V-basis keyed by sorted labels.
    pub coeffs: BTreeMap<Key, ExtScalar>,
}

/// Total V-basis coefficients of `ω_{g,n}` together with the per-graph terms.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSum {
    pub g: u32,
    pub n: usize,
    pub coeffs: BTreeMap<Key, ExtScalar>,
    pub terms: Vec<GraphTerm>,
}

/// Givental data of a curve: `M = R⁻¹`, the unit, the propagator and `T₀`.
#[derive(Clone, Debug)]
pub struct GiventalData {
    pub m: MatrixSeries,
    pub r: MatrixSeries,
    pub unit: Vec<ExtScalar>,
    pub edge: EdgeWeight,
    pub t0: TranslationSeries,
}

impl GiventalData {
    /// Computes the data through `z^order`.
    pub fn new(curve: &SpectralCurve, order: usize) -> Result<Self> {
        let m = laplace_b_inverse(curve, order)?;
        let r = m.inverse()?;
        let dy = laplace_dy(curve, order)?;
        let edge = edge_weight(&r, order)?;
        let t0 = translation(&m, &dy.unit);
        Ok(Self {
            m,
            r,
            unit: dy.unit,
            edge,
            t0,
        })
    }

    /// `[z^e] M[c][i]`: weight of a leg of colour `c` read in frame `i`.
    fn leg_weight(&self, e: usize, c: usize, i: usize) -> ExtScalar {
        if e > self.m.order() {
            return ExtScalar::zero();
        }
        self.m.coeff(e).get(c, i).clone()
    }
}

/// Half-edge slot of a vertex.
#[derive(Clone, Copy, Debug)]
enum Slot {
    /// Edge index and end (0 for the first stored vertex).
    End(usize, usize),
    Leg(usize),
}

/// Local decoration of one vertex: exponents per slot and of the dilaton
/// leaves.
#[derive(Clone, Debug)]
struct LocalChoice {
    exps: Vec<u32>,
    dilaton: Vec<u32>,
}

fn compositions(total: u32, parts: usize, min: u32, out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>) {
    if parts == 0 {
        if total == 0 {
            out.push(cur.clone());
        }
        return;
    }
    let lo = min;
    if total < lo * parts as u32 {
        return;
    }
    for x in lo..=total - lo * (parts as u32 - 1) {
        cur.push(x);
        compositions(total - x, parts - 1, min, out, cur);
        cur.pop();
    }
}

fn local_choices(genus: u32, slots: usize) -> Vec<LocalChoice> {
    let budget = genus.saturating_sub(1);
    let mut out = Vec::new();
    for m in 0..=budget as usize {
        for dil_total in m as u32..=budget {
            let mut dils = Vec::new();
            compositions(dil_total, m, 1, &mut dils, &mut Vec::new());
            let mut rest = Vec::new();
            compositions(budget - dil_total, slots, 0, &mut rest, &mut Vec::new());
            for d in &dils {
                for r in &rest {
                    out.push(LocalChoice {
                        exps: r.clone(),
                        dilaton: d.clone(),
                    });
                }
            }
        }
    }
    out
}

fn vertex_table_value(table: &TauTable, g: u32, exps: &[u32]) -> Result<Rational> {
    let mut ks = exps.to_vec();
    ks.sort_unstable();
    if !SelectionRule::BrezinGrossWitten.allows(g, &ks) {
        return Ok(Rational::zero());
    }
    table.require(g, &ks)
}

/// Graph sum for `ω_{g,n}` with vertex values from a Θ-type table.
///
/// A vertex of genus `g_v` and colour `c` with `n_v` half-edges (dilaton
/// leaves included) weighs `u_c^{2-2g_v-n_v} <∏τ>_{g_v}`; an edge with
/// exponents `(d_a, d_b)` weighs `[z^{d_a} w^{d_b}] E(w, z)[c_a][c_b]`; a leg
/// of exponent `d` contributes `[z^{d-k}] M[c][i]` to the label `(i, k)`; a
/// dilaton leaf of exponent `d` weighs `[z^d] T₀[c]`.
pub fn givental_graph_sum(curve: &SpectralCurve, table: &TauTable, g: u32, n: usize) -> Result<GraphSum> {
    if table.rule != SelectionRule::BrezinGrossWitten {
        return Err(Error::Invalid("graph sum needs a Θ-type vertex table".into()));
    }
    if n == 0 || 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::Unstable { g, n });
    }
    let data = GiventalData::new(curve, g as usize + 1)?;
    let points = data.unit.len();
    let mut terms = Vec::new();
    let mut total: BTreeMap<Key, ExtScalar> = BTreeMap::new();
    for (graph, aut) in enumerate(g, n)? {
        if graph.genera.contains(&0) {
            continue;
        }
        let nv = graph.num_vertices();
        let slots: Vec<Vec<Slot>> = (0..nv)
            .map(|v| {
                let mut s = Vec::new();
                for (e, &(a, b)) in graph.edges.iter().enumerate() {
                    if a == v {
                        s.push(Slot::End(e, 0));
                    }
                    if b == v {
                        s.push(Slot::End(e, 1));
                    }
                }
                for (j, &l) in graph.legs.iter().enumerate() {
                    if l == v {
                        s.push(Slot::Leg(j));
                    }
                }
                s
            })
            .collect();
        let choices: Vec<Vec<LocalChoice>> = (0..nv)
            .map(|v| local_choices(graph.genera[v], slots[v].len()))
            .collect();
        let mut by_dilaton: BTreeMap<usize, BTreeMap<Vec<Label>, ExtScalar>> = BTreeMap::new();
        let aut_inv = ExtScalar::from_int(aut as i64).inv()?;
        let colourings = points.pow(nv as u32);
        for code in 0..colourings {
            let colour: Vec<usize> = (0..nv).map(|v| (code / points.pow(v as u32)) % points).collect();
            let mut pick = vec![0usize; nv];
            'outer: loop {
                let contribution = evaluate_choice(&graph, &slots, &choices, &pick, &colour, &data, table, n, points)?;
                if let Some((dil, map)) = contribution {
                    let acc = by_dilaton.entry(dil).or_default();
                    for (k, v) in map {
                        let v = &v * &aut_inv;
                        let slot = acc.entry(k).or_insert_with(ExtScalar::zero);
                        *slot += &v;
                    }
                }
                for v in 0..nv {
                    pick[v] += 1;
                    if pick[v] < choices[v].len() {
                        continue 'outer;
                    }
                    pick[v] = 0;
                }
                break;
            }
        }
        for (dil, map) in by_dilaton {
            let coeffs = sorted_coefficients(map)?;
            if coeffs.is_empty() {
                continue;
            }
            for (k, v) in &coeffs {
                let slot = total.entry(k.clone()).or_insert_with(ExtScalar::zero);
                *slot += v;
            }
            terms.push(GraphTerm {
                graph: graph.clone(),
                automorphisms: aut,
                dilaton_leaves: dil,
                coeffs,
            });
        }
    }
    total.retain(|_, v| !v.is_zero());
    Ok(GraphSum {
        g,
        n,
        coeffs: total,
        terms,
    })
}

/// Restricts an ordered-label map to sorted keys, checking symmetry.
fn sorted_coefficients(map: BTreeMap<Vec<Label>, ExtScalar>) -> Result<BTreeMap<Key, ExtScalar>> {
    let mut out = BTreeMap::new();
    for (k, v) in &map {
        let mut s = k.clone();
        s.sort_unstable();
        let other = map.get(&s).cloned().unwrap_or_else(ExtScalar::zero);
        if other != *v {
            return Err(Error::Invalid("graph sum is not symmetric in the legs".into()));
        }
        if s == *k && !v.is_zero() {
            out.insert(s, v.clone());
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn evaluate_choice(
    graph: &StableGraph,
    slots: &[Vec<Slot>],
    choices: &[Vec<LocalChoice>],
    pick: &[usize],
    colour: &[usize],
    data: &GiventalData,
    table: &TauTable,
    n: usize,
    points: usize,
) -> Result<Option<(usize, BTreeMap<Vec<Label>, ExtScalar>)>> {
    let nv = graph.num_vertices();
    let mut scalar = ExtScalar::one();
    let mut end_exp = vec![[0u32; 2]; graph.edges.len()];
    let mut leg_exp = vec![0u32; n];
    let mut dilaton_count = 0;
    for v in 0..nv {
        let ch = &choices[v][pick[v]];
        let c = colour[v];
        let gv = graph.genera[v];
        let mut all: Vec<u32> = ch.exps.clone();
        all.extend(&ch.dilaton);
        let value = vertex_table_value(table, gv, &all)?;
        if value.is_zero() {
            return Ok(None);
        }
        let nvl = all.len() as i64;
        let power = 2 - 2 * gv as i64 - nvl;
        scalar = &scalar * &data.unit[c].pow(power)?;
        scalar = scalar.scale(&value);
        for &d in &ch.dilaton {
            scalar = &scalar * &data.t0.coeff(d as i64)[c];
        }
        if !ch.dilaton.is_empty() {
            let m_fact = Rational::from_integer(factorial(ch.dilaton.len() as u64));
            scalar = scalar.scale(&m_fact.recip());
        }
        dilaton_count += ch.dilaton.len();
        for (s, &d) in slots[v].iter().zip(&ch.exps) {
            match *s {
                Slot::End(e, side) => end_exp[e][side] = d,
                Slot::Leg(j) => leg_exp[j] = d,
            }
        }
        if scalar.is_zero() {
            return Ok(None);
        }
    }
    for (e, &(a, b)) in graph.edges.iter().enumerate() {
        let (za, wb) = (end_exp[e][0], end_exp[e][1]);
        let Some(mat) = data.edge.get(wb as usize, za as usize) else {
            return Err(Error::Truncation {
                have: data.edge.order as i64,
                need: (za + wb + 1) as i64,
                context: "edge propagator".into(),
            });
        };
        scalar = &scalar * mat.get(colour[a], colour[b]);
        if scalar.is_zero() {
            return Ok(None);
        }
    }
    // Tensor product of the leg vectors.
    let mut acc: BTreeMap<Vec<Label>, ExtScalar> = BTreeMap::new();
    acc.insert(Vec::new(), scalar);
    for (j, &v) in graph.legs.iter().enumerate() {
        let d = leg_exp[j] as usize;
        let c = colour[v];
        let mut next = BTreeMap::new();
        for (key, val) in &acc {
            for i in 0..points {
                for k in 0..=d {
                    let w = data.leg_weight(d - k, c, i);
                    if w.is_zero() {
                        continue;
                    }
                    let mut nk = key.clone();
                    nk.push((i, k));
                    next.insert(nk, val * &w);
                }
            }
        }
        acc = next;
    }
    Ok(Some((dilaton_count, acc)))
}
