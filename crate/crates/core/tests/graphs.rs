mod common;

use std::collections::BTreeMap;

use common::brute_force_aut;
use proptest::prelude::*;
use thetakdv::curve::SpectralCurve;
use thetakdv::exact::{q, ExtScalar};
use thetakdv::graphs::graph_sum::givental_graph_sum;
use thetakdv::graphs::{enumerate, DecoratedGraph, StableGraph};
use thetakdv::recursion::{residue_pairing_of, Engine};
use thetakdv::tau::{assemble, Provenance, TauTable};

fn bessel_table() -> TauTable {
    let bessel = Engine::new(SpectralCurve::bessel()).unwrap();
    assemble(&bessel, 3, 5, Provenance::Bessel).unwrap()
}

#[test]
fn graph_sum_reproduces_recursion_on_bgw_a2() {
    let table = bessel_table();
    let curve = SpectralCurve::bgw_a2();
    let tr = Engine::new(curve.clone()).unwrap();
    for (g, n) in [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1)] {
        let sum = givental_graph_sum(&curve, &table, g, n).unwrap();
        assert_eq!(sum.coeffs, tr.correlator(g, n).unwrap().coeffs, "({g}, {n})");
    }
}

#[test]
fn genus_two_terms_under_the_residue_functional() {
    let table = bessel_table();
    let curve = SpectralCurve::bgw_a2();
    let tr = Engine::new(curve.clone()).unwrap();
    let analyzed = tr.curve();
    let root = ExtScalar::sqrt_minus3();
    let sum = givental_graph_sum(&curve, &table, 2, 1).unwrap();
    let mut values = BTreeMap::new();
    for t in &sum.terms {
        let v = &root * &residue_pairing_of(&analyzed, &t.coeffs, &[1]).unwrap();
        let shape = (t.graph.genera.clone(), t.graph.edges.len(), t.dilaton_leaves);
        values.insert(shape, v.to_rational().expect("rational"));
    }
    let expected = BTreeMap::from([
        ((vec![2], 0, 0), q(5, 1536)),
        ((vec![2], 0, 1), q(-15, 1536)),
        ((vec![1, 1], 1, 0), q(7, 2304)),
        ((vec![1], 1, 0), q(1, 288)),
    ]);
    assert_eq!(values, expected);
    let total = residue_pairing_of(&analyzed, &sum.coeffs, &[1]).unwrap();
    assert!(total.is_zero());
    let g11 = givental_graph_sum(&curve, &table, 1, 1).unwrap();
    let v = -&(&root * &residue_pairing_of(&analyzed, &g11.coeffs, &[1]).unwrap());
    assert_eq!(v, ExtScalar::frac(1, 4));
}

#[test]
fn enumeration_counts() {
    assert_eq!(enumerate(0, 4).unwrap().len(), 4);
    assert_eq!(enumerate(0, 5).unwrap().len(), 26);
    assert_eq!(enumerate(1, 2).unwrap().len(), 5);
    for (g, n) in [(1, 2), (2, 1), (2, 0), (0, 5)] {
        for (gr, aut) in enumerate(g, n).unwrap() {
            assert!(gr.is_stable());
            assert_eq!(gr.genus(), g);
            assert_eq!(aut, brute_force_aut(&gr), "{gr:?}");
        }
    }
}

fn small_graph() -> impl Strategy<Value = StableGraph> {
    (1usize..=3, 0usize..=2).prop_flat_map(|(nv, extra)| {
        let ne = nv - 1 + extra;
        (
            proptest::collection::vec(0u32..=2, nv),
            proptest::collection::vec((0..nv, 0..nv), ne),
            proptest::collection::vec(0..nv, 0..=2),
        )
            .prop_map(|(genera, edges, legs)| StableGraph::new(genera, edges, legs).unwrap())
            .prop_filter("connected", |g| g.is_connected())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn automorphisms_match_brute_force(g in small_graph()) {
        prop_assert_eq!(g.automorphisms(), brute_force_aut(&g));
        prop_assert_eq!(DecoratedGraph::plain(g.clone()).automorphisms(), brute_force_aut(&g));
    }

    #[test]
    fn canonical_form_is_invariant(g in small_graph(), seed in 0usize..24) {
        let nv = g.num_vertices();
        let mut perm: Vec<usize> = (0..nv).collect();
        let mut s = seed;
        for i in (1..nv).rev() {
            perm.swap(i, s % (i + 1));
            s /= i + 1;
        }
        let relabelled = StableGraph::new(
            (0..nv).map(|v| g.genera[perm.iter().position(|&p| p == v).unwrap()]).collect(),
            g.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect(),
            g.legs.iter().map(|&v| perm[v]).collect(),
        ).unwrap();
        prop_assert_eq!(g.canonical(), relabelled.canonical());
    }
}
