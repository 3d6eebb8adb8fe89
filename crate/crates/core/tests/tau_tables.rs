//! Tau-function tables from the Airy, Bessel and A2 curves against
//! independent recursions, plus the KdV and initial-condition checks.

mod common;

use common::{partitions, Family, Oracle};
use thetakdv::exact::{q, ExtScalar, Rational};
use thetakdv::recursion::Engine;
use thetakdv::tau::{
    assemble, assemble_flat, bgw_initial_condition_check, dilaton_homogeneity_check, flat_primaries, flat_transform,
    kdv_check, Provenance, SelectionRule, TauTable,
};

fn table(name: &str, g_max: u32, n_max: usize) -> TauTable {
    let e = Engine::shared(name).unwrap();
    let p = if name == "airy" {
        Provenance::Airy
    } else {
        Provenance::Bessel
    };
    assemble(&e, g_max, n_max, p).unwrap()
}

fn compare(t: &TauTable, family: Family, g_max: u32, n_max: usize) {
    let mut oracle = Oracle::new(family);
    for g in 0..=g_max {
        for n in 1..=n_max {
            if !t.is_complete(g, n) {
                continue;
            }
            let total = match family {
                Family::Kw => 3 * g as i64 - 3 + n as i64,
                Family::Bgw => g as i64 - 1,
            };
            if total < 0 {
                continue;
            }
            for ks in partitions(n, total as u32) {
                assert_eq!(t.get(g, &ks).unwrap(), oracle.value(g as i64, &ks), "({g}, {ks:?})");
            }
        }
    }
}

#[test]
fn bessel_matches_virasoro_recursion() {
    let t = table("bessel", 4, 6);
    assert_eq!(t.rule, SelectionRule::BrezinGrossWitten);
    compare(&t, Family::Bgw, 4, 6);
    assert_eq!(t.get(1, &[0]).unwrap(), q(1, 8));
    assert_eq!(t.get(2, &[1, 0]).unwrap(), q(9, 128));
    assert_eq!(t.get(3, &[1, 1]).unwrap(), q(63, 512));
}

#[test]
fn airy_matches_virasoro_recursion() {
    let t = table("airy", 3, 5);
    assert_eq!(t.rule, SelectionRule::KontsevichWitten);
    compare(&t, Family::Kw, 3, 5);
    assert_eq!(t.get(0, &[0, 0, 0]).unwrap(), Rational::from_integer(1.into()));
    assert_eq!(t.get(1, &[1]).unwrap(), q(1, 24));
}

#[test]
fn kdv_holds_and_detects_perturbations() {
    for name in ["bessel", "airy"] {
        let t = table(name, 3, 10);
        assert!(kdv_check(&t, 5, 2, 3).unwrap(), "{name}");
        let mut probes = 0;
        for ((g, ks), _) in t.entries() {
            let zeros = ks.iter().filter(|&&k| k == 0).count();
            let ones = ks.iter().filter(|&&k| k == 1).count();
            let small = ks.iter().all(|&k| k <= 2);
            if *g <= 3 && small && zeros >= 2 && ones >= 1 && ks.len() <= 8 {
                let mut bad = t.clone();
                bad.perturb(*g, ks, &q(1, 1000));
                assert!(!kdv_check(&bad, 5, 2, 3).unwrap(), "{name} ({g}, {ks:?})");
                probes += 1;
            }
        }
        assert!(probes > 0);
    }
}

#[test]
fn initial_condition_and_dilaton() {
    let b = table("bessel", 3, 6);
    assert!(bgw_initial_condition_check(&b, 6).unwrap());
    assert!(dilaton_homogeneity_check(&b, 3).unwrap());
    let a = table("airy", 2, 5);
    assert!(!bgw_initial_condition_check(&a, 5).unwrap());
    assert!(dilaton_homogeneity_check(&a, 2).unwrap());
    let mut bad = b.clone();
    bad.perturb(3, &[2, 0], &q(1, 7));
    assert!(!dilaton_homogeneity_check(&bad, 3).unwrap());
}

#[test]
fn a2_flat_basis() {
    let e = Engine::shared("a2").unwrap();
    let t = flat_transform(&e).unwrap();
    let two_root6 = ExtScalar::sqrt6().scale(&q(2, 1));
    let a = (&two_root6 * &ExtScalar::i()).inv().unwrap();
    let b = two_root6.inv().unwrap();
    assert_eq!(t, [[a.clone(), -&a], [b.clone(), b.clone()]]);
    let curve = e.curve();
    for k in 0..3 {
        for (i, row) in t.iter().enumerate() {
            let v = curve.aux_differential(i, k).unwrap();
            let xi = curve
                .flat_differential(0, k)
                .unwrap()
                .scale(&row[0])
                .add(&curve.flat_differential(1, k).unwrap().scale(&row[1]));
            assert_eq!(v, xi, "V^{i}_{k}");
        }
    }
}

#[test]
fn a2_flat_primaries() {
    let e = Engine::shared("a2").unwrap();
    let t = assemble_flat(&e, 0, 3).unwrap();
    let p = flat_primaries(&t);
    // The unit is ξ¹: only ⟨ξ¹ξ¹ξ²⟩ and ⟨ξ²ξ²ξ²⟩ survive, with equal value.
    let c = p[&vec![0, 0, 1]].clone();
    assert!(!c.is_zero());
    assert_eq!(p[&vec![1, 1, 1]], c);
    assert!(p[&vec![0, 0, 0]].is_zero());
    assert!(p[&vec![0, 1, 1]].is_zero());
}
