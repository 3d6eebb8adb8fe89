//! Acceptance harness: one PASS/FAIL line per criterion, all comparisons
//! exact.  Exits nonzero when any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use common::{brute_force_aut, partitions, Family, Oracle};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use thetakdv::curve::SpectralCurve;
use thetakdv::exact::{q, ExtScalar, Rational};
use thetakdv::givental::{laplace_b, ode_check, twisted_loop_check, FrobeniusPointData, Matrix};
use thetakdv::graphs::graph_sum::givental_graph_sum;
use thetakdv::graphs::relations::{fixtures, solve_theta, LambdaTable};
use thetakdv::graphs::{enumerate, DecoratedGraph, StableGraph};
use thetakdv::recursion::{enumerate_keys, residue_pairing_of, Engine, Label};
use thetakdv::series::{Poly, RatFunc};
use thetakdv::tau::{
    assemble, bgw_initial_condition_check, dilaton_homogeneity_check, kdv_check, Provenance, SelectionRule, TauTable,
};
use thetakdv::theta::{Pipeline, ThetaQuery, ThetaService};

type Outcome = Result<Vec<(String, bool)>, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn table(curve: SpectralCurve, g_max: u32, n_max: usize, p: Provenance) -> Result<TauTable, String> {
    let e = Engine::new(curve).map_err(err)?;
    assemble(&e, g_max, n_max, p).map_err(err)
}

fn matches_oracle(t: &TauTable, family: Family, g_max: u32, n_max: usize) -> bool {
    let mut oracle = Oracle::new(family);
    for g in 0..=g_max {
        for n in 1..=n_max {
            let total = match family {
                Family::Kw => 3 * g as i64 - 3 + n as i64,
                Family::Bgw => g as i64 - 1,
            };
            if total < 0 || !t.is_complete(g, n) {
                continue;
            }
            for ks in partitions(n, total as u32) {
                if t.get(g, &ks) != Some(oracle.value(g as i64, &ks)) {
                    return false;
                }
            }
        }
    }
    true
}

fn criterion_1() -> Outcome {
    let t = table(SpectralCurve::bessel(), 3, 4, Provenance::Bessel)?;
    let service = ThetaService::new(3, true).map_err(err)?;
    let expected: [(u32, &[u32], Rational); 6] = [
        (1, &[0], q(1, 8)),
        (1, &[0, 0], q(1, 8)),
        (2, &[1], q(3, 128)),
        (2, &[1, 0], q(9, 128)),
        (3, &[2], q(15, 1024)),
        (3, &[1, 1], q(63, 512)),
    ];
    let mut out = Vec::new();
    for (g, ks, v) in expected {
        let table_ok = t.get(g, ks) == Some(v.clone());
        let query = ThetaQuery::new(g, ks.to_vec(), Vec::new()).map_err(err)?;
        let service_ok = service.theta(&query, Pipeline::Bessel).map_err(err)?.value == v;
        out.push((format!("({g}, {ks:?}) = {v}"), table_ok && service_ok));
    }
    // The free-energy coefficient of t1²/2! is half the intersection number.
    let coeff = t.get(3, &[1, 1]).unwrap_or_default() / Rational::from_integer(2.into());
    out.push(("t1² coefficient 63/1024".into(), coeff == q(63, 1024)));
    out.push((
        "Virasoro oracle g <= 3, n <= 4".into(),
        matches_oracle(&t, Family::Bgw, 3, 4),
    ));
    Ok(out)
}

fn criterion_2() -> Outcome {
    let t = table(SpectralCurve::airy(), 3, 4, Provenance::Airy)?;
    let rule = t.rule == SelectionRule::KontsevichWitten
        && t.entries().all(|((g, ks), v)| {
            let s: u32 = ks.iter().sum();
            v == &Rational::default() || s as i64 == 3 * *g as i64 - 3 + ks.len() as i64
        });
    Ok(vec![
        ("(0, [0,0,0]) = 1".into(), t.get(0, &[0, 0, 0]) == Some(q(1, 1))),
        ("(1, [1]) = 1/24".into(), t.get(1, &[1]) == Some(q(1, 24))),
        ("selection rule g <= 3, n <= 4".into(), rule),
        (
            "Virasoro oracle g <= 3, n <= 4".into(),
            matches_oracle(&t, Family::Kw, 3, 4),
        ),
    ])
}

fn criterion_3() -> Outcome {
    let mut out = Vec::new();
    for (curve, p) in [
        (SpectralCurve::airy(), Provenance::Airy),
        (SpectralCurve::bessel(), Provenance::Bessel),
    ] {
        let name = curve.name.clone();
        let t = table(curve, 3, 10, p)?;
        out.push((format!("KdV on {name}"), kdv_check(&t, 5, 2, 3).map_err(err)?));
        let mut detected = true;
        let mut probes = 0;
        for ((g, ks), _) in t.entries() {
            let zeros = ks.iter().filter(|&&k| k == 0).count();
            let ones = ks.iter().filter(|&&k| k == 1).count();
            if *g <= 3 && ks.iter().all(|&k| k <= 2) && zeros >= 2 && ones >= 1 && ks.len() <= 8 {
                let mut bad = t.clone();
                bad.perturb(*g, ks, &q(1, 1000));
                detected &= !kdv_check(&bad, 5, 2, 3).map_err(err)?;
                probes += 1;
            }
        }
        out.push((
            format!("{probes} perturbations detected on {name}"),
            detected && probes > 0,
        ));
    }
    Ok(out)
}

fn criterion_4() -> Outcome {
    let t = table(SpectralCurve::bessel(), 3, 6, Provenance::Bessel)?;
    let mut bad = t.clone();
    bad.perturb(3, &[2, 0], &q(1, 7));
    Ok(vec![
        (
            "dilaton g <= 3, n <= 6".into(),
            dilaton_homogeneity_check(&t, 3).map_err(err)?,
        ),
        (
            "initial condition (n-1)!/8".into(),
            bgw_initial_condition_check(&t, 6).map_err(err)?,
        ),
        (
            "perturbation detected".into(),
            !dilaton_homogeneity_check(&bad, 3).map_err(err)?,
        ),
    ])
}

fn criterion_5() -> Outcome {
    let closed = RatFunc::new(
        Poly::from_ints(&[0, 2, 0, 14, 0, 11]).scale(&ExtScalar::frac(35, 243)),
        Poly::from_ints(&[-1, 0, 1]).pow(10),
    )
    .map_err(err)?;
    let unit_y = SpectralCurve::new("a2-unit-y", SpectralCurve::a2().x, RatFunc::from_poly(Poly::var()));
    let plain = Engine::new(unit_y).map_err(err)?.rational_form_n1(2).map_err(err)?;
    let e = Engine::new(SpectralCurve::a2()).map_err(err)?;
    let scaled = e.rational_form_n1(2).map_err(err)?;
    let lambda_cubed = ExtScalar::sqrt_minus3().pow(3).map_err(err)?.inv().map_err(err)?;
    let mut residues = true;
    for m in 0..=13 {
        residues &= e.residue_pairing(2, 1, &[m]).map_err(err)?.is_zero();
    }
    Ok(vec![
        ("closed form with y = z".into(), plain == closed),
        (
            "λ^-3 rescaling on y = √-3 z".into(),
            scaled == closed.scale(&lambda_cubed),
        ),
        ("Res z^m ω_{2,1} = 0, m = 0..13".into(), residues),
    ])
}

fn criterion_6() -> Outcome {
    let i = ExtScalar::i();
    let m = |rows: Vec<Vec<ExtScalar>>, c: ExtScalar| Matrix::from_rows(rows).map(|x| x.scale(&c));
    let six_i = i.scale(&q(6, 1));
    let twelve_i = i.scale(&q(12, 1));
    let one = ExtScalar::from_int(1);
    let r1 = m(
        vec![vec![-&one, -&six_i], vec![-&six_i, one.clone()]],
        ExtScalar::frac(1, 144),
    )
    .map_err(err)?;
    let r2 = m(
        vec![vec![-&one, twelve_i.clone()], vec![-&twelve_i, -&one]],
        ExtScalar::frac(35, 41472),
    )
    .map_err(err)?;
    let r = laplace_b(&SpectralCurve::a2(), 6).map_err(err)?;
    let data = FrobeniusPointData::a2();
    Ok(vec![
        ("R1 fixture".into(), *r.coeff(1) == r1),
        ("R2 fixture".into(), *r.coeff(2) == r2),
        ("twisted loop to order 6".into(), twisted_loop_check(&r)),
        ("ODE with U, V".into(), data.invariants_hold() && ode_check(&r, &data)),
    ])
}

fn criterion_7() -> Outcome {
    let e = Engine::new(SpectralCurve::bgw_a2()).map_err(err)?;
    let root = ExtScalar::sqrt_minus3();
    let c1 = (&ExtScalar::from_int(4) * &root).inv().map_err(err)?;
    let c2 = (&ExtScalar::from_int(16) * &root).inv().map_err(err)?;
    let w11 = RatFunc::new(
        Poly::from_ints(&[1, 0, 1]).scale(&c1),
        Poly::from_ints(&[-1, 0, 1]).pow(2),
    )
    .map_err(err)?;
    let w21 = RatFunc::new(
        Poly::from_ints(&[-1, 0, -5]).scale(&c2),
        Poly::from_ints(&[-1, 1]).pow(4).mul(&Poly::from_ints(&[1, 1]).pow(4)),
    )
    .map_err(err)?;
    let r1 = e.residue_pairing(1, 1, &[1]).map_err(err)?;
    let r2 = e.residue_pairing(2, 1, &[1]).map_err(err)?;
    let mut out = vec![
        ("ω_{1,1} closed form".into(), e.rational_form_n1(1).map_err(err)? == w11),
        ("ω_{2,1} closed form".into(), e.rational_form_n1(2).map_err(err)? == w21),
        (
            "-Res √-3 z ω_{1,1} = 1/4".into(),
            -(&r1 * &root) == ExtScalar::frac(1, 4),
        ),
        (
            "Res (√-3/2) z ω_{2,1} = 0".into(),
            (&r2 * &root.scale(&q(1, 2))).is_zero(),
        ),
    ];
    for (g, n) in [(1u32, 1usize), (2, 1), (3, 1), (2, 2)] {
        let ok = match e.ord_infinity(g, n).map_err(err)? {
            Some((_, total)) => total >= 2 * g as i64 - 2,
            None => true,
        };
        out.push((format!("Σ ord_∞ ω_{{{g},{n}}} >= {}", 2 * g - 2), ok));
    }
    Ok(out)
}

fn criterion_8() -> Outcome {
    let three = q(3, 1);
    let mut t = LambdaTable::genus_one();
    let g2 = solve_theta(&fixtures::mumford().map_err(err)?, 2, &[1], &mut t).map_err(err)?;
    solve_theta(&fixtures::genus_three_psi_cubed().map_err(err)?, 3, &[2], &mut t).map_err(err)?;
    solve_theta(&fixtures::genus_three_mixed().map_err(err)?, 3, &[1, 1], &mut t).map_err(err)?;
    let generic = Poly::new(vec![
        ExtScalar::zero(),
        ExtScalar::frac(24, 5760),
        ExtScalar::frac(7, 5760),
    ]);
    let service = ThetaService::new(3, true).map_err(err)?;
    let mixed = fixtures::genus_three_mixed().map_err(err)?;
    let lhs = service
        .evaluate(&mixed, Some("lhs"), Pipeline::Relations)
        .map_err(err)?;
    Ok(vec![
        (
            "(2, [1]) = 3/128".into(),
            t.specialize(2, &[1], &three).map_err(err)? == q(3, 128),
        ),
        (
            "(3, [2]) = 15/1024".into(),
            t.specialize(3, &[2], &three).map_err(err)? == q(15, 1024),
        ),
        ("intermediate -357/1024".into(), lhs == q(-357, 1024)),
        (
            "(3, [1,1]) = 63/512".into(),
            t.specialize(3, &[1, 1], &three).map_err(err)? == q(63, 512),
        ),
        ("λ-generic (7λ²+24λ)/5760".into(), g2 == generic),
    ])
}

fn criterion_9() -> Outcome {
    let service = ThetaService::new(3, true).map_err(err)?;
    let diff = service.cross_pipeline(3, 6).map_err(err)?;
    if let Some((g, ks)) = &diff {
        eprintln!("first disagreement at ({g}, {ks:?})");
    }
    Ok(vec![("bessel = relations for g <= 3, n <= 6".into(), diff.is_none())])
}

fn criterion_10() -> Outcome {
    let service = ThetaService::new(2, true).map_err(err)?;
    Ok(vec![
        (
            "bessel pipeline".into(),
            service.lambda_one_genus_two(Pipeline::Bessel).map_err(err)? == q(1, 128),
        ),
        (
            "relations pipeline".into(),
            service.lambda_one_genus_two(Pipeline::Relations).map_err(err)? == q(1, 128),
        ),
    ])
}

fn criterion_11() -> Outcome {
    let bessel = table(SpectralCurve::bessel(), 3, 5, Provenance::Bessel)?;
    let curve = SpectralCurve::bgw_a2();
    let tr = Engine::new(curve.clone()).map_err(err)?;
    let analyzed = tr.curve();
    let root = ExtScalar::sqrt_minus3();
    let g11 = givental_graph_sum(&curve, &bessel, 1, 1).map_err(err)?;
    let g21 = givental_graph_sum(&curve, &bessel, 2, 1).map_err(err)?;
    let v11 = -&(&root * &residue_pairing_of(&analyzed, &g11.coeffs, &[1]).map_err(err)?);
    let v21 = residue_pairing_of(&analyzed, &g21.coeffs, &[1]).map_err(err)?;
    let mut terms = BTreeMap::new();
    for t in &g21.terms {
        let v = &root * &residue_pairing_of(&analyzed, &t.coeffs, &[1]).map_err(err)?;
        terms.insert(
            (t.graph.genera.clone(), t.graph.edges.len(), t.dilaton_leaves),
            v.to_rational(),
        );
    }
    let expected = BTreeMap::from([
        ((vec![2], 0, 0), Some(q(5, 1536))),
        ((vec![2], 0, 1), Some(q(-15, 1536))),
        ((vec![1, 1], 1, 0), Some(q(7, 2304))),
        ((vec![1], 1, 0), Some(q(1, 288))),
    ]);
    Ok(vec![
        (
            "(1,1) graph sum = ω_{1,1}".into(),
            g11.coeffs == tr.correlator(1, 1).map_err(err)?.coeffs,
        ),
        (
            "(2,1) graph sum = ω_{2,1}".into(),
            g21.coeffs == tr.correlator(2, 1).map_err(err)?.coeffs,
        ),
        ("(1,1) residue 1/4".into(), v11 == ExtScalar::frac(1, 4)),
        ("(2,1) residue 0".into(), v21.is_zero()),
        ("terms 5/1536, -15/1536, 7/2304, 1/288".into(), terms == expected),
    ])
}

/// Sign picked up by the coefficient of `key` when the branch constant at
/// point `flipped` changes sign.
fn branch_sign(key: &[Label], flipped: usize) -> ExtScalar {
    let count = key.iter().filter(|l| l.0 == flipped).count();
    ExtScalar::from_int(if count % 2 == 0 { 1 } else { -1 })
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

fn criterion_12() -> Outcome {
    let mut out = Vec::new();

    // Symmetry: every coefficient recomputed with each slot distinguished.
    let mut symmetric = true;
    for (name, cells) in [("airy", vec![(0u32, 4usize), (1, 2)]), ("bgw-a2", vec![(1, 3), (2, 2)])] {
        let e = Engine::new(SpectralCurve::builtin(name).map_err(err)?).map_err(err)?;
        for (g, n) in cells {
            let c = e.correlator(g, n).map_err(err)?;
            let kb = e.k_bound(g, n).unwrap_or(0);
            for key in enumerate_keys(e.curve().num_points(), n, kb, kb * n) {
                let stored = c.get(&key);
                for slot in 0..n {
                    symmetric &= e.coefficient_with_slot(g, n, &key, slot).map_err(err)? == stored;
                }
            }
        }
    }
    out.push(("correlator symmetry".into(), symmetric));

    // Branch invariance: flipping s1 at a point flips the sign of V there,
    // so the coefficients change by (-1)^(labels at that point) while the
    // differential itself is unchanged.
    let mut invariant = true;
    let mut flips_seen = 0;
    for name in ["a2", "bgw-a2"] {
        let base_curve = SpectralCurve::builtin(name).map_err(err)?;
        let base = Engine::new(base_curve.clone()).map_err(err)?;
        for idx in 0..base.curve().num_points() {
            let s1 = base.curve().points[idx].s1.clone();
            let flipped = Engine::new(base_curve.clone().with_branch(idx + 1, -&s1)).map_err(err)?;
            for (g, n) in [(1u32, 1usize), (1, 2), (2, 1)] {
                let a = base.correlator(g, n).map_err(err)?;
                let b = flipped.correlator(g, n).map_err(err)?;
                let keys: std::collections::BTreeSet<_> = a.coeffs.keys().chain(b.coeffs.keys()).collect();
                for key in keys {
                    invariant &= b.get(key) == &a.get(key) * &branch_sign(key, idx);
                    flips_seen += usize::from(b.get(key) != a.get(key));
                }
            }
            for g in 1..=2 {
                invariant &= base.rational_form_n1(g).map_err(err)? == flipped.rational_form_n1(g).map_err(err)?;
            }
        }
    }
    out.push(("branch invariance".into(), invariant && flips_seen > 0));

    // Pole-order bounds on every curve kind.
    let mut poles = true;
    for (name, cells) in [
        ("airy", vec![(0u32, 3usize), (1, 1), (1, 2), (2, 1)]),
        ("bessel", vec![(1, 1), (1, 2), (2, 1), (3, 1)]),
        ("a2", vec![(0, 3), (1, 1), (2, 1)]),
        ("bgw-a2", vec![(1, 1), (1, 2), (2, 1), (2, 2), (3, 1)]),
    ] {
        let e = Engine::new(SpectralCurve::builtin(name).map_err(err)?).map_err(err)?;
        for (g, n) in cells {
            poles &= e.pole_order_ok(g, n).map_err(err)?;
        }
    }
    out.push(("pole-order bounds".into(), poles));

    // |Aut| against brute force, exhaustively at desk scale and on random graphs.
    let mut aut = true;
    for (g, n) in [(0, 4), (0, 5), (1, 2), (1, 3), (2, 0), (2, 1)] {
        for (gr, a) in enumerate(g, n).map_err(err)? {
            aut &= gr.is_stable() && gr.genus() == g && a == brute_force_aut(&gr);
        }
    }
    let mut runner = TestRunner::new(Config {
        cases: 64,
        failure_persistence: None,
        ..Config::default()
    });
    let random = runner
        .run(&small_graph(), |gr| {
            prop_assert_eq!(gr.automorphisms(), brute_force_aut(&gr));
            prop_assert_eq!(DecoratedGraph::plain(gr.clone()).automorphisms(), brute_force_aut(&gr));
            Ok(())
        })
        .is_ok();
    out.push(("|Aut| vs brute force".into(), aut && random));
    Ok(out)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Bessel intersection numbers", criterion_1),
        ("Airy intersection numbers and selection rule", criterion_2),
        ("KdV on Airy and Bessel tables", criterion_3),
        ("dilaton on the Bessel table", criterion_4),
        ("A2 correlator fixture", criterion_5),
        ("R-matrix fixture", criterion_6),
        ("BGW-A2 fixtures", criterion_7),
        ("relations pipeline", criterion_8),
        ("cross-pipeline equality", criterion_9),
        ("λ₁ fixture", criterion_10),
        ("graph sum vs residue", criterion_11),
        ("property suites", criterion_12),
    ];
    let mut failures = 0;
    for (idx, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed().as_secs_f64();
        match result {
            Ok(checks) => {
                let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
                if failed.is_empty() {
                    println!("PASS {:>2} {title} ({} checks, {elapsed:.1}s)", idx + 1, checks.len());
                } else {
                    failures += 1;
                    println!("FAIL {:>2} {title}: {}", idx + 1, failed.join("; "));
                }
            }
            Err(e) => {
                failures += 1;
                println!("FAIL {:>2} {title}: error: {e}", idx + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
