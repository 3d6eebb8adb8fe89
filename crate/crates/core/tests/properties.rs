//! Property suites: field and series algebra, correlator symmetry, branch
//! invariance, pole-order bounds, relation linearity, Θ query rules and
//! dilaton closure.

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use thetakdv::curve::SpectralCurve;
use thetakdv::exact::{q, ExtScalar, Rational};
use thetakdv::graphs::relations::fixtures;
use thetakdv::recursion::{Engine, Label};
use thetakdv::series::{LaurentSeries, Poly};
use thetakdv::theta::{Pipeline, ThetaQuery, ThetaService};

fn small_rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| q(n, d))
}

fn scalar() -> impl Strategy<Value = ExtScalar> {
    proptest::array::uniform8(small_rational()).prop_map(ExtScalar::from_coords)
}

fn nonzero_scalar() -> impl Strategy<Value = ExtScalar> {
    scalar().prop_filter("nonzero", |x| !x.is_zero())
}

/// Series `c_1 s + ... ` with nonzero linear term, known to `s^order`.
fn series(order: i64) -> impl Strategy<Value = LaurentSeries> {
    (proptest::collection::vec(small_rational(), order as usize), 1i64..=3).prop_map(move |(mut cs, lead)| {
        cs[0] = q(lead, 1);
        LaurentSeries::from_rationals(1, &cs).truncate(order + 1)
    })
}

fn poly() -> impl Strategy<Value = Poly> {
    proptest::collection::vec(-5i64..=5, 1..5).prop_map(|c| Poly::from_ints(&c))
}

fn service() -> &'static ThetaService {
    static SERVICE: OnceLock<ThetaService> = OnceLock::new();
    SERVICE.get_or_init(|| ThetaService::new(3, true).unwrap())
}

fn engine(name: &str) -> Arc<Engine> {
    Engine::shared(name).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms(a in scalar(), b in scalar(), c in scalar()) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
    }

    #[test]
    fn inverses_and_automorphisms(a in nonzero_scalar(), b in scalar(), mask in 0usize..8) {
        prop_assert!((&a * &a.inv().unwrap()).is_one());
        prop_assert_eq!((&a * &b).automorphism(mask), &a.automorphism(mask) * &b.automorphism(mask));
        prop_assert_eq!((&a + &b).automorphism(mask), &a.automorphism(mask) + &b.automorphism(mask));
        let root = (&a * &a).sqrt().unwrap();
        prop_assert!(root == a || root == -&a);
    }

    #[test]
    fn series_ring_and_reversion(a in series(6), b in series(6)) {
        prop_assert!(a.mul(&b).sub(&b.mul(&a)).is_zero());
        let inv = a.inv().unwrap();
        prop_assert!(a.mul(&inv).sub(&LaurentSeries::one()).is_zero());
        let rev = a.reversion().unwrap();
        prop_assert!(a.compose(&rev).unwrap().sub(&LaurentSeries::var()).is_zero());
        prop_assert!(a.integrate().unwrap().derive().sub(&a).is_zero());
        prop_assert!(a.reflect().reflect().sub(&a).is_zero());
    }

    #[test]
    fn polynomial_division(a in poly(), b in poly().prop_filter("nonzero", |p| !p.is_zero())) {
        let (quo, rem) = a.div_rem(&b).unwrap();
        prop_assert_eq!(quo.mul(&b).add(&rem), a.clone());
        prop_assert!(rem.is_zero() || rem.degree() < b.degree());
        let g = a.gcd(&b).unwrap();
        prop_assert!(b.div_rem(&g).unwrap().1.is_zero());
    }
}

fn correlator_cell() -> impl Strategy<Value = (&'static str, u32, usize)> {
    prop_oneof![
        Just(("airy", 0u32, 4usize)),
        Just(("airy", 1, 2)),
        Just(("bessel", 2, 2)),
        Just(("a2", 1, 2)),
        Just(("bgw-a2", 2, 2)),
        Just(("bgw-a2", 1, 3)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn correlator_symmetry((name, g, n) in correlator_cell(), pick in any::<usize>(), slot in any::<usize>()) {
        let e = engine(name);
        let c = e.correlator(g, n).unwrap();
        let keys: Vec<_> = c.coeffs.keys().cloned().collect();
        prop_assume!(!keys.is_empty());
        let mut key = keys[pick % keys.len()].clone();
        key.rotate_left(slot % n);
        let stored = c.get(&key);
        for s in 0..n {
            prop_assert_eq!(e.coefficient_with_slot(g, n, &key, s).unwrap(), stored.clone());
        }
    }

    #[test]
    fn branch_invariance(name in prop_oneof![Just("bessel"), Just("a2"), Just("bgw-a2")], point in 0usize..2) {
        let base_curve = SpectralCurve::builtin(name).unwrap();
        let base = engine(name);
        let idx = point % base.curve().num_points();
        let s1 = base.curve().points[idx].s1.clone();
        let flipped = Engine::new(base_curve.with_branch(idx + 1, -&s1)).unwrap();
        for (g, n) in [(1u32, 1usize), (1, 2), (2, 1)] {
            let a = base.correlator(g, n).unwrap();
            let b = flipped.correlator(g, n).unwrap();
            for key in a.coeffs.keys().chain(b.coeffs.keys()) {
                let odd = key.iter().filter(|l: &&Label| l.0 == idx).count() % 2 == 1;
                let expect = if odd { -&a.get(key) } else { a.get(key) };
                prop_assert_eq!(b.get(key), expect);
            }
        }
        prop_assert_eq!(base.rational_form_n1(2).unwrap(), flipped.rational_form_n1(2).unwrap());
    }

    #[test]
    fn pole_order_bound((name, g, n) in correlator_cell()) {
        prop_assert!(engine(name).pole_order_ok(g, n).unwrap());
    }

    #[test]
    fn relation_linearity(a in small_rational(), b in small_rational(), pipeline in prop_oneof![Just(Pipeline::Bessel), Just(Pipeline::Relations)]) {
        let s = service();
        let mixed = fixtures::genus_three_mixed().unwrap();
        let cubed = fixtures::genus_three_psi_cubed().unwrap();
        prop_assert!(mixed.plus(&cubed).is_err());
        for rel in [mixed, cubed, fixtures::mumford().unwrap()] {
            let whole = s.evaluate(&rel, None, pipeline).unwrap();
            let combo = rel.scaled(&a).plus(&rel.scaled(&b)).unwrap();
            prop_assert_eq!(s.evaluate(&combo, None, pipeline).unwrap(), (a.clone() + b.clone()) * whole.clone());
            let lhs = s.evaluate(&rel.scaled(&a), Some("lhs"), pipeline).unwrap();
            let boundary = s.evaluate(&rel.scaled(&a), Some("boundary"), pipeline).unwrap();
            prop_assert_eq!(lhs + boundary, a.clone() * whole);
        }
    }

    #[test]
    fn invalid_theta_queries_vanish(
        psi in proptest::collection::vec(0u32..4, 3..6),
        kappa in proptest::collection::vec(1u32..3, 0..2),
        g in 1u32..=3,
        pipeline in prop_oneof![Just(Pipeline::Bessel), Just(Pipeline::Relations)],
    ) {
        let s = service();
        let genus_zero = ThetaQuery::new(0, psi.clone(), kappa.clone()).unwrap();
        prop_assert_eq!(s.theta(&genus_zero, pipeline).unwrap().value, Rational::default());
        let query = ThetaQuery::new(g, psi, kappa).unwrap();
        prop_assume!(query.degree() != g - 1);
        let answer = s.theta(&query, pipeline).unwrap();
        prop_assert_eq!(answer.value, Rational::default());
        prop_assert!(answer.reason.is_some());
    }

    #[test]
    fn dilaton_closure(
        g in 1u32..=3,
        extra in 0usize..3,
        split in any::<u64>(),
        pipeline in prop_oneof![Just(Pipeline::Bessel), Just(Pipeline::Relations)],
    ) {
        // Distribute degree g-1 over some slots, pad with zeros.
        let n = 1 + extra + (g as usize - 1);
        let mut psi = vec![0u32; n];
        let mut seed = split;
        for _ in 0..g - 1 {
            psi[(seed % n as u64) as usize] += 1;
            seed /= n as u64;
        }
        let s = service();
        let small = s.theta(&ThetaQuery::new(g, psi.clone(), Vec::new()).unwrap(), pipeline).unwrap().value;
        let mut bigger = psi.clone();
        bigger.push(0);
        let big = s.theta(&ThetaQuery::new(g, bigger, Vec::new()).unwrap(), pipeline).unwrap().value;
        prop_assert_eq!(big, q(2 * g as i64 - 2 + n as i64, 1) * small);
    }
}
