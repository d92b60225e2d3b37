mod common;

use std::collections::HashMap;

use common::{ctx, field_specs, pool_len, pooled, PROPERTIES};
use num_bigint::BigUint;
use num_complex::Complex64;
use tracenorm::arith::gcd_u64;
use tracenorm::bounds::{self, coprime_factorizations, factorization_identity_holds, check_bound, Mode, QValue, Verdict};
use tracenorm::census::{run_census, verify_theorems, CensusOptions};
use tracenorm::characters::{AdditiveCharacter, MultiplicativeCharacter, OracleTables};
use tracenorm::field::divisors;
use tracenorm::intfactor::{self, DEFAULT_FACTOR_BUDGET};
use tracenorm::linearized::{
    additive_order, lambda_inclusion_exclusion, lambda_of, phi_of_poly, xm1_divisor,
};
use tracenorm::polyq::{self, PolyQ};

#[test]
fn randomized_suites() {
    for (name, prop) in PROPERTIES {
        prop(1000).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

fn small_fields(limit: u64) -> impl Iterator<Item = &'static tracenorm::FieldContext> {
    (0..pool_len()).map(pooled).filter(move |c| c.size <= limit)
}

#[test]
fn encoding_round_trip() {
    for c in small_fields(1 << 16) {
        for enc in 0..c.size {
            assert_eq!(c.encode(&c.decode(enc).unwrap()), enc);
        }
    }
}

#[test]
fn frobenius_is_linear() {
    for c in small_fields(1 << 12) {
        for d in divisors(c.m) {
            let qd = c.q.pow(d);
            for (i, j) in [(3u64, 7u64), (1, c.size - 1), (c.size / 2, 5)] {
                let (b, g) = (c.decode(i % c.size).unwrap(), c.decode(j % c.size).unwrap());
                let a = c.subfield_element(1, 1 % c.q).unwrap();
                let s = c.subfield_element(1, c.q - 1).unwrap();
                let lhs = c.pow_u64(&c.add(&c.mul(&a, &b), &c.mul(&s, &g)), qd);
                let rhs = c.add(&c.mul(&a, &c.pow_u64(&b, qd)), &c.mul(&s, &c.pow_u64(&g, qd)));
                assert_eq!(lhs, rhs);
            }
        }
    }
}

#[test]
fn fixed_points_of_frobenius() {
    for c in small_fields(1 << 12) {
        for d in divisors(c.m) {
            let qd = c.q.pow(d);
            let fixed = (0..c.size).filter(|&e| {
                let b = c.decode(e).unwrap();
                c.pow_u64(&b, qd) == b
            });
            assert_eq!(fixed.count() as u64, qd);
        }
    }
}

#[test]
fn builds_are_deterministic() {
    for (p, e, m) in [(2, 1, 15), (3, 2, 3), (5, 1, 6), (7, 1, 2)] {
        let (a, b) = (ctx(p, e, m), ctx(p, e, m));
        assert_eq!(a.modulus, b.modulus);
        assert_eq!(a.g0, b.g0);
        assert_eq!(a.xm1, b.xm1);
        assert_eq!(a.summary(), b.summary());
    }
}

#[test]
fn coset_count_matches_factorizer() {
    for c in small_fields(1 << 16).filter(|c| c.m as u64 % c.p != 0) {
        let cosets = bounds::omega_xm1(&BigUint::from(c.q), c.m).unwrap();
        assert_eq!(cosets as usize, c.xm1.omega(), "q = {}, m = {}", c.q, c.m);
    }
    for (q, m) in [(2u64, 45u32), (3, 40), (4, 21), (5, 62), (7, 48)] {
        let (p, e) = tracenorm::arith::prime_power(q).unwrap();
        let c = tracenorm::build_context(&tracenorm::FieldSpec::new(p, e, 1)).unwrap();
        let f = PolyQ::x_pow_minus_one(&c.base, m as usize);
        let fac = polyq::factor(&c, &f).unwrap();
        assert_eq!(bounds::omega_xm1(&BigUint::from(q), m).unwrap() as usize, fac.omega());
    }
}

#[test]
fn phi_over_divisors_sums_to_size() {
    let c = ctx(3, 1, 1);
    let polys = [vec![1, 0, 1], vec![2, 0, 0, 1], vec![0, 0, 1], vec![1, 1, 1, 1], vec![2, 1, 0, 2, 1]];
    for raw in polys {
        let f = polyq::monic(&c.base, &PolyQ::new(raw));
        let total: BigUint = polyq::divisor_lattice(&c, &f, false)
            .unwrap()
            .iter()
            .map(|g| phi_of_poly(&c, g).unwrap())
            .sum();
        assert_eq!(total, BigUint::from(3u32).pow(f.deg() as u32));
    }
    let c = ctx(2, 2, 3);
    let f = PolyQ::x_pow_minus_one(&c.base, 6);
    let total: BigUint = polyq::divisor_lattice(&c, &f, false).unwrap().iter().map(|g| phi_of_poly(&c, g).unwrap()).sum();
    assert_eq!(total, BigUint::from(4u32).pow(6));
}

#[test]
fn additive_orders_divide_and_detect_subfields() {
    for c in small_fields(1 << 10) {
        let xm = PolyQ::x_pow_minus_one(&c.base, c.m as usize);
        for enc in 0..c.size {
            let b = c.decode(enc).unwrap();
            let ord = additive_order(c, &b);
            assert!(polyq::rem(&c.base, &xm, &ord).is_zero());
            for d in divisors(c.m) {
                let xd = PolyQ::x_pow_minus_one(&c.base, d as usize);
                let divides = polyq::rem(&c.base, &xd, &ord).is_zero();
                assert_eq!(divides, c.in_subfield(&b, d).unwrap());
            }
        }
    }
}

#[test]
fn character_orthogonality() {
    for c in small_fields(1 << 10).filter(|c| c.size > 2) {
        for ce in [1u64, c.size - 1, c.size / 3 + 1] {
            let chi = AdditiveCharacter { c: c.decode(ce % c.size).unwrap() };
            let s: Complex64 = (0..c.size).map(|e| chi.eval(c, &c.decode(e).unwrap())).sum();
            assert!(s.norm() < 1e-9);
        }
        for j in [1u64, c.size - 2, (c.size - 1) / 2] {
            if j == 0 || j % (c.size - 1) == 0 {
                continue;
            }
            let eta = MultiplicativeCharacter { j };
            let s: Complex64 = (1..c.size).map(|e| eta.eval(c, &c.decode(e).unwrap()).unwrap()).sum();
            assert!(s.norm() < 1e-9, "q^m = {}, j = {j}", c.size);
        }
    }
}

#[test]
fn character_counts() {
    for c in small_fields(1 << 12) {
        let t = OracleTables::new(c).unwrap();
        for (exps, count) in t.order_histogram() {
            let f = xm1_divisor(c, &exps);
            assert_eq!(BigUint::from(count), phi_of_poly(c, &f).unwrap());
        }
        let n = c.size - 1;
        let mut by_order: HashMap<u64, u64> = HashMap::new();
        for j in 0..n {
            *by_order.entry(MultiplicativeCharacter { j }.order(c)).or_default() += 1;
        }
        for (t, cnt) in by_order {
            let phi_t = (1..=t).filter(|&i| gcd_u64(i, t) == 1).count() as u64;
            assert_eq!(cnt, phi_t);
        }
    }
}

#[test]
fn exponent_identity_for_coprime_tuples() {
    for m in 2..=400u64 {
        for k in 2..=4 {
            for d in coprime_factorizations(m, k) {
                let d32: Vec<u32> = d.iter().map(|&x| x as u32).collect();
                if d32.contains(&1) {
                    continue;
                }
                let big_d: i64 = d.iter().map(|&x| x as i64).sum();
                let lam = lambda_inclusion_exclusion(&d32);
                assert_eq!(lam, big_d - k as i64 + 1, "{m} {d:?}");
            }
        }
    }
    let c = ctx(2, 1, 30);
    assert_eq!(lambda_of(&c, &[2, 3, 5]).unwrap(), 8);
}

#[test]
fn factorization_identity_for_all_coprime_tuples() {
    for m in 2..=10_000u64 {
        for k in 2..=6 {
            for d in coprime_factorizations(m, k) {
                assert!(factorization_identity_holds(m, &d), "m = {m}, d = {d:?}");
            }
        }
    }
}

#[test]
fn bounded_mode_is_monotone_in_q() {
    let qs: Vec<u64> = (2..20_000u64).filter(|&q| tracenorm::arith::prime_power(q).is_some()).collect();
    let mut any_sufficient = false;
    for (m, d) in [(210u32, vec![2u32, 3, 5, 7]), (2310, vec![2, 3, 5, 7, 11]), (120, vec![3, 5, 8]), (60, vec![4, 15])] {
        let mut seen = false;
        for &q in qs.iter().step_by(7) {
            let r = check_bound(&QValue::from_u64(q), m, &d, Some(Mode::Bounded), DEFAULT_FACTOR_BUDGET).unwrap();
            let ok = r.verdict == Verdict::Sufficient;
            assert!(!seen || ok, "m = {m}, d = {d:?}: sufficient earlier, not at q = {q}");
            seen |= ok;
        }
        any_sufficient |= seen;
    }
    assert!(any_sufficient);
}

#[test]
fn sufficient_inequality_is_sound_on_small_fields() {
    let mut checked = 0;
    for (p, e, m) in field_specs(1 << 18) {
        let q = p.pow(e);
        if m < 4 {
            continue;
        }
        let divs: Vec<u32> = divisors(m).into_iter().filter(|&x| x < m).collect();
        let mut tuples: Vec<Vec<u32>> = divs.iter().map(|&x| vec![x]).collect();
        for (i, &a) in divs.iter().enumerate() {
            for &b in &divs[i + 1..] {
                if b % a != 0 {
                    tuples.push(vec![a, b]);
                }
            }
        }
        let c = ctx(p, e, m);
        for d in tuples {
            let r = check_bound(&QValue::from_u64(q), m, &d, Some(Mode::Exact), DEFAULT_FACTOR_BUDGET).unwrap();
            if r.verdict != Verdict::Sufficient {
                continue;
            }
            let rep = run_census(&c, &d, &CensusOptions::default()).unwrap();
            let checks = verify_theorems(&c, &d, &rep).unwrap();
            let sound = checks.iter().find(|t| t.theorem_id == "sufficient_inequality_soundness").unwrap();
            assert!(sound.pass, "q = {q}, m = {m}, d = {d:?}: {sound:?}");
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn census_totals_and_worker_invariance() {
    for (p, e, m, d) in [(2, 1, 6, vec![2, 3]), (3, 1, 4, vec![1]), (2, 2, 3, vec![1]), (5, 1, 4, vec![2]), (2, 1, 9, vec![3])] {
        let c = ctx(p, e, m);
        let one = run_census(&c, &d, &CensusOptions::default()).unwrap();
        let three = run_census(&c, &d, &CensusOptions { workers: 3, ..Default::default() }).unwrap();
        assert_eq!(one.totals, three.totals);
        assert_eq!(one.profiles, three.profiles);
        assert_eq!(one.fibers, three.fibers);
        let phi_n = intfactor::euler_phi(&c.order_factors);
        assert_eq!(one.totals.primitive, phi_n.to_string());
        if m as u64 % p != 0 {
            assert_eq!(one.totals.normal, polyq::phi_of(c.q, &c.xm1).to_string());
        }
        for f in &one.fibers {
            assert_eq!(f.non_normal_targets_hit, 0);
        }
        for t in verify_theorems(&c, &d, &one).unwrap() {
            assert!(t.pass, "{t:?}");
        }
    }
}
