#![allow(dead_code)]

use std::sync::OnceLock;

use num_bigint::BigUint;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use tracenorm::arith::is_prime_u64;
use tracenorm::field::divisors;
use tracenorm::linearized::{
    additive_order, is_normal, linearized_eval, phi_of_poly, relative_trace, xm1_divisor,
};
use tracenorm::polyq::{self, PolyQ};
use tracenorm::{build_context, FieldContext, FieldSpec};

pub fn ctx(p: u64, e: u32, m: u32) -> FieldContext {
    build_context(&FieldSpec::new(p, e, m)).unwrap()
}

/// Every `(p, e, m)` with `p^{em} <= limit`, skipping `em = 1` above `p = 31`.
pub fn field_specs(limit: u64) -> Vec<(u64, u32, u32)> {
    let mut out = Vec::new();
    for p in (2..=limit.min(1 << 16)).filter(|&p| is_prime_u64(p)) {
        let mut n = 1u32;
        let mut size = p;
        while size <= limit {
            if n > 1 || p <= 31 {
                for e in (1..=n).filter(|e| n % e == 0) {
                    out.push((p, e, n / e));
                }
            }
            n += 1;
            size = match size.checked_mul(p) {
                Some(s) => s,
                None => break,
            };
        }
    }
    out
}

struct Pool {
    specs: Vec<(u64, u32, u32)>,
    built: Vec<OnceLock<FieldContext>>,
}

fn pool() -> &'static Pool {
    static POOL: OnceLock<Pool> = OnceLock::new();
    POOL.get_or_init(|| {
        let specs = field_specs(1 << 16);
        let built = specs.iter().map(|_| OnceLock::new()).collect();
        Pool { specs, built }
    })
}

pub fn pool_len() -> usize {
    pool().specs.len()
}

pub fn pooled(i: usize) -> &'static FieldContext {
    let pl = pool();
    pl.built[i].get_or_init(|| {
        let (p, e, m) = pl.specs[i];
        ctx(p, e, m)
    })
}

fn runner(cases: u32) -> TestRunner {
    let cfg = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(cfg, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn poly_from(ctx: &FieldContext, raw: &[u64]) -> PolyQ {
    PolyQ::new(raw.iter().map(|c| c % ctx.q).collect())
}

fn element(ctx: &FieldContext, raw: u64) -> tracenorm::FieldElement {
    ctx.decode(raw % ctx.size).unwrap()
}

type Outcome = Result<(), String>;

fn run<S: Strategy>(cases: u32, strat: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome {
    runner(cases).run(&strat, test).map_err(|e| e.to_string())
}

fn case() -> impl Strategy<Value = (usize, u64, Vec<u64>, Vec<u64>)> {
    (
        0..pool_len(),
        any::<u64>(),
        prop::collection::vec(any::<u64>(), 0..12),
        prop::collection::vec(any::<u64>(), 0..12),
    )
}

/// `L_f(L_g(b)) = L_{fg}(b)`.
pub fn composition(cases: u32) -> Outcome {
    run(cases, case(), |(i, raw, f, g)| {
        let c = pooled(i);
        let (f, g, b) = (poly_from(c, &f), poly_from(c, &g), element(c, raw));
        let lhs = linearized_eval(c, &f, &linearized_eval(c, &g, &b));
        let rhs = linearized_eval(c, &polyq::mul(&c.base, &f, &g), &b);
        prop_assert_eq!(lhs, rhs);
        Ok(())
    })
}

/// `Ord(L_f(b)) = Ord(b) / gcd(f, Ord(b))`.
pub fn order_quotient(cases: u32) -> Outcome {
    run(cases, case(), |(i, raw, f, _)| {
        let c = pooled(i);
        let (f, b) = (poly_from(c, &f), element(c, raw));
        let ord = additive_order(c, &b);
        let g = polyq::gcd(&c.base, &f, &ord);
        let (want, r) = polyq::divrem(&c.base, &ord, &g);
        prop_assert!(r.is_zero());
        prop_assert_eq!(additive_order(c, &linearized_eval(c, &f, &b)), want);
        Ok(())
    })
}

/// `Tr_{m/e} = Tr_{d/e} ∘ Tr_{m/d}` for `e | d | m`.
pub fn trace_transitivity(cases: u32) -> Outcome {
    run(cases, (0..pool_len(), any::<u64>(), any::<usize>(), any::<usize>()), |(i, raw, a, b)| {
        let c = pooled(i);
        let x = element(c, raw);
        let ds = divisors(c.m);
        let d = ds[a % ds.len()];
        let es = divisors(d);
        let e = es[b % es.len()];
        let direct = relative_trace(c, &x, c.m, e);
        let staged = relative_trace(c, &relative_trace(c, &x, c.m, d), d, e);
        prop_assert_eq!(direct, staged);
        Ok(())
    })
}

/// Traces of normal elements to every intermediate field are normal.
pub fn traces_of_normals(cases: u32) -> Outcome {
    run(cases, (0..pool_len(), any::<u64>()), |(i, raw)| {
        let c = pooled(i);
        let mut enc = raw % c.size;
        let b = loop {
            let b = c.decode(enc).unwrap();
            if is_normal(c, &b, c.m).unwrap() {
                break b;
            }
            enc = (enc + 1) % c.size;
        };
        for d in divisors(c.m) {
            let t = c.trace(&b, d).unwrap();
            prop_assert!(is_normal(c, &t, d).unwrap(), "Tr to degree {} of {:?}", d, b);
        }
        Ok(())
    })
}

/// `Φ(fg) = Φ(f)Φ(g)` for coprime divisors `f, g` of `x^m - 1`.
pub fn phi_multiplicative(cases: u32) -> Outcome {
    run(cases, (0..pool_len(), prop::collection::vec(any::<u32>(), 16)), |(i, picks)| {
        let c = pooled(i);
        let mut ef = Vec::new();
        let mut eg = Vec::new();
        for (j, (_, mult)) in c.xm1.factors.iter().enumerate() {
            let r = picks[j % picks.len()].rotate_left(j as u32);
            let k = 1 + (r >> 2) % mult;
            match r % 3 {
                0 => {
                    ef.push(k);
                    eg.push(0);
                }
                1 => {
                    ef.push(0);
                    eg.push(k);
                }
                _ => {
                    ef.push(0);
                    eg.push(0);
                }
            }
        }
        let f = xm1_divisor(c, &ef);
        let g = xm1_divisor(c, &eg);
        let fg = polyq::mul(&c.base, &f, &g);
        let lhs = phi_of_poly(c, &fg).unwrap();
        let rhs = phi_of_poly(c, &f).unwrap() * phi_of_poly(c, &g).unwrap();
        prop_assert_eq!(lhs, rhs);
        Ok(())
    })
}

/// Multiplying out a factorization gives back the input.
pub fn factor_round_trip(cases: u32) -> Outcome {
    run(cases, (0..pool_len(), prop::collection::vec(any::<u64>(), 2..10)), |(i, raw)| {
        let c = pooled(i);
        let f = poly_from(c, &raw);
        if f.is_zero() {
            return Ok(());
        }
        let fac = polyq::factor(c, &f).unwrap();
        prop_assert_eq!(fac.expand(&c.base), f);
        for (r, _) in &fac.factors {
            prop_assert!(r.is_monic() && polyq::is_irreducible(&c.base, r));
        }
        Ok(())
    })
}

pub const PROPERTIES: [(&str, fn(u32) -> Outcome); 6] = [
    ("composition of linearized polynomials", composition),
    ("order of L_f(b)", order_quotient),
    ("trace transitivity", trace_transitivity),
    ("traces of normal elements are normal", traces_of_normals),
    ("Phi multiplicativity", phi_multiplicative),
    ("factorization round trip", factor_round_trip),
];

pub fn big(v: u64) -> BigUint {
    BigUint::from(v)
}
