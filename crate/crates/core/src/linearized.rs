//! q-associates, additive order, normality and prescribed traces.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{big_pow, FieldContext, FieldElement};
use crate::linalg::{solve, Matrix};
use crate::polyq::{self, phi_of, PolyQ};

/// Divisor tuple `d` together with prescribed values `a_i ∈ F_{q^{d_i}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceProfile {
    pub d: Vec<u32>,
    pub a: Vec<FieldElement>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub normal_admissible: bool,
}

/// Checks that `d` is a strictly increasing tuple of divisors of `m` in
/// which no entry divides a later one.
pub fn validate_tuple(m: u32, d: &[u32]) -> Result<()> {
    if d.is_empty() {
        return Err(Error::InvalidTuple("empty divisor tuple".into()));
    }
    for (i, &di) in d.iter().enumerate() {
        if di == 0 || m % di != 0 {
            return Err(Error::InvalidTuple(format!("{di} does not divide {m}")));
        }
        for &dj in &d[i + 1..] {
            if dj <= di {
                return Err(Error::InvalidTuple("entries must be strictly increasing".into()));
            }
            if dj % di == 0 {
                return Err(Error::InvalidTuple(format!("{di} divides {dj}")));
            }
        }
    }
    Ok(())
}

impl TraceProfile {
    pub fn new(d: Vec<u32>, a: Vec<FieldElement>) -> Self {
        TraceProfile { d, a }
    }

    pub fn validate(&self, ctx: &FieldContext) -> Result<()> {
        validate_tuple(ctx.m, &self.d)?;
        if self.a.len() != self.d.len() {
            return Err(Error::InvalidTuple("d and a have different lengths".into()));
        }
        for (&d, a) in self.d.iter().zip(&self.a) {
            ctx.check(a)?;
            if !ctx.in_subfield(a, d)? {
                return Err(Error::NotInSubfield(d));
            }
        }
        Ok(())
    }

    pub fn big_d(&self) -> u32 {
        self.d.iter().sum()
    }
}

fn conjugates(ctx: &FieldContext, b: &FieldElement) -> Vec<FieldElement> {
    (0..ctx.m as u64).map(|i| ctx.conjugate(b, i)).collect()
}

fn base_mul(ctx: &FieldContext, c: u64, x: &FieldElement) -> FieldElement {
    if ctx.e == 1 {
        ctx.scale(c, x)
    } else {
        ctx.mul(&FieldElement { coeffs: ctx.base.embed(c) }, x)
    }
}

fn eval_with_conjugates(ctx: &FieldContext, f: &PolyQ, conj: &[FieldElement]) -> FieldElement {
    let m = ctx.m as usize;
    let mut acc = ctx.zero();
    for (i, &c) in f.coeffs.iter().enumerate() {
        if c != 0 {
            acc = ctx.add(&acc, &base_mul(ctx, c, &conj[i % m]));
        }
    }
    acc
}

/// `L_f(b) = sum f_i b^{q^i}`.
pub fn linearized_eval(ctx: &FieldContext, f: &PolyQ, b: &FieldElement) -> FieldElement {
    eval_with_conjugates(ctx, f, &conjugates(ctx, b))
}

fn mult_matrix(ctx: &FieldContext, c: &FieldElement) -> Matrix {
    let cols: Vec<Vec<u64>> = (0..ctx.n).map(|j| ctx.mul(c, &ctx.basis_element(j)).coeffs).collect();
    Matrix::from_columns(ctx.n, &cols)
}

/// F_p-matrix of `L_f` acting on the coordinates of F_{q^m}.
pub fn linearized_matrix(ctx: &FieldContext, f: &PolyQ) -> Matrix {
    let fp = &ctx.fp;
    let m = ctx.m as usize;
    let mut out = Matrix::zero(ctx.n, ctx.n);
    for (i, &c) in f.coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let frob = &ctx.frob[i % m];
        let term = if ctx.e == 1 {
            Matrix { rows: ctx.n, cols: ctx.n, data: frob.data.iter().map(|&x| fp.mul(c, x)).collect() }
        } else {
            mult_matrix(ctx, &FieldElement { coeffs: ctx.base.embed(c) }).mul(fp, frob)
        };
        for (o, &t) in out.data.iter_mut().zip(&term.data) {
            *o = fp.add(*o, t);
        }
    }
    out
}

/// Product of the factors of `x^m - 1` raised to `exps`.
pub fn xm1_divisor(ctx: &FieldContext, exps: &[u32]) -> PolyQ {
    let b = &ctx.base;
    let mut acc = PolyQ::one();
    for ((r, _), &k) in ctx.xm1.factors.iter().zip(exps) {
        for _ in 0..k {
            acc = polyq::mul(b, &acc, r);
        }
    }
    acc
}

/// Strips irreducible factors from `x^m - 1` while `annihilates` still
/// holds; returns the exponent vector of the minimal annihilator.
pub fn order_ladder(ctx: &FieldContext, mut annihilates: impl FnMut(&[u32]) -> bool) -> Vec<u32> {
    let mut exps: Vec<u32> = ctx.xm1.factors.iter().map(|(_, k)| *k).collect();
    for j in 0..exps.len() {
        while exps[j] > 0 {
            exps[j] -= 1;
            if !annihilates(&exps) {
                exps[j] += 1;
                break;
            }
        }
    }
    exps
}

/// Exponent vector of `Ord_q(b)` over the factors of `x^m - 1`.
pub fn additive_order_exponents(ctx: &FieldContext, b: &FieldElement) -> Vec<u32> {
    let conj = conjugates(ctx, b);
    order_ladder(ctx, |exps| eval_with_conjugates(ctx, &xm1_divisor(ctx, exps), &conj).is_zero())
}

/// `Ord_q(b)`, the monic annihilator of least degree; `Ord_q(0) = 1`.
pub fn additive_order(ctx: &FieldContext, b: &FieldElement) -> PolyQ {
    xm1_divisor(ctx, &additive_order_exponents(ctx, b))
}

/// Whether `b` is normal over F_q as an element of F_{q^d}.
pub fn is_normal(ctx: &FieldContext, b: &FieldElement, d: u32) -> Result<bool> {
    ctx.check(b)?;
    if !ctx.in_subfield(b, d)? {
        return Err(Error::NotInSubfield(d));
    }
    Ok(additive_order(ctx, b) == PolyQ::x_pow_minus_one(&ctx.base, d as usize))
}

/// Normality test over F_q by `L_{(x^m-1)/r}(b) != 0` for each
/// irreducible factor `r`, with the maps tabulated once.
#[derive(Clone, Debug)]
pub struct NormalTest {
    maps: Vec<Matrix>,
}

impl NormalTest {
    pub fn new(ctx: &FieldContext) -> Self {
        let full: Vec<u32> = ctx.xm1.factors.iter().map(|(_, k)| *k).collect();
        let maps = (0..full.len())
            .map(|j| {
                let mut e = full.clone();
                e[j] -= 1;
                linearized_matrix(ctx, &xm1_divisor(ctx, &e))
            })
            .collect();
        NormalTest { maps }
    }

    /// One matrix per irreducible factor of `x^m - 1`, in factor order.
    pub fn maps(&self) -> &[Matrix] {
        &self.maps
    }

    pub fn is_normal(&self, ctx: &FieldContext, b: &FieldElement) -> bool {
        self.maps.iter().all(|mat| mat.apply(&ctx.fp, &b.coeffs).iter().any(|&v| v != 0))
    }
}

pub fn trace(ctx: &FieldContext, b: &FieldElement, d: u32) -> Result<FieldElement> {
    ctx.trace(b, d)
}

/// `Tr_{from/to}` of an element of F_{q^from}, for `to | from | m`.
pub fn relative_trace(ctx: &FieldContext, a: &FieldElement, from: u32, to: u32) -> FieldElement {
    (0..(from / to) as u64).fold(ctx.zero(), |acc, k| ctx.add(&acc, &ctx.conjugate(a, k * to as u64)))
}

pub fn check_admissible(ctx: &FieldContext, profile: &TraceProfile) -> Result<Admissibility> {
    profile.validate(ctx)?;
    let (d, a) = (&profile.d, &profile.a);
    let mut admissible = true;
    'outer: for i in 0..d.len() {
        for j in i + 1..d.len() {
            let g = d[i].gcd(&d[j]);
            if relative_trace(ctx, &a[i], d[i], g) != relative_trace(ctx, &a[j], d[j], g) {
                admissible = false;
                break 'outer;
            }
        }
    }
    let normal_admissible = admissible
        && d.iter().zip(a).all(|(&di, ai)| is_normal(ctx, ai, di).unwrap_or(false));
    Ok(Admissibility { admissible, normal_admissible })
}

/// `λ(d)` by inclusion-exclusion over gcds of subsets.
pub fn lambda_inclusion_exclusion(d: &[u32]) -> i64 {
    let k = d.len();
    let mut total = 0i64;
    for mask in 1u32..(1 << k) {
        let g = (0..k).filter(|i| mask >> i & 1 == 1).fold(0u32, |g, i| g.gcd(&d[i]));
        if mask.count_ones() % 2 == 1 {
            total += g as i64;
        } else {
            total -= g as i64;
        }
    }
    total
}

/// `g = lcm(x^{d_1} - 1, ..., x^{d_k} - 1)`.
pub fn lcm_poly(ctx: &FieldContext, d: &[u32]) -> PolyQ {
    polyq::lcm_of_xd_minus_one(&ctx.base, d)
}

pub fn lambda_of(ctx: &FieldContext, d: &[u32]) -> Result<u32> {
    validate_tuple(ctx.m, d)?;
    let ie = lambda_inclusion_exclusion(d);
    let deg = lcm_poly(ctx, d).deg() as i64;
    if ie != deg {
        return Err(Error::Inconsistent(format!(
            "inclusion-exclusion gives {ie} but deg lcm is {deg}"
        )));
    }
    Ok(deg as u32)
}

/// A solution of `Tr_{m/d_i}(x) = a_i` for all `i` and the number of
/// solutions, `q^{m - λ(d)}`.
pub fn solve_trace_system(ctx: &FieldContext, profile: &TraceProfile) -> Result<(FieldElement, BigUint)> {
    profile.validate(ctx)?;
    let n = ctx.n;
    let k = profile.d.len();
    let mut a = Matrix::zero(k * n, n);
    let mut rhs = Vec::with_capacity(k * n);
    for (i, (&d, ai)) in profile.d.iter().zip(&profile.a).enumerate() {
        let t = &ctx.subfield(d)?.trace;
        a.data[i * n * n..(i + 1) * n * n].copy_from_slice(&t.data);
        rhs.extend_from_slice(&ai.coeffs);
    }
    let (x, rank) = solve(&ctx.fp, &a, &rhs);
    let x = x.ok_or(Error::NotAdmissible)?;
    let lambda = lambda_of(ctx, &profile.d)?;
    if rank != (ctx.e * lambda) as usize {
        return Err(Error::Inconsistent(format!(
            "trace system has rank {rank}, expected {}",
            ctx.e * lambda
        )));
    }
    Ok((FieldElement { coeffs: x }, big_pow(ctx.q, (ctx.m - lambda) as u64)))
}

/// Number of `(x_1, ..., x_k) ∈ F_{q^{d_1}} × ... × F_{q^{d_k}}` with
/// `x_1 + ... + x_k = 0`, namely `q^{D - λ(d)}`.
pub fn zero_sum_tuple_count(ctx: &FieldContext, d: &[u32]) -> Result<BigUint> {
    let lambda = lambda_of(ctx, d)?;
    let big_d: u32 = d.iter().sum();
    Ok(big_pow(ctx.q, (big_d - lambda) as u64))
}

fn require_coprime(ctx: &FieldContext) -> Result<()> {
    if ctx.m as u64 % ctx.p == 0 {
        return Err(Error::NotCoprime { m: ctx.m, p: ctx.p });
    }
    Ok(())
}

/// `Φ(x^m - 1)`.
pub fn phi_xm1(ctx: &FieldContext) -> BigUint {
    phi_of(ctx.q, &ctx.xm1)
}

pub fn phi_of_poly(ctx: &FieldContext, f: &PolyQ) -> Result<BigUint> {
    Ok(phi_of(ctx.q, &polyq::factor(ctx, f)?))
}

fn exact_div(a: &BigUint, b: &BigUint) -> Result<BigUint> {
    let (q, r) = a.div_rem(b);
    if !r.is_zero() {
        return Err(Error::Inconsistent(format!("{a} is not divisible by {b}")));
    }
    Ok(q)
}

/// Number of normal elements with the prescribed traces: `Φ(x^m-1)/Φ(g)`
/// for a normal admissible profile and 0 when some `a_i` is not normal.
pub fn normal_with_traces_count(ctx: &FieldContext, profile: &TraceProfile) -> Result<BigUint> {
    require_coprime(ctx)?;
    let adm = check_admissible(ctx, profile)?;
    if !adm.normal_admissible {
        return Ok(BigUint::zero());
    }
    let g = lcm_poly(ctx, &profile.d);
    exact_div(&phi_xm1(ctx), &phi_of_poly(ctx, &g)?)
}

/// Fiber size of `Tr_{m/d}` restricted to normal elements:
/// `Φ(x^m-1)/Φ(x^d-1)`.
pub fn trace_correspondence_ratio(ctx: &FieldContext, d: u32) -> Result<BigUint> {
    require_coprime(ctx)?;
    ctx.subfield(d)?;
    let xd = PolyQ::x_pow_minus_one(&ctx.base, d as usize);
    exact_div(&phi_xm1(ctx), &phi_of_poly(ctx, &xd)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_context, FieldSpec};

    fn ctx(p: u64, e: u32, m: u32) -> FieldContext {
        build_context(&FieldSpec::new(p, e, m)).unwrap()
    }

    #[test]
    fn order_examples() {
        let c = ctx(2, 1, 15);
        assert_eq!(additive_order(&c, &c.zero()), PolyQ::one());
        assert_eq!(additive_order(&c, &c.one()), PolyQ::x_pow_minus_one(&c.base, 1));
        let b = c.decode(12345).unwrap();
        assert_eq!(linearized_eval(&c, &PolyQ::x(), &b), c.conjugate(&b, 1));
        assert!(linearized_eval(&c, &PolyQ::x_pow_minus_one(&c.base, 1), &c.one()).is_zero());
        let mat = linearized_matrix(&c, &PolyQ::new(vec![1, 1, 0, 1]));
        assert_eq!(
            mat.apply(&c.fp, &b.coeffs),
            linearized_eval(&c, &PolyQ::new(vec![1, 1, 0, 1]), &b).coeffs
        );
    }

    #[test]
    fn normal_test_matches_order() {
        let c = ctx(3, 1, 4);
        let t = NormalTest::new(&c);
        for e in 0..81 {
            let b = c.decode(e).unwrap();
            assert_eq!(t.is_normal(&c, &b), is_normal(&c, &b, 4).unwrap());
        }
    }

    #[test]
    fn normal_counts_small() {
        let c = ctx(2, 1, 3);
        let count = (0..8).filter(|&e| is_normal(&c, &c.decode(e).unwrap(), 3).unwrap()).count();
        assert_eq!(count, 3);
        assert!(!is_normal(&ctx(3, 1, 2), &ctx(3, 1, 2).one(), 2).unwrap());
    }

    #[test]
    fn trace_examples() {
        let c = ctx(2, 1, 2);
        for e in 2..4 {
            let b = c.decode(e).unwrap();
            assert_eq!(trace(&c, &b, 1).unwrap(), c.one());
            assert_eq!(trace(&c, &b, 2).unwrap(), b);
        }
    }

    #[test]
    fn lambda_examples() {
        let c = ctx(2, 1, 6);
        assert_eq!(lambda_of(&c, &[2, 3]).unwrap(), 4);
        let c = ctx(5, 1, 12);
        assert_eq!(lambda_of(&c, &[4, 6]).unwrap(), 8);
        let c = ctx(2, 1, 30);
        assert_eq!(lambda_of(&c, &[6, 10, 15]).unwrap(), 22);
        assert_eq!(lambda_inclusion_exclusion(&[6, 10, 15]), 22);
        assert!(validate_tuple(6, &[2, 4]).is_err());
        assert!(validate_tuple(12, &[2, 4]).is_err());
        assert!(validate_tuple(12, &[3, 2]).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let c = ctx(2, 1, 6);
        let p = TraceProfile::new(vec![2, 3], vec![c.one(), c.one()]);
        assert!(!check_admissible(&c, &p).unwrap().admissible);
        let z = TraceProfile::new(vec![2, 3], vec![c.zero(), c.zero()]);
        let adm = check_admissible(&c, &z).unwrap();
        assert!(adm.admissible && !adm.normal_admissible);
        assert!(matches!(solve_trace_system(&c, &p), Err(Error::NotAdmissible)));
        let (w, count) = solve_trace_system(&c, &z).unwrap();
        assert_eq!(count, BigUint::from(4u32));
        assert!(trace(&c, &w, 2).unwrap().is_zero() && trace(&c, &w, 3).unwrap().is_zero());
    }

    #[test]
    fn closed_form_counts() {
        let c = ctx(2, 1, 15);
        assert_eq!(trace_correspondence_ratio(&c, 3).unwrap(), BigUint::from(3375u32));
        assert_eq!(trace_correspondence_ratio(&c, 15).unwrap(), BigUint::from(1u32));
        let c = ctx(5, 1, 6);
        assert_eq!(trace_correspondence_ratio(&c, 2).unwrap(), BigUint::from(576u32));
        assert_eq!(zero_sum_tuple_count(&c, &[2, 3]).unwrap(), BigUint::from(5u32));
        let c = ctx(3, 1, 6);
        assert!(matches!(trace_correspondence_ratio(&c, 2), Err(Error::NotCoprime { .. })));
    }
}
