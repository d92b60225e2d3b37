//! The tower F_p ⊂ F_q ⊂ F_{q^m}.
//!
//! Elements of F_{q^m} are coefficient vectors over F_p with respect to the
//! power basis of a degree `n = e*m` modulus. Every subfield F_{q^d} lives
//! inside the big field as the fixed space of `x -> x^{q^d}`; its elements
//! are addressed by the base-`p` integer formed from their coordinates at the
//! pivot columns of an echelon basis of that space.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{fp_poly, is_prime_u64, Fp};
use crate::error::{Error, Result};
use crate::intfactor::{self, Factors, DEFAULT_FACTOR_BUDGET};
use crate::linalg::{kernel, Matrix};
use crate::packed::{PackedIndex, PackedLayout, PackedLinearMap};
use crate::polyq::{self, BaseField, Factorization, PolyQ};

pub const DEFAULT_DLOG_CAP: u64 = 1 << 22;
pub const DEFAULT_DIVISOR_CAP: u128 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u64,
    pub e: u32,
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u64>>,
}

impl FieldSpec {
    pub fn new(p: u64, e: u32, m: u32) -> Self {
        FieldSpec { p, e, m, modulus: None }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ContextOptions {
    /// Largest field for which a discrete-log table is built.
    pub dlog_cap: u64,
    /// Pollard iteration budget for factoring `q^m - 1`.
    pub factor_budget: u64,
    /// Largest divisor list `divisor_lattice` will materialize.
    pub divisor_cap: u128,
}

impl Default for ContextOptions {
    fn default() -> Self {
        ContextOptions {
            dlog_cap: DEFAULT_DLOG_CAP,
            factor_budget: DEFAULT_FACTOR_BUDGET,
            divisor_cap: DEFAULT_DIVISOR_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement {
    pub coeffs: Vec<u64>,
}

impl FieldElement {
    pub fn zero(n: usize) -> Self {
        FieldElement { coeffs: vec![0; n] }
    }

    pub fn one(n: usize) -> Self {
        let mut c = vec![0; n];
        c[0] = 1;
        FieldElement { coeffs: c }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

/// F_{q^d} sitting inside F_{q^m}.
#[derive(Clone, Debug)]
pub struct Subfield {
    pub d: u32,
    /// Echelon basis over F_p, `e*d` vectors of length `n`.
    pub basis: Vec<Vec<u64>>,
    pub pivots: Vec<usize>,
    /// Matrix of `Tr_{m/d}` on F_p-coordinates.
    pub trace: Matrix,
    pub size: u64,
}

#[derive(Clone, Debug)]
pub struct DlogTable {
    /// `log[enc]` for nonzero encodings.
    pub log: Vec<u32>,
    /// `exp[t]` is the encoding of `g0^t`.
    pub exp: Vec<u64>,
}

/// Packed helpers used by the bulk enumerators.
#[derive(Clone, Debug)]
pub struct PackedField {
    pub layout: PackedLayout,
    pub mul_g0: PackedLinearMap,
    pub encoding: PackedIndex,
}

#[derive(Clone, Debug)]
pub struct FieldContext {
    pub spec: FieldSpec,
    pub options: ContextOptions,
    pub p: u64,
    pub e: u32,
    pub m: u32,
    pub n: usize,
    pub q: u64,
    /// `q^m`, the number of elements.
    pub size: u64,
    pub fp: Fp,
    /// Monic, constant term first, length `n + 1`.
    pub modulus: Vec<u64>,
    /// `frob[i]` is the matrix of `x -> x^{q^i}` for `i < m`.
    pub frob: Vec<Matrix>,
    /// `abs_trace[j] = Tr_{F_{q^m}/F_p}(x^j)`.
    pub abs_trace: Vec<u64>,
    pub subfields: Vec<Subfield>,
    pub g0: FieldElement,
    /// Factorization of `q^m - 1`.
    pub order_factors: Factors,
    pub base: BaseField,
    /// Factorization of `x^m - 1` over F_q.
    pub xm1: Factorization,
    pub dlog: Option<DlogTable>,
    pub packed: Option<PackedField>,
}

pub fn divisors(m: u32) -> Vec<u32> {
    (1..=m).filter(|d| m % d == 0).collect()
}

/// Multiplies two reduced coefficient vectors modulo the monic `modulus`.
pub(crate) fn mul_mod(fp: &Fp, a: &[u64], b: &[u64], modulus: &[u64]) -> Vec<u64> {
    let n = modulus.len() - 1;
    if n == 1 {
        return vec![fp.mul(a[0], b[0])];
    }
    let mut prod = vec![0u64; 2 * n - 1];
    if fp.lazy_ok(n) {
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        for v in prod.iter_mut() {
            *v = fp.reduce(*v);
        }
    } else {
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = fp.add(prod[i + j], fp.mul(x, y));
            }
        }
    }
    for k in (n..2 * n - 1).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        for j in 0..n {
            if modulus[j] != 0 {
                let t = k - n + j;
                prod[t] = fp.sub(prod[t], fp.mul(c, modulus[j]));
            }
        }
    }
    prod.truncate(n);
    prod
}

fn canonical_modulus(fp: &Fp, n: usize) -> Vec<u64> {
    let p = fp.modulus();
    // the tail runs through base-p integers; constant term 0 is reducible
    // for n >= 2 so those tails are skipped
    let mut tail = vec![0u64; n];
    if n >= 2 {
        tail[0] = 1;
    }
    loop {
        let mut f = tail.clone();
        f.push(1);
        if fp_poly::is_irreducible(fp, &f) {
            return f;
        }
        let mut i = 0;
        loop {
            tail[i] += 1;
            if tail[i] < p {
                break;
            }
            tail[i] = 0;
            i += 1;
        }
        if n >= 2 && tail[0] == 0 {
            tail[0] = 1;
        }
    }
}

fn prime_factors_u64(factors: &Factors) -> Vec<u64> {
    factors.iter().map(|(l, _)| l.to_u64().expect("factor fits u64")).collect()
}

pub fn build_context(spec: &FieldSpec) -> Result<FieldContext> {
    build_context_with(spec, ContextOptions::default())
}

pub fn build_context_with(spec: &FieldSpec, options: ContextOptions) -> Result<FieldContext> {
    let FieldSpec { p, e, m, .. } = *spec;
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    if e == 0 || m == 0 {
        return Err(Error::InvalidSpec("e and m must be positive".into()));
    }
    let n64 = e as u64 * m as u64;
    let size = u32::try_from(n64)
        .ok()
        .and_then(|n| p.checked_pow(n))
        .ok_or(Error::FieldTooLarge { p, n: n64 })?;
    let n = n64 as usize;
    let q = p.pow(e);
    let fp = Fp::new(p);

    let modulus = match &spec.modulus {
        None => canonical_modulus(&fp, n),
        Some(given) => {
            let mut f = given.clone();
            if f.len() == n {
                f.push(1);
            }
            if f.len() != n + 1 || f[n] != 1 {
                return Err(Error::BadModulus(format!("expected a monic polynomial of degree {n}")));
            }
            if f.iter().any(|&c| c >= p) {
                return Err(Error::BadModulus("coefficient out of range".into()));
            }
            if !fp_poly::is_irreducible(&fp, &f) {
                return Err(Error::BadModulus("modulus is reducible".into()));
            }
            f
        }
    };

    let mut ctx = FieldContext {
        spec: FieldSpec { p, e, m, modulus: Some(modulus.clone()) },
        options,
        p,
        e,
        m,
        n,
        q,
        size,
        fp,
        modulus,
        frob: Vec::new(),
        abs_trace: Vec::new(),
        subfields: Vec::new(),
        g0: FieldElement::zero(n),
        order_factors: Vec::new(),
        base: BaseField::placeholder(p),
        xm1: Factorization::default(),
        dlog: None,
        packed: None,
    };

    // x -> x^q on the power basis, then its powers
    let cols: Vec<Vec<u64>> = (0..n).map(|j| ctx.pow_u64(&ctx.basis_element(j), q).coeffs).collect();
    let f1 = Matrix::from_columns(n, &cols);
    let mut frob = vec![Matrix::identity(n)];
    for i in 1..m as usize {
        let next = f1.mul(&fp, &frob[i - 1]);
        frob.push(next);
    }
    ctx.frob = frob;

    // absolute trace as trace of the multiplication matrix
    let mut powers = vec![FieldElement::one(n)];
    for k in 1..2 * n {
        let next = ctx.mul(&powers[k - 1], &ctx.basis_element(1 % n));
        powers.push(next);
    }
    if n == 1 {
        ctx.abs_trace = vec![1];
    } else {
        ctx.abs_trace = (0..n)
            .map(|j| (0..n).fold(0, |acc, i| fp.add(acc, powers[i + j].coeffs[i])))
            .collect();
    }

    for d in divisors(m) {
        let (basis, pivots) = if d == m {
            (
                (0..n).map(|j| ctx.basis_element(j).coeffs).collect(),
                (0..n).collect(),
            )
        } else {
            kernel(&fp, &ctx.frob[d as usize].sub_identity(&fp))
        };
        if basis.len() != (e * d) as usize {
            return Err(Error::Inconsistent(format!(
                "fixed space of x^(q^{d}) has dimension {}",
                basis.len()
            )));
        }
        let mut trace = Matrix::zero(n, n);
        for i in 0..(m / d) as usize {
            let f = &ctx.frob[i * d as usize];
            for (t, &s) in trace.data.iter_mut().zip(&f.data) {
                *t = fp.add(*t, s);
            }
        }
        ctx.subfields.push(Subfield { d, basis, pivots, trace, size: q.pow(d) });
    }

    let nm1 = BigUint::from(size - 1);
    ctx.order_factors = intfactor::factor(&nm1, options.factor_budget)?;
    let primes = prime_factors_u64(&ctx.order_factors);
    let g0 = (1..size)
        .map(|enc| ctx.decode_unchecked(enc))
        .find(|b| primes.iter().all(|&l| ctx.pow_u64(b, (size - 1) / l) != FieldElement::one(n)))
        .ok_or_else(|| Error::Inconsistent("no primitive element found".into()))?;
    ctx.g0 = g0;

    ctx.base = BaseField::from_context(&ctx);
    let xm1 = PolyQ::x_pow_minus_one(&ctx.base, m as usize);
    ctx.xm1 = polyq::factor(&ctx, &xm1)?;

    if let Some(layout) = PackedLayout::new(p, n) {
        let cols: Vec<Vec<u64>> =
            (0..n).map(|j| ctx.mul(&ctx.basis_element(j), &ctx.g0).coeffs).collect();
        let mg = Matrix::from_columns(n, &cols);
        ctx.packed = Some(PackedField {
            mul_g0: PackedLinearMap::new(&layout, &mg, &layout),
            encoding: PackedIndex::new(&layout),
            layout,
        });
    }

    if size <= options.dlog_cap && size - 1 <= u32::MAX as u64 {
        ctx.dlog = Some(ctx.build_dlog());
    }
    Ok(ctx)
}

impl FieldContext {
    pub fn zero(&self) -> FieldElement {
        FieldElement::zero(self.n)
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::one(self.n)
    }

    /// The element `x^j` of the power basis.
    pub fn basis_element(&self, j: usize) -> FieldElement {
        if self.n == 1 {
            // F_p[x]/(x - c): x is the residue c
            let mut z = self.zero();
            z.coeffs[0] = if j == 0 { 1 } else { self.fp.neg(self.modulus[0]) };
            return z;
        }
        let mut z = self.zero();
        z.coeffs[j] = 1;
        z
    }

    pub fn check(&self, a: &FieldElement) -> Result<()> {
        if a.coeffs.len() != self.n || a.coeffs.iter().any(|&c| c >= self.p) {
            return Err(Error::InvalidElement(format!("{:?}", a.coeffs)));
        }
        Ok(())
    }

    pub fn encode(&self, a: &FieldElement) -> u64 {
        a.coeffs.iter().rev().fold(0u64, |acc, &c| acc * self.p + c)
    }

    fn decode_unchecked(&self, mut enc: u64) -> FieldElement {
        let mut c = vec![0; self.n];
        for v in c.iter_mut() {
            *v = enc % self.p;
            enc /= self.p;
        }
        FieldElement { coeffs: c }
    }

    pub fn decode(&self, enc: u64) -> Result<FieldElement> {
        if enc >= self.size {
            return Err(Error::InvalidElement(format!("encoding {enc} out of range")));
        }
        Ok(self.decode_unchecked(enc))
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement {
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| self.fp.add(x, y)).collect(),
        }
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement {
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| self.fp.sub(x, y)).collect(),
        }
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        FieldElement { coeffs: a.coeffs.iter().map(|&x| self.fp.neg(x)).collect() }
    }

    pub fn scale(&self, c: u64, a: &FieldElement) -> FieldElement {
        FieldElement { coeffs: a.coeffs.iter().map(|&x| self.fp.mul(c, x)).collect() }
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement { coeffs: mul_mod(&self.fp, &a.coeffs, &b.coeffs, &self.modulus) }
    }

    pub fn pow_u64(&self, a: &FieldElement, mut exp: u64) -> FieldElement {
        let mut acc = self.one();
        let mut b = a.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            exp >>= 1;
            if exp > 0 {
                b = self.mul(&b, &b);
            }
        }
        acc
    }

    /// `a^exp` for an arbitrary exponent; `0^0 = 1`.
    pub fn pow(&self, a: &FieldElement, exp: &BigUint) -> FieldElement {
        if exp.is_zero() {
            return self.one();
        }
        if a.is_zero() {
            return self.zero();
        }
        let r = (exp % (self.size - 1)).to_u64().unwrap();
        self.pow_u64(a, r)
    }

    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow_u64(a, self.size - 2))
    }

    pub fn subfield(&self, d: u32) -> Result<&Subfield> {
        self.subfields
            .iter()
            .find(|s| s.d == d)
            .ok_or(Error::NotADivisor { d, m: self.m })
    }

    /// `a^{q^i}` for any `i`, using `a^{q^m} = a`.
    pub fn conjugate(&self, a: &FieldElement, i: u64) -> FieldElement {
        let i = (i % self.m as u64) as usize;
        FieldElement { coeffs: self.frob[i].apply(&self.fp, &a.coeffs) }
    }

    /// `(a^{q^d}, a ∈ F_{q^d})`.
    pub fn frobenius_and_membership(&self, a: &FieldElement, d: u32) -> Result<(FieldElement, bool)> {
        self.subfield(d)?;
        let img = self.conjugate(a, d as u64);
        let fixed = img == *a;
        Ok((img, fixed))
    }

    pub fn in_subfield(&self, a: &FieldElement, d: u32) -> Result<bool> {
        Ok(self.frobenius_and_membership(a, d)?.1)
    }

    /// Position of `a ∈ F_{q^d}` in `[0, q^d)`.
    pub fn subfield_index(&self, a: &FieldElement, d: u32) -> Result<u64> {
        let s = self.subfield(d)?;
        if !self.in_subfield(a, d)? {
            return Err(Error::NotInSubfield(d));
        }
        Ok(s.pivots.iter().rev().fold(0u64, |acc, &c| acc * self.p + a.coeffs[c]))
    }

    pub fn subfield_element(&self, d: u32, mut idx: u64) -> Result<FieldElement> {
        let s = self.subfield(d)?;
        if idx >= s.size {
            return Err(Error::InvalidElement(format!("index {idx} outside F_q^{d}")));
        }
        let mut out = vec![0u64; self.n];
        for row in &s.basis {
            let digit = idx % self.p;
            idx /= self.p;
            if digit != 0 {
                for (o, &r) in out.iter_mut().zip(row) {
                    *o = self.fp.add(*o, self.fp.mul(digit, r));
                }
            }
        }
        Ok(FieldElement { coeffs: out })
    }

    /// `Tr_{F_{q^m}/F_p}`.
    pub fn abs_trace(&self, a: &FieldElement) -> u64 {
        a.coeffs
            .iter()
            .zip(&self.abs_trace)
            .fold(0, |acc, (&x, &t)| self.fp.add(acc, self.fp.mul(x, t)))
    }

    /// `Tr_{m/d}`, landing in F_{q^d}.
    pub fn trace(&self, a: &FieldElement, d: u32) -> Result<FieldElement> {
        let s = self.subfield(d)?;
        Ok(FieldElement { coeffs: s.trace.apply(&self.fp, &a.coeffs) })
    }

    pub fn order_minus_one(&self) -> u64 {
        self.size - 1
    }

    /// Exact multiplicative order and whether it equals `q^m - 1`.
    pub fn multiplicative_order(&self, a: &FieldElement) -> Result<(BigUint, bool)> {
        if a.is_zero() {
            return Err(Error::ZeroElement);
        }
        let one = self.one();
        let mut ord = self.size - 1;
        for (l, _) in &self.order_factors {
            let l = l.to_u64().unwrap();
            while ord % l == 0 && self.pow_u64(a, ord / l) == one {
                ord /= l;
            }
        }
        Ok((BigUint::from(ord), ord == self.size - 1))
    }

    pub fn is_primitive(&self, a: &FieldElement) -> bool {
        !a.is_zero()
            && self.order_factors.iter().all(|(l, _)| {
                self.pow_u64(a, (self.size - 1) / l.to_u64().unwrap()) != self.one()
            })
    }

    pub fn discrete_log(&self, a: &FieldElement) -> Result<u64> {
        if a.is_zero() {
            return Err(Error::ZeroElement);
        }
        let t = self.dlog.as_ref().ok_or(Error::NoDlogTable {
            size: self.size,
            cap: self.options.dlog_cap,
        })?;
        Ok(t.log[self.encode(a) as usize] as u64)
    }

    /// Calls `f(t, enc(g0^t))` for `t` in `start..end`, stepping by `g0`.
    pub fn for_each_power(&self, start: u64, end: u64, mut f: impl FnMut(u64, u64)) {
        if start >= end {
            return;
        }
        let first = self.pow_u64(&self.g0, start);
        match &self.packed {
            Some(pk) => {
                let mut x = pk.layout.pack(&first.coeffs);
                for t in start..end {
                    f(t, pk.encoding.index(x));
                    x = pk.mul_g0.apply(x);
                }
            }
            None => {
                let mut x = first;
                for t in start..end {
                    f(t, self.encode(&x));
                    x = self.mul(&x, &self.g0);
                }
            }
        }
    }

    fn build_dlog(&self) -> DlogTable {
        let nm1 = self.size - 1;
        let mut log = vec![0u32; self.size as usize];
        let mut exp = vec![0u64; nm1 as usize];
        self.for_each_power(0, nm1, |t, enc| {
            log[enc as usize] = t as u32;
            exp[t as usize] = enc;
        });
        DlogTable { log, exp }
    }

    /// Complete description for reports.
    pub fn summary(&self) -> FieldSummary {
        FieldSummary {
            p: self.p,
            e: self.e,
            m: self.m,
            q: self.q,
            size: self.size.to_string(),
            modulus: self.modulus.clone(),
            primitive_root: self.encode(&self.g0),
            order_factors: self
                .order_factors
                .iter()
                .map(|(l, a)| (l.to_string(), *a))
                .collect(),
            dlog_table: self.dlog.is_some(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub p: u64,
    pub e: u32,
    pub m: u32,
    pub q: u64,
    pub size: String,
    pub modulus: Vec<u64>,
    pub primitive_root: u64,
    pub order_factors: Vec<(String, u32)>,
    pub dlog_table: bool,
}

/// `q^k` as a big integer.
pub fn big_pow(q: u64, k: u64) -> BigUint {
    num_traits::pow(BigUint::from(q), k as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64, e: u32, m: u32) -> FieldContext {
        build_context(&FieldSpec::new(p, e, m)).unwrap()
    }

    #[test]
    fn small_contexts() {
        let c = ctx(2, 1, 15);
        assert_eq!(c.size, 32768);
        let f: Vec<String> = c.order_factors.iter().map(|(l, _)| l.to_string()).collect();
        assert_eq!(f, ["7", "31", "151"]);
        let c3 = ctx(3, 1, 1);
        assert_eq!(c3.encode(&c3.g0), 2);
        assert_eq!(build_context(&FieldSpec::new(4, 1, 2)).unwrap_err(), Error::NotPrime(4));
    }

    #[test]
    fn f4_arithmetic() {
        let c = ctx(2, 1, 2);
        assert_eq!(c.modulus, vec![1, 1, 1]);
        let x = c.decode(2).unwrap();
        assert_eq!(c.encode(&c.mul(&x, &x)), 3);
        let f8 = ctx(2, 1, 3);
        for enc in 1..8 {
            let a = f8.decode(enc).unwrap();
            assert_eq!(f8.pow_u64(&a, 7), f8.one());
            assert_eq!(f8.mul(&a, &f8.inv(&a).unwrap()), f8.one());
        }
        assert_eq!(f8.inv(&f8.zero()), Err(Error::ZeroInverse));
    }

    #[test]
    fn subfield_membership_counts() {
        let c = ctx(2, 1, 15);
        let count = (0..c.size)
            .filter(|&enc| c.in_subfield(&c.decode(enc).unwrap(), 3).unwrap())
            .count();
        assert_eq!(count, 8);
        assert!(matches!(
            c.frobenius_and_membership(&c.one(), 2),
            Err(Error::NotADivisor { d: 2, m: 15 })
        ));
        for enc in 0..8 {
            let a = c.subfield_element(3, enc).unwrap();
            assert_eq!(c.subfield_index(&a, 3).unwrap(), enc);
        }
    }

    #[test]
    fn dlog_round_trip() {
        let c = ctx(3, 2, 3);
        assert_eq!(c.discrete_log(&c.g0).unwrap(), 1);
        assert_eq!(c.discrete_log(&c.one()).unwrap(), 0);
        let t = c.dlog.as_ref().unwrap();
        for (k, &enc) in t.exp.iter().enumerate().step_by(37) {
            assert_eq!(t.log[enc as usize] as usize, k);
        }
    }

    #[test]
    fn explicit_modulus_validation() {
        let bad = FieldSpec { p: 2, e: 1, m: 2, modulus: Some(vec![1, 0]) };
        assert!(matches!(build_context(&bad), Err(Error::BadModulus(_))));
        let ok = FieldSpec { p: 2, e: 1, m: 3, modulus: Some(vec![1, 0, 1]) };
        let c = build_context(&ok).unwrap();
        assert_eq!(c.modulus, vec![1, 0, 1, 1]);
    }
}
