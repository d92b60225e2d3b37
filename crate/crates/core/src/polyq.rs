//! Polynomials over F_q and their factorization.
//!
//! Coefficients are elements of the base field F_q, addressed by their
//! index in `[0, q)` (see [`BaseField`]). For a prime base field the index
//! is just the residue.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::Fp;
use crate::error::{Error, Result};
use crate::field::{big_pow, mul_mod, FieldContext};

const TABLE_LIMIT: u64 = 1 << 20;

#[derive(Clone, Debug)]
enum Kind {
    Prime,
    Table { log: Vec<u32>, exp: Vec<u64> },
    Embedded,
}

/// Arithmetic in F_q on indices in `[0, q)`.
///
/// The index of an element is the base-`p` integer whose digits are its
/// coordinates at the pivot columns of the echelon basis of F_q inside
/// F_{q^m}. Prime fields use residues directly; small extensions use
/// log/exp tables; anything larger multiplies inside the big field.
#[derive(Clone, Debug)]
pub struct BaseField {
    pub p: u64,
    pub e: u32,
    pub q: u64,
    fp: Fp,
    kind: Kind,
    basis: Vec<Vec<u64>>,
    pivots: Vec<usize>,
    modulus: Vec<u64>,
}

impl BaseField {
    pub(crate) fn placeholder(p: u64) -> Self {
        BaseField {
            p,
            e: 1,
            q: p,
            fp: Fp::new(p),
            kind: Kind::Prime,
            basis: Vec::new(),
            pivots: Vec::new(),
            modulus: Vec::new(),
        }
    }

    pub(crate) fn from_context(ctx: &FieldContext) -> Self {
        let sub = &ctx.subfields[0];
        let mut b = BaseField {
            p: ctx.p,
            e: ctx.e,
            q: ctx.q,
            fp: ctx.fp,
            kind: Kind::Embedded,
            basis: sub.basis.clone(),
            pivots: sub.pivots.clone(),
            modulus: ctx.modulus.clone(),
        };
        if ctx.e == 1 {
            b.kind = Kind::Prime;
        } else if ctx.q <= TABLE_LIMIT {
            // gamma generates F_q^*
            let gamma = ctx.pow_u64(&ctx.g0, (ctx.size - 1) / (ctx.q - 1));
            let mut log = vec![0u32; ctx.q as usize];
            let mut exp = vec![0u64; (ctx.q - 1) as usize];
            let mut x = ctx.one();
            for (k, slot) in exp.iter_mut().enumerate() {
                let idx = b.project(&x.coeffs);
                *slot = idx;
                log[idx as usize] = k as u32;
                x = ctx.mul(&x, &gamma);
            }
            b.kind = Kind::Table { log, exp };
        }
        b
    }

    /// Coordinates in F_{q^m} of the element with index `idx`.
    pub fn embed(&self, mut idx: u64) -> Vec<u64> {
        if self.basis.is_empty() {
            return vec![idx];
        }
        let n = self.modulus.len() - 1;
        let mut out = vec![0u64; n];
        for row in &self.basis {
            let digit = idx % self.p;
            idx /= self.p;
            if digit != 0 {
                for (o, &r) in out.iter_mut().zip(row) {
                    *o = self.fp.add(*o, self.fp.mul(digit, r));
                }
            }
        }
        out
    }

    /// Index of an F_{q^m} element known to lie in F_q.
    pub fn project(&self, coords: &[u64]) -> u64 {
        self.pivots.iter().rev().fold(0u64, |acc, &c| acc * self.p + coords[c])
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        if self.e == 1 {
            self.fp.add(a, b)
        } else if self.p == 2 {
            a ^ b
        } else {
            self.digitwise(a, b, |x, y| self.fp.add(x, y))
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if self.e == 1 {
            self.fp.sub(a, b)
        } else if self.p == 2 {
            a ^ b
        } else {
            self.digitwise(a, b, |x, y| self.fp.sub(x, y))
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        self.sub(0, a)
    }

    fn digitwise(&self, mut a: u64, mut b: u64, f: impl Fn(u64, u64) -> u64) -> u64 {
        let mut out = 0u64;
        let mut scale = 1u64;
        for _ in 0..self.e {
            out += f(a % self.p, b % self.p) * scale;
            a /= self.p;
            b /= self.p;
            scale = scale.wrapping_mul(self.p);
        }
        out
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        match &self.kind {
            Kind::Prime => self.fp.mul(a, b),
            Kind::Table { log, exp } => {
                if a == 0 || b == 0 {
                    0
                } else {
                    let k = (log[a as usize] as u64 + log[b as usize] as u64) % (self.q - 1);
                    exp[k as usize]
                }
            }
            Kind::Embedded => {
                let prod = mul_mod(&self.fp, &self.embed(a), &self.embed(b), &self.modulus);
                self.project(&prod)
            }
        }
    }

    pub fn pow(&self, a: u64, mut exp: u128) -> u64 {
        let mut acc = 1;
        let mut b = a;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        match &self.kind {
            Kind::Prime => self.fp.inv(a),
            Kind::Table { log, exp } => {
                let k = (self.q - 1 - log[a as usize] as u64) % (self.q - 1);
                exp[k as usize]
            }
            Kind::Embedded => self.pow(a, self.q as u128 - 2),
        }
    }

    /// The unique `b` with `b^p = a`.
    pub fn pth_root(&self, a: u64) -> u64 {
        self.pow(a, (self.q / self.p) as u128)
    }
}

/// Polynomial over F_q, constant term first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolyQ {
    pub coeffs: Vec<u64>,
}

impl PolyQ {
    pub fn new(mut coeffs: Vec<u64>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        PolyQ { coeffs }
    }

    pub fn zero() -> Self {
        PolyQ { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        PolyQ { coeffs: vec![1] }
    }

    pub fn x() -> Self {
        PolyQ { coeffs: vec![0, 1] }
    }

    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0; k + 1];
        c[k] = 1;
        PolyQ { coeffs: c }
    }

    pub fn x_pow_minus_one(base: &BaseField, m: usize) -> Self {
        let mut c = vec![0; m + 1];
        c[m] = 1;
        c[0] = base.sub(c[0], 1);
        PolyQ::new(c)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree, with `deg 0 = 0` for convenience in size computations.
    pub fn deg(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn lead(&self) -> u64 {
        *self.coeffs.last().unwrap_or(&0)
    }

    pub fn is_monic(&self) -> bool {
        self.lead() == 1
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    /// Ordering by degree, then by the coefficient vector read as a base-q
    /// integer with the constant term least significant.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.coeffs
            .len()
            .cmp(&other.coeffs.len())
            .then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }

    /// Human-readable form such as `x^4+x^3+1`.
    pub fn render(&self, base: &BaseField) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let minus_one = base.neg(1);
        let mut out = String::new();
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let neg = c == minus_one && base.p != 2;
            if neg {
                out.push('-');
            } else if !out.is_empty() {
                out.push('+');
            }
            let mono = match k {
                0 => String::new(),
                1 => "x".into(),
                _ => format!("x^{k}"),
            };
            if c == 1 || neg {
                if mono.is_empty() {
                    out.push('1');
                }
            } else {
                out.push_str(&c.to_string());
            }
            out.push_str(&mono);
        }
        out
    }

    /// Parses the output of [`PolyQ::render`] (also accepting `*` between
    /// coefficient and `x`, spaces, and repeated monomials).
    pub fn parse(base: &BaseField, s: &str) -> Result<PolyQ> {
        let bad = || Error::InvalidPoly(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(bad());
        }
        if t == "0" {
            return Ok(PolyQ::zero());
        }
        let mut terms = Vec::new();
        let mut cur = String::new();
        for ch in t.chars() {
            if (ch == '+' || ch == '-') && !cur.is_empty() && !cur.ends_with('^') {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        terms.push(cur);
        let mut coeffs: Vec<u64> = Vec::new();
        for term in terms {
            let (neg, body) = match term.strip_prefix('-') {
                Some(b) => (true, b),
                None => (false, term.strip_prefix('+').unwrap_or(&term)),
            };
            let (coef, k) = match body.find('x') {
                None => (body.parse::<u64>().map_err(|_| bad())?, 0usize),
                Some(pos) => {
                    let cs = body[..pos].trim_end_matches('*');
                    let coef = if cs.is_empty() { 1 } else { cs.parse::<u64>().map_err(|_| bad())? };
                    let rest = &body[pos + 1..];
                    let k = if rest.is_empty() {
                        1
                    } else {
                        rest.strip_prefix('^').ok_or_else(bad)?.parse::<usize>().map_err(|_| bad())?
                    };
                    (coef, k)
                }
            };
            if coef >= base.q {
                return Err(bad());
            }
            if coeffs.len() <= k {
                coeffs.resize(k + 1, 0);
            }
            let c = if neg { base.neg(coef) } else { coef };
            coeffs[k] = base.add(coeffs[k], c);
        }
        Ok(PolyQ::new(coeffs))
    }

    pub fn check(&self, base: &BaseField) -> Result<()> {
        if self.coeffs.last() == Some(&0) || self.coeffs.iter().any(|&c| c >= base.q) {
            return Err(Error::InvalidPoly(format!("{:?}", self.coeffs)));
        }
        Ok(())
    }
}

pub fn add(b: &BaseField, f: &PolyQ, g: &PolyQ) -> PolyQ {
    let n = f.coeffs.len().max(g.coeffs.len());
    PolyQ::new(
        (0..n)
            .map(|i| b.add(*f.coeffs.get(i).unwrap_or(&0), *g.coeffs.get(i).unwrap_or(&0)))
            .collect(),
    )
}

pub fn sub(b: &BaseField, f: &PolyQ, g: &PolyQ) -> PolyQ {
    let n = f.coeffs.len().max(g.coeffs.len());
    PolyQ::new(
        (0..n)
            .map(|i| b.sub(*f.coeffs.get(i).unwrap_or(&0), *g.coeffs.get(i).unwrap_or(&0)))
            .collect(),
    )
}

pub fn scale(b: &BaseField, c: u64, f: &PolyQ) -> PolyQ {
    PolyQ::new(f.coeffs.iter().map(|&x| b.mul(c, x)).collect())
}

pub fn mul(b: &BaseField, f: &PolyQ, g: &PolyQ) -> PolyQ {
    if f.is_zero() || g.is_zero() {
        return PolyQ::zero();
    }
    let mut out = vec![0u64; f.coeffs.len() + g.coeffs.len() - 1];
    for (i, &x) in f.coeffs.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in g.coeffs.iter().enumerate() {
            if y != 0 {
                out[i + j] = b.add(out[i + j], b.mul(x, y));
            }
        }
    }
    PolyQ::new(out)
}

/// Quotient and remainder of `f` by nonzero `g`.
pub fn divrem(b: &BaseField, f: &PolyQ, g: &PolyQ) -> (PolyQ, PolyQ) {
    let dg = g.degree().expect("division by zero polynomial");
    let inv = b.inv(g.lead());
    let mut r = f.coeffs.clone();
    if r.len() <= dg {
        return (PolyQ::zero(), f.clone());
    }
    let mut quot = vec![0u64; r.len() - dg];
    for top in (dg..r.len()).rev() {
        let c = b.mul(r[top], inv);
        if c == 0 {
            continue;
        }
        let shift = top - dg;
        quot[shift] = c;
        for (j, &gj) in g.coeffs.iter().enumerate() {
            if gj != 0 {
                r[shift + j] = b.sub(r[shift + j], b.mul(c, gj));
            }
        }
    }
    r.truncate(dg);
    (PolyQ::new(quot), PolyQ::new(r))
}

pub fn rem(b: &BaseField, f: &PolyQ, g: &PolyQ) -> PolyQ {
    divrem(b, f, g).1
}

pub fn monic(b: &BaseField, f: &PolyQ) -> PolyQ {
    if f.is_zero() {
        return PolyQ::zero();
    }
    scale(b, b.inv(f.lead()), f)
}

/// Monic gcd; `gcd(f, 0) = monic(f)` and `gcd(0, 0) = 0`.
pub fn gcd(b: &BaseField, f: &PolyQ, g: &PolyQ) -> PolyQ {
    let mut a = f.clone();
    let mut c = g.clone();
    while !c.is_zero() {
        let r = rem(b, &a, &c);
        a = c;
        c = r;
    }
    monic(b, &a)
}

pub fn lcm(b: &BaseField, f: &PolyQ, g: &PolyQ) -> PolyQ {
    if f.is_zero() || g.is_zero() {
        return PolyQ::zero();
    }
    let d = gcd(b, f, g);
    monic(b, &divrem(b, &mul(b, f, g), &d).0)
}

pub fn derivative(b: &BaseField, f: &PolyQ) -> PolyQ {
    PolyQ::new(
        f.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| b.mul(c, (i as u64) % b.p))
            .collect(),
    )
}

pub fn mulmod(b: &BaseField, f: &PolyQ, g: &PolyQ, m: &PolyQ) -> PolyQ {
    rem(b, &mul(b, f, g), m)
}

pub fn powmod(b: &BaseField, f: &PolyQ, exp: &BigUint, m: &PolyQ) -> PolyQ {
    let mut acc = rem(b, &PolyQ::one(), m);
    let base = rem(b, f, m);
    for i in (0..exp.bits()).rev() {
        acc = mulmod(b, &acc, &acc, m);
        if exp.bit(i) {
            acc = mulmod(b, &acc, &base, m);
        }
    }
    acc
}

fn frobenius_mod(b: &BaseField, f: &PolyQ, m: &PolyQ) -> PolyQ {
    powmod(b, f, &BigUint::from(b.q), m)
}

/// `f^{1/p}` for `f` with zero derivative.
fn pth_root_poly(b: &BaseField, f: &PolyQ) -> PolyQ {
    let p = b.p as usize;
    PolyQ::new(f.coeffs.iter().step_by(p).map(|&c| b.pth_root(c)).collect())
}

/// Monic `f` as a product of coprime squarefree parts `(part, multiplicity)`.
fn squarefree_parts(b: &BaseField, f: &PolyQ) -> Vec<(PolyQ, u32)> {
    let mut out = Vec::new();
    if f.deg() == 0 {
        return out;
    }
    let df = derivative(b, f);
    if df.is_zero() {
        for (g, k) in squarefree_parts(b, &pth_root_poly(b, f)) {
            out.push((g, k * b.p as u32));
        }
        return out;
    }
    let mut c = gcd(b, f, &df);
    let mut w = divrem(b, f, &c).0;
    let mut i = 1;
    while !w.is_one() {
        let y = gcd(b, &w, &c);
        let fac = divrem(b, &w, &y).0;
        if !fac.is_one() {
            out.push((fac, i));
        }
        i += 1;
        w = y;
        c = divrem(b, &c, &w).0;
    }
    if !c.is_one() {
        for (g, k) in squarefree_parts(b, &pth_root_poly(b, &c)) {
            out.push((g, k * b.p as u32));
        }
    }
    out
}

/// Splits a squarefree monic polynomial into `(product of degree-d
/// irreducibles, d)` pieces.
fn distinct_degree(b: &BaseField, f: &PolyQ) -> Vec<(PolyQ, usize)> {
    let mut out = Vec::new();
    let mut g = f.clone();
    let x = PolyQ::x();
    let mut w = rem(b, &x, &g);
    let mut d = 0;
    while g.deg() >= 2 * (d + 1) {
        d += 1;
        w = frobenius_mod(b, &w, &g);
        let h = gcd(b, &g, &sub(b, &w, &x));
        if !h.is_one() {
            g = divrem(b, &g, &h).0;
            w = rem(b, &w, &g);
            out.push((h, d));
        }
    }
    if g.deg() > 0 {
        let dg = g.deg();
        out.push((g, dg));
    }
    out
}

fn random_poly(b: &BaseField, deg: usize, rng: &mut ChaCha8Rng) -> PolyQ {
    PolyQ::new((0..deg).map(|_| rng.gen_range(0..b.q)).collect())
}

/// Splits a product of distinct degree-`d` irreducibles.
fn equal_degree(b: &BaseField, f: &PolyQ, d: usize, rng: &mut ChaCha8Rng, out: &mut Vec<PolyQ>) {
    if f.deg() == d {
        out.push(f.clone());
        return;
    }
    let qd = big_pow(b.q, d as u64);
    loop {
        let a = random_poly(b, f.deg(), rng);
        if a.deg() == 0 {
            continue;
        }
        let t = if b.p == 2 {
            // absolute trace a + a^2 + ... + a^{2^{e d - 1}}
            let mut acc = a.clone();
            let mut cur = a.clone();
            for _ in 1..(b.e as usize * d) {
                cur = mulmod(b, &cur, &cur, f);
                acc = add(b, &acc, &cur);
            }
            acc
        } else {
            let half: BigUint = (&qd - 1u32) >> 1;
            sub(b, &powmod(b, &a, &half, f), &PolyQ::one())
        };
        let g = gcd(b, f, &t);
        if !g.is_zero() && g.deg() > 0 && g.deg() < f.deg() {
            let h = divrem(b, f, &g).0;
            equal_degree(b, &g, d, rng, out);
            equal_degree(b, &h, d, rng, out);
            return;
        }
    }
}

fn prime_divisors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin's test over F_q for a monic polynomial.
pub fn is_irreducible(b: &BaseField, f: &PolyQ) -> bool {
    let n = match f.degree() {
        None | Some(0) => return false,
        Some(n) => n,
    };
    if n == 1 {
        return true;
    }
    let x = PolyQ::x();
    let mut frob = vec![rem(b, &x, f)];
    for i in 1..=n {
        let next = frobenius_mod(b, &frob[i - 1], f);
        frob.push(next);
    }
    if sub(b, &frob[n], &x) != PolyQ::zero() {
        return false;
    }
    prime_divisors(n)
        .into_iter()
        .all(|r| gcd(b, &sub(b, &frob[n / r], &x), f).is_one())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub unit: u64,
    pub factors: Vec<(PolyQ, u32)>,
}

impl Factorization {
    pub fn expand(&self, b: &BaseField) -> PolyQ {
        let mut acc = PolyQ::new(vec![self.unit]);
        for (f, k) in &self.factors {
            for _ in 0..*k {
                acc = mul(b, &acc, f);
            }
        }
        acc
    }

    pub fn omega(&self) -> usize {
        self.factors.len()
    }
}

fn seed_for(ctx: &FieldContext, f: &PolyQ) -> u64 {
    // FNV-1a over the field description and the coefficients
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        for byte in v.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(ctx.p);
    eat(ctx.e as u64);
    eat(ctx.m as u64);
    for &c in &ctx.modulus {
        eat(c);
    }
    for &c in &f.coeffs {
        eat(c);
    }
    h
}

/// Complete factorization of a nonzero polynomial into monic irreducibles.
pub fn factor(ctx: &FieldContext, f: &PolyQ) -> Result<Factorization> {
    let b = &ctx.base;
    f.check(b)?;
    if f.is_zero() {
        return Err(Error::InvalidPoly("cannot factor the zero polynomial".into()));
    }
    let unit = f.lead();
    let g = monic(b, f);
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(ctx, f));
    let mut counts: BTreeMap<Vec<u64>, u32> = BTreeMap::new();
    for (part, k) in squarefree_parts(b, &g) {
        for (block, d) in distinct_degree(b, &part) {
            let mut irr = Vec::new();
            equal_degree(b, &block, d, &mut rng, &mut irr);
            for r in irr {
                *counts.entry(r.coeffs).or_insert(0) += k;
            }
        }
    }
    let mut factors: Vec<(PolyQ, u32)> = counts.into_iter().map(|(c, k)| (PolyQ { coeffs: c }, k)).collect();
    factors.sort_by(|a, b| a.0.canonical_cmp(&b.0));
    let out = Factorization { unit, factors };
    if out.expand(b) != *f || !out.factors.iter().all(|(r, _)| is_irreducible(b, r)) {
        return Err(Error::Inconsistent("factorization does not reproduce its input".into()));
    }
    Ok(out)
}

/// `Φ(f) = |(F_q[x]/<f>)^*|`.
pub fn phi_of(q: u64, fac: &Factorization) -> BigUint {
    fac.factors.iter().fold(BigUint::one(), |acc, (r, a)| {
        let qd = big_pow(q, r.deg() as u64);
        acc * (&qd - 1u32) * num_traits::pow(qd, (*a - 1) as usize)
    })
}

/// `μ'(f)`: `(-1)^s` for a product of `s` distinct irreducibles, else 0.
pub fn mu_of(fac: &Factorization) -> i8 {
    if fac.factors.iter().any(|(_, a)| *a > 1) {
        0
    } else if fac.factors.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `W(f) = 2^{ω(f)}`.
pub fn w_of(fac: &Factorization) -> BigUint {
    BigUint::one() << fac.factors.len()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiMuW {
    pub phi: BigUint,
    pub mu: i8,
    pub w: BigUint,
}

pub fn phi_mu_w(ctx: &FieldContext, f: &PolyQ) -> Result<PhiMuW> {
    if f.is_zero() || !f.is_monic() {
        return Err(Error::InvalidPoly("expected a nonzero monic polynomial".into()));
    }
    let fac = factor(ctx, f)?;
    Ok(PhiMuW { phi: phi_of(ctx.q, &fac), mu: mu_of(&fac), w: w_of(&fac) })
}

/// All monic divisors (or all squarefree ones), ordered canonically.
pub fn divisor_lattice(ctx: &FieldContext, f: &PolyQ, squarefree_only: bool) -> Result<Vec<PolyQ>> {
    if f.is_zero() || !f.is_monic() {
        return Err(Error::InvalidPoly("expected a nonzero monic polynomial".into()));
    }
    let fac = factor(ctx, f)?;
    divisors_from(ctx, &fac, squarefree_only)
}

pub fn divisors_from(ctx: &FieldContext, fac: &Factorization, squarefree_only: bool) -> Result<Vec<PolyQ>> {
    let b = &ctx.base;
    let count = fac.factors.iter().fold(1u128, |acc, (_, a)| {
        acc.saturating_mul(if squarefree_only { 2 } else { *a as u128 + 1 })
    });
    if count > ctx.options.divisor_cap {
        return Err(Error::DivisorCap { count, cap: ctx.options.divisor_cap });
    }
    let mut out = vec![PolyQ::one()];
    for (r, a) in &fac.factors {
        let top = if squarefree_only { 1 } else { *a };
        let mut next = Vec::with_capacity(out.len() * (top as usize + 1));
        for d in &out {
            let mut cur = d.clone();
            next.push(cur.clone());
            for _ in 0..top {
                cur = mul(b, &cur, r);
                next.push(cur.clone());
            }
        }
        out = next;
    }
    out.sort_by(|a, b| a.canonical_cmp(b));
    Ok(out)
}

/// Result of a binary polynomial operation requested by name.
pub fn poly_op(ctx: &FieldContext, op: &str, f: &PolyQ, g: &PolyQ) -> Result<PolyQ> {
    let b = &ctx.base;
    f.check(b)?;
    g.check(b)?;
    Ok(match op {
        "add" => add(b, f, g),
        "sub" => sub(b, f, g),
        "mul" => mul(b, f, g),
        "mod" => {
            if g.is_zero() {
                return Err(Error::InvalidPoly("reduction modulo zero".into()));
            }
            rem(b, f, g)
        }
        "div" => {
            if g.is_zero() {
                return Err(Error::InvalidPoly("division by zero".into()));
            }
            divrem(b, f, g).0
        }
        "gcd" => gcd(b, f, g),
        "lcm" => lcm(b, f, g),
        other => return Err(Error::Unsupported(format!("polynomial operation {other}"))),
    })
}

/// `lcm(x^{d_1}-1, ..., x^{d_k}-1)`.
pub fn lcm_of_xd_minus_one(b: &BaseField, ds: &[u32]) -> PolyQ {
    ds.iter().fold(PolyQ::one(), |acc, &d| lcm(b, &acc, &PolyQ::x_pow_minus_one(b, d as usize)))
}

impl PartialOrd for PolyQ {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PolyQ {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_cmp(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_context, FieldSpec};

    fn ctx(p: u64, e: u32, m: u32) -> FieldContext {
        build_context(&FieldSpec::new(p, e, m)).unwrap()
    }

    fn degrees(f: &Factorization) -> Vec<usize> {
        f.factors.iter().map(|(r, _)| r.deg()).collect()
    }

    #[test]
    fn cyclotomic_factor_degrees() {
        let c = ctx(2, 1, 15);
        assert_eq!(degrees(&c.xm1), [1, 2, 4, 4, 4]);
        let c = ctx(5, 1, 6);
        assert_eq!(degrees(&c.xm1), [1, 1, 2, 2]);
        let f4 = ctx(2, 2, 1);
        let f = PolyQ::new(vec![1, 1, 1]);
        let fac = factor(&f4, &f).unwrap();
        assert_eq!(degrees(&fac), [1, 1]);
    }

    #[test]
    fn lcm_and_gcd_examples() {
        let c = ctx(5, 1, 1);
        let b = &c.base;
        let l = lcm(b, &PolyQ::x_pow_minus_one(b, 2), &PolyQ::x_pow_minus_one(b, 3));
        // (x-1)(x+1)(x^2+x+1) = x^4 + x^3 - x - 1
        assert_eq!(l.coeffs, vec![4, 4, 0, 1, 1]);
        let c2 = ctx(2, 1, 1);
        let l2 = lcm(&c2.base, &PolyQ::x_pow_minus_one(&c2.base, 3), &PolyQ::x_pow_minus_one(&c2.base, 5));
        assert_eq!(l2.deg(), 7);
        let f = PolyQ::new(vec![2, 0, 3]);
        assert_eq!(gcd(b, &f, &f), monic(b, &f));
        assert_eq!(gcd(b, &f, &PolyQ::zero()), monic(b, &f));
    }

    #[test]
    fn phi_mu_w_examples() {
        let c = ctx(2, 1, 15);
        let xm1 = PolyQ::x_pow_minus_one(&c.base, 15);
        let r = phi_mu_w(&c, &xm1).unwrap();
        assert_eq!(r.phi, BigUint::from(10125u32));
        assert_eq!(r.w, BigUint::from(32u32));
        let c = ctx(5, 1, 6);
        let r = phi_mu_w(&c, &PolyQ::x_pow_minus_one(&c.base, 6)).unwrap();
        assert_eq!(r.phi, BigUint::from(9216u32));
        assert_eq!(r.w, BigUint::from(16u32));
        assert_eq!(phi_mu_w(&c, &PolyQ::monomial(2)).unwrap().mu, 0);
        assert_eq!(phi_mu_w(&c, &PolyQ::x()).unwrap().mu, -1);
        assert_eq!(phi_mu_w(&c, &PolyQ::one()).unwrap().mu, 1);
    }

    #[test]
    fn divisor_lattice_counts() {
        let c = ctx(2, 1, 15);
        let xm1 = PolyQ::x_pow_minus_one(&c.base, 15);
        assert_eq!(divisor_lattice(&c, &xm1, true).unwrap().len(), 32);
        assert_eq!(divisor_lattice(&c, &PolyQ::one(), false).unwrap(), vec![PolyQ::one()]);
        let c = ctx(5, 1, 6);
        let xm1 = PolyQ::x_pow_minus_one(&c.base, 6);
        assert_eq!(divisor_lattice(&c, &xm1, false).unwrap().len(), 16);
    }

    #[test]
    fn repeated_factors_in_characteristic_dividing_m() {
        let c = ctx(3, 1, 6);
        // x^6 - 1 = (x-1)^3 (x+1)^3 over F_3
        assert_eq!(c.xm1.factors.len(), 2);
        assert!(c.xm1.factors.iter().all(|(_, k)| *k == 3));
        let sq = divisor_lattice(&c, &PolyQ::x_pow_minus_one(&c.base, 6), false).unwrap();
        assert_eq!(sq.len(), 16);
    }

    #[test]
    fn render_and_parse() {
        let c = ctx(2, 1, 4);
        let f = PolyQ::new(vec![1, 0, 0, 1, 1]);
        assert_eq!(f.render(&c.base), "x^4+x^3+1");
        assert_eq!(PolyQ::parse(&c.base, "x^4+x^3+1").unwrap(), f);
        let c5 = ctx(5, 1, 1);
        let g = PolyQ::x_pow_minus_one(&c5.base, 6);
        assert_eq!(g.render(&c5.base), "x^6-1");
        assert_eq!(PolyQ::parse(&c5.base, "x^6 - 1").unwrap(), g);
        assert_eq!(PolyQ::parse(&c5.base, "3*x^2+2x").unwrap().coeffs, vec![0, 2, 3]);
    }

    #[test]
    fn extension_base_field() {
        let c = ctx(3, 2, 4);
        let b = &c.base;
        for a in 1..9 {
            assert_eq!(b.mul(a, b.inv(a)), 1);
            assert_eq!(b.pow(b.pth_root(a), 3), a);
        }
        let xm1 = PolyQ::x_pow_minus_one(b, 4);
        // q = 9 ≡ 1 mod 4, so x^4-1 splits into linear factors
        assert_eq!(degrees(&factor(&c, &xm1).unwrap()), [1, 1, 1, 1]);
    }
}
