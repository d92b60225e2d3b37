//! Explicit bounds and the sufficiency criteria built on them.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::prime_power;
use crate::error::{Error, Result};
use crate::hp::{sci_from_log10, HiDec};
use crate::intfactor::{self, sieve};
use crate::linearized::{lambda_inclusion_exclusion, validate_tuple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Sufficient,
    Insufficient,
    ImpossibleForAllQ,
    OutsideScope,
    SufficientForLargeQUnquantified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Bounded,
    LogSpace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PaperTable,
    Computed,
}

/// A prime power given either exactly or through `log10 q`.
#[derive(Clone, Debug)]
pub enum QValue {
    Int(BigUint),
    Log10 { value: HiDec, text: String },
}

impl QValue {
    /// Accepts `1334`, `1e24072856` or `2.5e30`. Values written with an
    /// exponent are kept in logarithmic form.
    pub fn parse(s: &str) -> Result<QValue> {
        let s = s.trim();
        let bad = || Error::InvalidSpec(format!("cannot parse q = {s:?}"));
        if let Some((mant, exp)) = s.split_once(['e', 'E']) {
            let exp: i64 = exp.parse().map_err(|_| bad())?;
            if mant.is_empty() || !mant.chars().all(|c| c.is_ascii_digit() || c == '.') {
                return Err(bad());
            }
            let mv = HiDec::from_decimal(mant);
            if !mv.certainly_ge(&HiDec::from_int(1)) {
                return Err(bad());
            }
            let value = mv.log10().add(&HiDec::from_int(exp));
            return Ok(QValue::Log10 { value, text: s.to_string() });
        }
        let v: BigUint = s.parse().map_err(|_| bad())?;
        if v < BigUint::from(2u32) {
            return Err(bad());
        }
        Ok(QValue::Int(v))
    }

    pub fn from_u64(q: u64) -> QValue {
        QValue::Int(BigUint::from(q))
    }

    pub fn ln(&self) -> HiDec {
        match self {
            QValue::Int(v) => HiDec::from_biguint(v).ln(),
            QValue::Log10 { value, .. } => value.mul(&HiDec::ln10()),
        }
    }

    pub fn log10(&self) -> HiDec {
        match self {
            QValue::Int(v) => HiDec::from_biguint(v).log10(),
            QValue::Log10 { value, .. } => value.clone(),
        }
    }

    pub fn as_int(&self) -> Option<&BigUint> {
        match self {
            QValue::Int(v) => Some(v),
            QValue::Log10 { .. } => None,
        }
    }
}

impl fmt::Display for QValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QValue::Int(v) => write!(f, "{v}"),
            QValue::Log10 { text, .. } => write!(f, "{text}"),
        }
    }
}

fn ratio_string(r: &Ratio<i64>) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn ratio_hi(r: &Ratio<i64>) -> HiDec {
    HiDec::from_ratio(*r.numer(), *r.denom())
}

/// `W(n) = 2^{ω(n)}`.
pub fn w_int(n: &BigUint, budget: u64) -> Result<BigUint> {
    if n.is_zero() {
        return Err(Error::InvalidSpec("W(n) needs n >= 1".into()));
    }
    Ok(intfactor::w_of(&intfactor::factor(n, budget)?))
}

// ---------------------------------------------------------------------------
// Sieve constants

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SieveConstants {
    pub nu: u32,
    /// Rendered as `4.2445e14`.
    pub c_nu: String,
    /// Upper bound for `log10 C_nu`.
    pub log10_c_nu: f64,
    pub prime_limit: String,
    pub prime_count: Option<u64>,
    pub provenance: Provenance,
    #[serde(skip)]
    ln_nominal: f64,
    #[serde(skip)]
    ln_upper_f64: Option<f64>,
    #[serde(skip)]
    table: Option<(&'static str, i64, &'static str)>,
}

/// Stored values with the next representable 5-digit mantissa, used as
/// a safe upper bound.
const C_TABLE: [(u32, &str, i64, &str); 3] = [
    (11, "4.2445", 14, "4.2446"),
    (12, "1.0573", 24, "1.0574"),
    (31, "2.4015", 1553069, "2.4016"),
];

pub const ROUTINE_MAX_NU: u32 = 26;
pub const EXTENDED_MAX_NU: u32 = 31;

impl SieveConstants {
    /// Enclosure of an upper bound for `ln C_nu`.
    pub fn ln_upper(&self) -> HiDec {
        match (self.ln_upper_f64, self.table) {
            (Some(v), _) => HiDec::from_f64(v),
            (None, Some((_, e, up))) => table_ln(up, e).upper(),
            _ => unreachable!(),
        }
    }

    /// `ln C_nu` from the stored mantissa (table) or the computed sum.
    pub fn ln_nominal(&self) -> HiDec {
        match self.table {
            Some((mant, e, _)) if self.provenance == Provenance::PaperTable => table_ln(mant, e),
            _ => HiDec::from_f64(self.ln_nominal),
        }
    }
}

fn table_ln(mant: &str, e: i64) -> HiDec {
    HiDec::from_decimal(mant).ln().add(&HiDec::ln10().mul_int(e))
}

fn render_from_log10(l: f64) -> String {
    let e = l.floor();
    format!("{:.4}e{}", 10f64.powf(l - e), e as i64)
}

/// Upper bound for `sum_{p <= limit} (ln 2 - ln(p)/nu)` with every
/// rounding step pushed upward, plus the prime count. Segments are summed
/// in order so the result is deterministic.
fn sieve_log_sum(limit: u64, nu: u32) -> (f64, u64) {
    let root = (limit as f64).sqrt() as u64 + 1;
    let base: Vec<u64> = sieve(root as usize).into_iter().map(u64::from).collect();
    const SEG: u64 = 1 << 20;
    let segments = limit / SEG + 1;
    let ln2_up = std::f64::consts::LN_2.next_up();
    let nu_f = nu as f64;
    let term = |p: u64| {
        let lp = (p as f64).ln().next_down().next_down();
        (ln2_up - (lp / nu_f).next_down()).next_up()
    };
    let parts: Vec<(f64, u64)> = (0..segments)
        .into_par_iter()
        .map(|s| {
            let lo = s * SEG;
            let hi = ((s + 1) * SEG).min(limit + 1);
            if lo >= hi {
                return (0.0, 0);
            }
            let mut composite = vec![false; (hi - lo) as usize];
            for &p in &base {
                if p * p >= hi {
                    break;
                }
                let start = (p * p).max(lo.div_ceil(p) * p);
                let mut j = start;
                while j < hi {
                    composite[(j - lo) as usize] = true;
                    j += p;
                }
            }
            let mut sum = 0.0f64;
            let mut count = 0u64;
            for (i, &c) in composite.iter().enumerate() {
                let v = lo + i as u64;
                if !c && v >= 2 {
                    sum = (sum + term(v)).next_up();
                    count += 1;
                }
            }
            (sum, count)
        })
        .collect();
    parts.iter().fold((0.0, 0), |(s, c), &(ps, pc)| ((s + ps).next_up(), c + pc))
}

/// `C_nu = prod_{p <= 2^nu} 2 / p^{1/nu}`.
pub fn c_nu(nu: u32, provenance: Provenance, max_nu: u32) -> Result<SieveConstants> {
    match provenance {
        Provenance::PaperTable => {
            let &(_, mant, e, up) = C_TABLE
                .iter()
                .find(|t| t.0 == nu)
                .ok_or_else(|| Error::Unsupported(format!("no stored C_nu for nu = {nu}")))?;
            let up_l10 = table_ln(up, e).upper().div(&HiDec::ln10()).upper_f64();
            Ok(SieveConstants {
                nu,
                c_nu: format!("{mant}e{e}"),
                log10_c_nu: up_l10,
                prime_limit: (BigUint::one() << nu).to_string(),
                prime_count: None,
                provenance,
                ln_nominal: 0.0,
                ln_upper_f64: None,
                table: Some((mant, e, up)),
            })
        }
        Provenance::Computed => {
            if nu == 0 || nu > max_nu {
                return Err(Error::SieveBudget { nu, max_nu });
            }
            let (ln_up, count) = sieve_log_sum(1u64 << nu, nu);
            let l10 = (ln_up / std::f64::consts::LN_10).next_up();
            Ok(SieveConstants {
                nu,
                c_nu: render_from_log10(l10),
                log10_c_nu: l10,
                prime_limit: (1u64 << nu).to_string(),
                prime_count: Some(count),
                provenance,
                ln_nominal: ln_up,
                ln_upper_f64: Some(ln_up),
                table: C_TABLE.iter().find(|t| t.0 == nu).map(|t| (t.1, t.2, t.3)),
            })
        }
    }
}

/// Computed constant where the sieve is cheap, otherwise the stored one.
pub fn c_nu_best(nu: u32) -> Result<SieveConstants> {
    if nu <= 20 {
        c_nu(nu, Provenance::Computed, ROUTINE_MAX_NU)
    } else {
        c_nu(nu, Provenance::PaperTable, ROUTINE_MAX_NU)
    }
}

// ---------------------------------------------------------------------------
// W bounds

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WPolyBound {
    /// `(m + gcd(m, q-1)) / 2`.
    pub exponent: String,
    /// Equality holds exactly when `m | q - 1`.
    pub tight: bool,
    /// `3m/4`, reported when `m ∤ q - 1`.
    pub refined_exponent: Option<String>,
    /// The smaller of the two.
    pub best_exponent: String,
}

fn w_poly_exponents(q: &BigUint, m: u32) -> (Ratio<i64>, bool, Option<Ratio<i64>>) {
    let r = ((q - 1u32) % m).to_u64().unwrap();
    let g = (m as u64).gcd(&r) as i64;
    let g = if r == 0 { m as i64 } else { g };
    let tight = r == 0;
    let main = Ratio::new(m as i64 + g, 2);
    let refined = (!tight).then(|| Ratio::new(3 * m as i64, 4));
    (main, tight, refined)
}

pub fn w_poly_bound(q: &BigUint, m: u32) -> WPolyBound {
    let (main, tight, refined) = w_poly_exponents(q, m);
    let best = refined.map_or(main, |r| r.min(main));
    WPolyBound {
        exponent: ratio_string(&main),
        tight,
        refined_exponent: refined.as_ref().map(ratio_string),
        best_exponent: ratio_string(&best),
    }
}

/// `ln` of the loglog bound for `W(t-1)`, given an enclosure of `ln t`.
fn loglog_ln_bound(ln_t: &HiDec) -> HiDec {
    HiDec::from_decimal("0.96").mul(ln_t).div(&ln_t.ln())
}

/// `t^{0.96 / ln ln t}`, an upper bound for `W(t-1)`.
pub fn w_loglog_bound(t: &BigUint) -> Result<HiDec> {
    if *t < BigUint::from(3u32) {
        return Err(Error::InvalidSpec("the loglog bound needs t >= 3".into()));
    }
    Ok(loglog_ln_bound(&HiDec::from_biguint(t).ln()).exp())
}

fn multiplicative_order_mod(q: &BigUint, d: u64) -> u64 {
    let qm = (q % d).to_u64().unwrap();
    let mut x = qm % d;
    let mut k = 1;
    while x != 1 % d {
        x = ((x as u128 * qm as u128) % d as u128) as u64;
        k += 1;
    }
    k
}

/// Number of distinct monic irreducible factors of `x^m - 1` over F_q,
/// by counting cyclotomic cosets.
pub fn omega_xm1(q: &BigUint, m: u32) -> Result<u32> {
    let p = match q.to_u64().and_then(prime_power) {
        Some((p, _)) => p,
        None => match q.to_u64() {
            Some(_) => return Err(Error::InvalidSpec(format!("{q} is not a prime power"))),
            None => {
                let f = intfactor::factor(q, intfactor::DEFAULT_FACTOR_BUDGET)?;
                if f.len() != 1 {
                    return Err(Error::InvalidSpec(format!("{q} is not a prime power")));
                }
                f[0].0.to_u64().unwrap_or(u64::MAX)
            }
        },
    };
    let mut mm = m as u64;
    while mm % p == 0 {
        mm /= p;
    }
    let mut total = 0u64;
    for d in 1..=mm {
        if mm % d == 0 {
            let phi = (1..=d).filter(|&i| i.gcd(&d) == 1).count() as u64;
            total += phi / multiplicative_order_mod(q, d);
        }
    }
    Ok(total as u32)
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RhsTerms {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_int: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_poly: Option<String>,
    /// Upper bound for `log10 W(q^m - 1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_int_log10_bound: Option<f64>,
    /// Exponent `e` in `W(x^m - 1) <= 2^e`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_poly_exponent_bound: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_nu: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_int_bound_source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs_log10: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs_log10: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rebasing {
    pub base_power: u32,
    pub q: String,
    pub m: u32,
    pub d: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    pub q: String,
    pub m: u32,
    pub d: Vec<u32>,
    pub lambda: u32,
    pub big_d: u32,
    /// `m/2 - λ(d) - D`.
    pub lhs_exponent: String,
    pub rhs_terms: RhsTerms,
    pub citations: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rebasing_hint: Option<Rebasing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factorization_identity_holds: Option<bool>,
}

pub const CITE_MAIN: &str = "sufficient inequality q^(m/2-lambda-D) >= W(q^m-1) W(x^m-1)";
pub const CITE_SIGN: &str = "exponent sign: left side <= 1 < right side";
pub const CITE_LCM: &str = "lcm condition lcm(d) < m";
pub const CITE_SIEVE: &str = "sieve constant bound W(t) <= C_nu t^(1/nu)";
pub const CITE_LOGLOG: &str = "loglog bound W(t-1) < t^(0.96/ln ln t)";
pub const CITE_WPOLY: &str = "W(x^m-1) <= 2^((m+gcd(m,q-1))/2), and <= 2^(3m/4) if m does not divide q-1";
pub const CITE_COPRIME: &str = "coprime simplification lambda = D - k + 1";

fn base_report(q: &QValue, m: u32, d: &[u32]) -> Result<(BoundReport, Ratio<i64>)> {
    validate_tuple(m, d)?;
    let lambda = lambda_inclusion_exclusion(d) as u32;
    let big_d: u32 = d.iter().sum();
    let e = Ratio::new(m as i64 - 2 * lambda as i64 - 2 * big_d as i64, 2);
    let rep = BoundReport {
        verdict: Verdict::Insufficient,
        mode: None,
        case: None,
        q: q.to_string(),
        m,
        d: d.to_vec(),
        lambda,
        big_d,
        lhs_exponent: ratio_string(&e),
        rhs_terms: RhsTerms::default(),
        citations: vec![CITE_MAIN.to_string()],
        notes: Vec::new(),
        rebasing_hint: None,
        factorization_identity_holds: None,
    };
    Ok((rep, e))
}

/// Bits of `q^m - 1` up to which exact mode is chosen automatically.
const AUTO_EXACT_BITS: u64 = 160;

fn check_prime_power(q: &QValue) -> Result<()> {
    if let Some(v) = q.as_int().and_then(|v| v.to_u64()) {
        if prime_power(v).is_none() {
            return Err(Error::InvalidSpec(format!("q = {v} is not a prime power")));
        }
    }
    Ok(())
}

/// Evaluates the sufficient inequality for `(q, m, d)`.
pub fn check_bound(q: &QValue, m: u32, d: &[u32], mode: Option<Mode>, budget: u64) -> Result<BoundReport> {
    check_prime_power(q)?;
    check_bound_unchecked(q, m, d, mode, budget)
}

fn check_bound_unchecked(q: &QValue, m: u32, d: &[u32], mode: Option<Mode>, budget: u64) -> Result<BoundReport> {
    let (mut rep, e) = base_report(q, m, d)?;
    if e <= Ratio::zero() {
        rep.verdict = Verdict::ImpossibleForAllQ;
        rep.citations.push(CITE_SIGN.to_string());
        return Ok(rep);
    }
    let mode = match (mode, q) {
        (Some(Mode::Exact), QValue::Log10 { .. }) => {
            return Err(Error::Unsupported("exact mode needs q as an integer".into()))
        }
        (Some(md), _) => md,
        (None, QValue::Log10 { .. }) => Mode::LogSpace,
        (None, QValue::Int(v)) => {
            if v.bits() * m as u64 <= AUTO_EXACT_BITS {
                Mode::Exact
            } else {
                Mode::Bounded
            }
        }
    };
    rep.mode = Some(mode);
    match mode {
        Mode::Exact => exact_mode(&mut rep, q.as_int().unwrap(), m, &e, budget)?,
        _ => bounded_mode(&mut rep, q, m, &e, mode)?,
    }
    Ok(rep)
}

fn exact_mode(rep: &mut BoundReport, q: &BigUint, m: u32, e: &Ratio<i64>, budget: u64) -> Result<()> {
    let qm1 = num_traits::pow(q.clone(), m as usize) - 1u32;
    let w1 = w_int(&qm1, budget)?;
    let w2 = BigUint::one() << omega_xm1(q, m)?;
    // q^{2E} >= (W1 W2)^2 with 2E an integer
    let two_e = (e * 2).to_integer() as usize;
    let lhs = num_traits::pow(q.clone(), two_e);
    let rhs = (&w1 * &w2).pow(2);
    rep.verdict = if lhs >= rhs { Verdict::Sufficient } else { Verdict::Insufficient };
    rep.rhs_terms.w_int = Some(w1.to_string());
    rep.rhs_terms.w_poly = Some(w2.to_string());
    let l10 = |v: &BigUint| HiDec::from_biguint(v).log10().mid_f64();
    rep.rhs_terms.lhs_log10 = Some(l10(&lhs) / 2.0);
    rep.rhs_terms.rhs_log10 = Some(l10(&(&w1 * &w2)));
    Ok(())
}

fn bounded_mode(rep: &mut BoundReport, q: &QValue, m: u32, e: &Ratio<i64>, mode: Mode) -> Result<()> {
    let ln_q = q.ln();
    let ln_t = ln_q.mul_int(m as i64);
    let ln10 = HiDec::ln10();
    // W(x^m - 1)
    let w2_exp = match q.as_int() {
        Some(v) if mode == Mode::Bounded => {
            let (main, _, refined) = w_poly_exponents(v, m);
            refined.map_or(main, |r| r.min(main))
        }
        _ => Ratio::from_integer(m as i64),
    };
    rep.citations.push(CITE_WPOLY.to_string());
    // W(q^m - 1): the best of the sieve and loglog bounds
    let mut best: Option<(HiDec, String, Option<(u32, String)>)> = None;
    for nu in [11u32, 12, 31] {
        let c = c_nu_best(nu)?;
        let b = c.ln_upper().add(&ln_t.div(&HiDec::from_int(nu)));
        if best.as_ref().is_none_or(|(cur, _, _)| b.upper_f64() < cur.upper_f64()) {
            best = Some((b, format!("sieve constant, nu = {nu}"), Some((nu, c.c_nu.clone()))));
        }
    }
    let ll = loglog_ln_bound(&ln_t);
    if ll.upper_f64() < best.as_ref().unwrap().0.upper_f64() {
        best = Some((ll, "loglog bound".to_string(), None));
    }
    let (w1_ln, source, sieve) = best.unwrap();
    rep.citations.push(if sieve.is_some() { CITE_SIEVE } else { CITE_LOGLOG }.to_string());
    let lhs = ratio_hi(e).mul(&ln_q);
    let rhs = w1_ln.upper().add(&ratio_hi(&w2_exp).mul(&HiDec::ln2()));
    rep.verdict = if lhs.certainly_ge(&rhs) { Verdict::Sufficient } else { Verdict::Insufficient };
    rep.rhs_terms.w_int_log10_bound = Some(w1_ln.div(&ln10).upper_f64());
    rep.rhs_terms.w_poly_exponent_bound = Some(ratio_string(&w2_exp));
    rep.rhs_terms.w_int_bound_source = Some(source);
    if let Some((nu, c)) = sieve {
        rep.rhs_terms.nu = Some(nu);
        rep.rhs_terms.c_nu = Some(c);
    }
    rep.rhs_terms.lhs_log10 = Some(lhs.div(&ln10).mid_f64());
    rep.rhs_terms.rhs_log10 = Some(rhs.div(&ln10).mid_f64());
    Ok(())
}

/// `lcm(d) < m`, which alone guarantees existence.
pub fn lcm_condition(m: u32, d: &[u32]) -> Result<bool> {
    validate_tuple(m, d)?;
    Ok(d.iter().fold(1u64, |l, &x| l.lcm(&(x as u64))) < m as u64)
}

// ---------------------------------------------------------------------------
// Tuples of pairwise coprime factors

pub fn pairwise_coprime(d: &[u32]) -> bool {
    d.iter().enumerate().all(|(i, &a)| d[i + 1..].iter().all(|&b| a.gcd(&b) == 1))
}

fn nth_primes(k: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut n = 2u64;
    while out.len() < k {
        if crate::arith::is_prime_u64(n) {
            out.push(n);
        }
        n += 1;
    }
    out
}

/// `p_t <= d_t <= (m / (p_1 ... p_{t-1}))^{1/(k+1-t)}` for every `t`, with
/// `p_i` the `i`-th prime and `d` sorted increasingly.
pub fn factorization_identity_holds(m: u64, d: &[u64]) -> bool {
    let k = d.len();
    let primes = nth_primes(k);
    let mut prefix = 1u128;
    for t in 0..k {
        let dt = d[t] as u128;
        if dt < primes[t] as u128 {
            return false;
        }
        let pw = dt.checked_pow((k - t) as u32).unwrap_or(u128::MAX);
        if pw.saturating_mul(prefix) > m as u128 {
            return false;
        }
        prefix *= primes[t] as u128;
    }
    true
}

/// All increasing tuples of `k` pairwise coprime integers `>= 2` whose
/// product is `m`.
pub fn coprime_factorizations(m: u64, k: usize) -> Vec<Vec<u64>> {
    let mut parts = Vec::new();
    let mut r = m;
    let mut p = 2u64;
    while p * p <= r {
        if r % p == 0 {
            let mut pe = 1;
            while r % p == 0 {
                r /= p;
                pe *= p;
            }
            parts.push(pe);
        }
        p += 1;
    }
    if r > 1 {
        parts.push(r);
    }
    let mut out = Vec::new();
    if k == 0 || parts.len() < k {
        return out;
    }
    // assign each prime power to one of k groups, all groups nonempty
    let total = (k as u64).pow(parts.len() as u32);
    for code in 0..total {
        let mut g = vec![1u64; k];
        let mut c = code;
        for &pp in &parts {
            g[(c % k as u64) as usize] *= pp;
            c /= k as u64;
        }
        if g.iter().all(|&x| x > 1) {
            g.sort_unstable();
            out.push(g);
        }
    }
    out.sort();
    out.dedup();
    out
}

// ---------------------------------------------------------------------------
// Dispatcher

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub k: u32,
    pub nu: u32,
    /// Modulus `m` at which the threshold is smallest.
    pub m: u64,
    /// `m/2 - 2k⌊m/k!⌋ + k - 1` at that `m`.
    pub exponent: String,
    pub threshold_log10: f64,
    /// `⌈threshold⌉` when it is small enough to print.
    pub threshold: Option<String>,
    /// Threshold at the smallest admissible `m`, the `k`-th primorial.
    pub primorial_threshold: Option<String>,
    pub scanned_up_to: u64,
    pub largest_threshold_log10: f64,
    pub m_at_largest: u64,
}

fn factorial(k: u32) -> u64 {
    (1..=k as u64).product()
}

fn distinct_prime_count(mut m: u64) -> u32 {
    let mut c = 0;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            c += 1;
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    c + (m > 1) as u32
}

fn hi_threshold_ceil(t_log10: &HiDec) -> Option<String> {
    if t_log10.upper_f64() < 30.0 {
        Some(t_log10.exp10().ceil_int().to_string())
    } else {
        None
    }
}

/// Smallest `q` with `q^{m/2 - 2k⌊m/k!⌋ + k - 1} >= C_nu q^{m/nu} 2^m`,
/// minimized over admissible `m` (at least `k` distinct prime factors)
/// between the `k`-th primorial and `m_max`.
pub fn recompute_threshold(k: u32, nu: u32, m_max: u64) -> Result<ThresholdReport> {
    if k < 4 {
        return Err(Error::Unsupported("threshold recomputation covers k >= 4".into()));
    }
    let c = c_nu_best(nu)?;
    let ln10 = HiDec::ln10();
    let c_l10 = c.ln_upper().div(&ln10);
    let two_l10 = HiDec::ln2().div(&ln10);
    let start: u64 = nth_primes(k as usize).iter().product();
    let kf = factorial(k);
    let mut best: Option<(HiDec, u64, Ratio<i64>)> = None;
    let mut worst: Option<(f64, u64)> = None;
    let mut at_start = None;
    for m in start..=m_max.max(start) {
        if distinct_prime_count(m) < k {
            continue;
        }
        let expo = Ratio::new(m as i64, 2) - Ratio::from_integer(2 * k as i64 * (m / kf) as i64)
            + Ratio::from_integer(k as i64 - 1);
        let denom = expo - Ratio::new(m as i64, nu as i64);
        if denom <= Ratio::zero() {
            continue;
        }
        let t = c_l10.add(&two_l10.mul_int(m as i64)).div(&ratio_hi(&denom));
        if m == start {
            at_start = hi_threshold_ceil(&t);
        }
        if best.as_ref().is_none_or(|(b, _, _)| t.certainly_lt(b)) {
            best = Some((t.clone(), m, expo));
        }
        let tv = t.mid_f64();
        if worst.is_none_or(|(w, _)| tv > w) {
            worst = Some((tv, m));
        }
    }
    let (t, m, expo) = best.ok_or_else(|| Error::Unsupported("no admissible m in range".into()))?;
    let (wv, wm) = worst.unwrap();
    Ok(ThresholdReport {
        k,
        nu,
        m,
        exponent: ratio_string(&expo),
        threshold_log10: t.upper_f64(),
        threshold: hi_threshold_ceil(&t),
        primorial_threshold: at_start,
        scanned_up_to: m_max.max(start),
        largest_threshold_log10: wv,
        m_at_largest: wm,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct K3Threshold {
    pub m: u32,
    pub nu: u32,
    pub log10_threshold: f64,
    pub exponent_of_ten: String,
    pub mantissa: f64,
    pub log10_threshold_text: String,
}

/// Smallest `q` with `q^2 >= C q^{m/nu} 2^m` for the `k = 3` case.
pub fn k3_threshold(c: &SieveConstants, m: u32) -> Result<K3Threshold> {
    let nu = c.nu;
    let denom = Ratio::from_integer(2i64) - Ratio::new(m as i64, nu as i64);
    if denom <= Ratio::zero() {
        return Err(Error::Unsupported(format!("m/nu must be below 2 (m = {m}, nu = {nu})")));
    }
    let ln10 = HiDec::ln10();
    let t = c
        .ln_nominal()
        .div(&ln10)
        .add(&HiDec::ln2().div(&ln10).mul_int(m as i64))
        .div(&ratio_hi(&denom));
    let (mant, e) = sci_from_log10(&t);
    Ok(K3Threshold {
        m,
        nu,
        log10_threshold: t.mid_f64(),
        exponent_of_ten: e.to_string(),
        mantissa: mant,
        log10_threshold_text: t.to_decimal(6),
    })
}

/// Lower bounds on `q` from the case table.
fn table_threshold(k: usize) -> Option<(&'static str, &'static str)> {
    match k {
        3 => Some(("2.2660e24072855", "q >= 2.2660e24072855 and m >= 60")),
        4 => Some(("1334", "q >= 1334")),
        5 => Some(("9", "q >= 9")),
        6 => Some(("7", "q >= 7")),
        7 => Some(("5", "q >= 5")),
        _ => None,
    }
}

fn q_at_least(q: &QValue, literal: &str) -> bool {
    match (q, QValue::parse(literal).unwrap()) {
        (QValue::Int(v), QValue::Int(t)) => *v >= t,
        (_, t) => q.log10().certainly_ge(&t.log10()),
    }
}

/// Applies the existence theorem's case table to `(q, m, d)`.
pub fn th51_dispatch(q: &QValue, m: u32, d: &[u32], budget: u64) -> Result<BoundReport> {
    let (mut rep, e) = base_report(q, m, d)?;
    let k = d.len();
    rep.citations.clear();
    let mut exact_ok = true;
    if let Some(v) = q.as_int() {
        if v.to_u64().is_some_and(|x| prime_power(x).is_none()) {
            rep.notes.push("q is not a prime power; thresholds are compared as numbers".into());
            exact_ok = false;
        }
        if BigUint::from(m).gcd(v) != BigUint::one() {
            rep.notes.push("gcd(m, q) > 1 while the existence theorem assumes m coprime to q".into());
        }
    }
    if lcm_condition(m, d)? {
        rep.verdict = Verdict::Sufficient;
        rep.case = Some("lcm(d) < m".into());
        rep.citations.push(CITE_LCM.to_string());
        return Ok(rep);
    }
    if k < 2 {
        rep.verdict = Verdict::OutsideScope;
        rep.case = Some("k = 1".into());
        return Ok(rep);
    }
    if !pairwise_coprime(d) {
        rep.verdict = Verdict::OutsideScope;
        rep.case = Some("entries not pairwise coprime".into());
        if k == 2 {
            let g = d[0].gcd(&d[1]);
            let q_text = match q {
                QValue::Int(v) => num_traits::pow(v.clone(), g as usize).to_string(),
                QValue::Log10 { value, .. } => format!("1e{}", value.mul_int(g as i64).to_decimal(6)),
            };
            rep.rebasing_hint = Some(Rebasing {
                base_power: g,
                q: q_text,
                m: m / g,
                d: vec![d[0] / g, d[1] / g],
            });
            rep.notes.push(format!("over Q = q^{g} the tuple becomes coprime"));
        }
        return Ok(rep);
    }
    rep.citations.push(CITE_COPRIME.to_string());
    let coprime_e = Ratio::new(m as i64, 2) - Ratio::from_integer(2 * rep.big_d as i64) + Ratio::from_integer(k as i64 - 1);
    if coprime_e != e {
        return Err(Error::Inconsistent(format!(
            "coprime exponent {} differs from {}",
            ratio_string(&coprime_e),
            rep.lhs_exponent
        )));
    }
    let d64: Vec<u64> = d.iter().map(|&x| x as u64).collect();
    let identity = factorization_identity_holds(m as u64, &d64);
    rep.factorization_identity_holds = Some(identity);
    if !identity {
        return Err(Error::Inconsistent("size constraints on coprime divisors fail".into()));
    }
    rep.case = Some(format!("k={k}"));
    if e <= Ratio::zero() {
        rep.verdict = Verdict::ImpossibleForAllQ;
        rep.citations.push(CITE_MAIN.to_string());
        rep.citations.push(CITE_SIGN.to_string());
        return Ok(rep);
    }
    if k == 2 && (3..=5).contains(&d[0]) {
        rep.notes.push(format!(
            "the exponent m/2 - 2D + 1 = {} is positive, so the inequality can hold for large q \
             although the case d_1 in {{3, 4, 5}} is stated to fail for every q",
            rep.lhs_exponent
        ));
    }
    let table = table_threshold(k).filter(|_| k != 3 || m >= 60);
    if let Some((lit, text)) = table {
        if q_at_least(q, lit) {
            rep.verdict = Verdict::Sufficient;
            rep.citations.push(format!("case table: k = {k}, {text}"));
            return Ok(rep);
        }
    }
    // fall back to the inequality itself with the given q
    let first = if exact_ok { None } else { Some(Mode::Bounded) };
    let check = check_bound_unchecked(q, m, d, first, budget).or_else(|err| match err {
        Error::FactorBudget(_) => check_bound_unchecked(q, m, d, Some(Mode::Bounded), budget),
        other => Err(other),
    })?;
    rep.mode = check.mode;
    rep.rhs_terms = check.rhs_terms;
    rep.citations.extend(check.citations);
    rep.verdict = match (check.verdict, k) {
        (Verdict::Sufficient, _) => Verdict::Sufficient,
        (_, 2) => Verdict::SufficientForLargeQUnquantified,
        (_, kk) if kk >= 8 => Verdict::OutsideScope,
        (v, _) => v,
    };
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: u64) -> QValue {
        QValue::from_u64(v)
    }

    #[test]
    fn w_examples() {
        let b = intfactor::DEFAULT_FACTOR_BUDGET;
        assert_eq!(w_int(&BigUint::one(), b).unwrap(), BigUint::one());
        assert_eq!(w_int(&BigUint::from(15u32), b).unwrap(), BigUint::from(4u32));
        assert_eq!(w_int(&BigUint::from(32767u32), b).unwrap(), BigUint::from(8u32));
        let w = w_poly_bound(&BigUint::from(3u32), 2);
        assert_eq!((w.exponent.as_str(), w.tight), ("2", true));
        let w = w_poly_bound(&BigUint::from(2u32), 15);
        assert_eq!((w.exponent.as_str(), w.tight), ("8", false));
        assert_eq!(w.refined_exponent.as_deref(), Some("45/4"));
        assert!(w_poly_bound(&BigUint::from(4u32), 3).tight);
        assert_eq!(omega_xm1(&BigUint::from(2u32), 15).unwrap(), 5);
        assert_eq!(omega_xm1(&BigUint::from(3u32), 6).unwrap(), 2);
        let t = w_loglog_bound(&BigUint::from(32768u32)).unwrap();
        assert!(t.certainly_ge(&HiDec::from_int(70)) && t.certainly_lt(&HiDec::from_int(72)));
        assert!(w_loglog_bound(&BigUint::from(3u32)).is_ok());
        assert!(w_loglog_bound(&BigUint::from(2u32)).is_err());
    }

    #[test]
    fn sieve_constants() {
        let c = c_nu(11, Provenance::Computed, ROUTINE_MAX_NU).unwrap();
        let rel = 10f64.powf(c.log10_c_nu - 14.0) / 4.2445 - 1.0;
        assert!(rel.abs() < 1e-4, "{rel}");
        let c = c_nu(31, Provenance::PaperTable, ROUTINE_MAX_NU).unwrap();
        assert!((c.log10_c_nu - 1553069.38).abs() < 0.01);
        assert!(matches!(c_nu(31, Provenance::Computed, ROUTINE_MAX_NU), Err(Error::SieveBudget { .. })));
        assert!(c_nu(13, Provenance::PaperTable, ROUTINE_MAX_NU).is_err());
    }

    #[test]
    fn ineq_examples() {
        let b = intfactor::DEFAULT_FACTOR_BUDGET;
        let r = check_bound(&q(7), 30, &[2, 3, 5], None, b).unwrap();
        assert_eq!((r.verdict, r.lhs_exponent.as_str()), (Verdict::ImpossibleForAllQ, "-3"));
        let r = check_bound(&q(3), 56, &[7, 8], None, b).unwrap();
        assert_eq!((r.verdict, r.lhs_exponent.as_str()), (Verdict::ImpossibleForAllQ, "-1"));
        let r = check_bound(&q(2), 63, &[7, 9], None, b).unwrap();
        assert_eq!(r.lhs_exponent, "1/2");
        assert_eq!(r.verdict, Verdict::Insufficient);
        assert!(check_bound(&q(6), 63, &[7, 9], None, b).is_err());
    }

    #[test]
    fn lcm_examples() {
        assert!(lcm_condition(12, &[2, 3]).unwrap());
        assert!(!lcm_condition(15, &[3, 5]).unwrap());
        assert!(!lcm_condition(6, &[2, 3]).unwrap());
    }

    #[test]
    fn dispatch_examples() {
        let b = intfactor::DEFAULT_FACTOR_BUDGET;
        let r = th51_dispatch(&q(1334), 210, &[2, 3, 5, 7], b).unwrap();
        assert_eq!((r.verdict, r.case.as_deref()), (Verdict::Sufficient, Some("k=4")));
        let big = QValue::parse("1e24072856").unwrap();
        let r = th51_dispatch(&big, 60, &[3, 4, 5], b).unwrap();
        assert_eq!(r.verdict, Verdict::Sufficient);
        let r = th51_dispatch(&q(7), 66, &[6, 11], b).unwrap();
        assert_eq!(r.verdict, Verdict::ImpossibleForAllQ);
        let r = th51_dispatch(&q(2), 95, &[5, 19], b).unwrap();
        assert_eq!(r.lhs_exponent, "1/2");
        assert_eq!(r.verdict, Verdict::SufficientForLargeQUnquantified);
        assert!(!r.notes.is_empty());
        let r = th51_dispatch(&q(5), 24, &[6, 8], b).unwrap();
        assert_eq!(r.verdict, Verdict::OutsideScope);
        assert_eq!(r.rebasing_hint.unwrap().d, vec![3, 4]);
    }

    #[test]
    fn thresholds() {
        let t = recompute_threshold(4, 11, 2000).unwrap();
        assert_eq!((t.m, t.exponent.as_str(), t.threshold.as_deref()), (210, "44", Some("1334")));
        let t = recompute_threshold(5, 11, 4000).unwrap();
        assert_eq!(t.threshold.as_deref(), Some("9"));
        assert_eq!(t.primorial_threshold.as_deref(), Some("9"));
        let c = c_nu(31, Provenance::PaperTable, ROUTINE_MAX_NU).unwrap();
        let t = k3_threshold(&c, 60).unwrap();
        assert_eq!(t.exponent_of_ten, "24072855");
        assert!((t.mantissa - 2.266).abs() < 1e-3, "{}", t.mantissa);
    }

    #[test]
    fn coprime_tuples() {
        assert_eq!(coprime_factorizations(60, 3), vec![vec![3, 4, 5]]);
        assert_eq!(coprime_factorizations(30, 2), vec![vec![2, 15], vec![3, 10], vec![5, 6]]);
        assert!(factorization_identity_holds(210, &[2, 3, 5, 7]));
        assert!(!factorization_identity_holds(30, &[1, 2, 15]));
    }
}
