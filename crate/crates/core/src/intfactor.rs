//! Integer factorization for `q^m - 1` and friends.
//!
//! Trial division by every prime up to 10^6, then Brent's variant of Pollard
//! rho on whatever cofactor is left. Numbers that fit in 64 bits take a
//! machine-word path; larger ones go through `BigUint`.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::is_prime_u64;
use crate::error::{Error, Result};

pub const TRIAL_LIMIT: u64 = 1_000_000;
/// Pollard iterations allowed per factorization unless configured otherwise.
pub const DEFAULT_FACTOR_BUDGET: u64 = 50_000_000;

pub type Factors = Vec<(BigUint, u32)>;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| sieve(TRIAL_LIMIT as usize))
}

/// Primes `<= limit` by a plain sieve of Eratosthenes.
pub fn sieve(limit: usize) -> Vec<u32> {
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            out.push(i as u32);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn powmod_big(b: &BigUint, e: &BigUint, m: &BigUint) -> BigUint {
    b.modpow(e, m)
}

/// Miller-Rabin with the first 16 prime bases; deterministic below
/// 3.3 * 10^24 and overwhelmingly reliable above.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if let Some(v) = n.to_u64() {
        return is_prime_u64(v);
    }
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    if n.is_even() {
        return false;
    }
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    'witness: for a in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53] {
        let a = BigUint::from(a);
        let mut x = powmod_big(&a, &d, n);
        if x == one || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = powmod_big(&x, &two, n);
            if x == nm1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Brent-Pollard on a 64-bit composite; returns a nontrivial factor.
fn brent_u64(n: u64, budget: &mut u64) -> Option<u64> {
    if n % 2 == 0 {
        return Some(2);
    }
    for c in 1u64.. {
        let f = |x: u64| ((x as u128 * x as u128 + c as u128) % n as u128) as u64;
        let (mut y, mut r, mut q, mut g) = (2u64, 1u64, 1u64, 1u64);
        let mut x = y;
        let mut ys = y;
        let m = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mulmod(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += m;
                *budget = budget.checked_sub(m)?;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return Some(g);
        }
    }
    None
}

fn brent_big(n: &BigUint, budget: &mut u64) -> Option<BigUint> {
    let one = BigUint::one();
    for c in 1u32.. {
        let c = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut y = BigUint::from(2u32);
        let mut x = y.clone();
        let mut ys = y.clone();
        let (mut r, mut q, mut g) = (1u64, one.clone(), one.clone());
        let m = 64;
        let dist = |a: &BigUint, b: &BigUint| if a > b { a - b } else { b - a };
        while g == one {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g == one {
                ys = y.clone();
                for _ in 0..m.min(r - k) {
                    y = f(&y);
                    q = (q * dist(&x, &y)) % n;
                }
                g = q.gcd(n);
                k += m;
                *budget = budget.checked_sub(m)?;
            }
            r *= 2;
        }
        if &g == n {
            loop {
                ys = f(&ys);
                g = dist(&x, &ys).gcd(n);
                if g > one {
                    break;
                }
            }
        }
        if &g != n {
            return Some(g);
        }
    }
    None
}

fn split_cofactor(n: BigUint, budget: &mut u64, out: &mut Vec<BigUint>) -> Result<()> {
    if n.is_one() {
        return Ok(());
    }
    if is_probable_prime(&n) {
        out.push(n);
        return Ok(());
    }
    let d = match n.to_u64() {
        Some(v) => brent_u64(v, budget).map(BigUint::from),
        None => brent_big(&n, budget),
    }
    .ok_or_else(|| Error::FactorBudget(n.to_string()))?;
    let other = &n / &d;
    split_cofactor(d, budget, out)?;
    split_cofactor(other, budget, out)
}

/// Prime factorization of `n >= 1`, sorted by prime.
pub fn factor(n: &BigUint, budget: u64) -> Result<Factors> {
    if n.is_zero() {
        return Err(Error::Unsupported("cannot factor 0".into()));
    }
    let mut rest = n.clone();
    let mut out: Factors = Vec::new();
    let push = |p: BigUint, e: u32, out: &mut Factors| {
        if e > 0 {
            out.push((p, e));
        }
    };
    if let Some(mut v) = rest.to_u64() {
        for &p in small_primes() {
            let p = p as u64;
            if p * p > v {
                break;
            }
            let mut e = 0;
            while v % p == 0 {
                v /= p;
                e += 1;
            }
            push(BigUint::from(p), e, &mut out);
        }
        rest = BigUint::from(v);
    } else {
        for &p in small_primes() {
            let pb = BigUint::from(p);
            let mut e = 0;
            loop {
                let (qt, r) = rest.div_rem(&pb);
                if !r.is_zero() {
                    break;
                }
                rest = qt;
                e += 1;
            }
            push(pb, e, &mut out);
            if rest.is_one() {
                break;
            }
        }
    }
    let mut budget = budget;
    let mut large = Vec::new();
    split_cofactor(rest, &mut budget, &mut large)?;
    large.sort();
    for p in large {
        match out.last_mut() {
            Some((last, e)) if *last == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

pub fn omega(factors: &Factors) -> usize {
    factors.len()
}

/// `W(n) = 2^{omega(n)}`, the number of squarefree divisors.
pub fn w_of(factors: &Factors) -> BigUint {
    BigUint::one() << factors.len()
}

pub fn euler_phi(factors: &Factors) -> BigUint {
    factors.iter().fold(BigUint::one(), |acc, (p, e)| {
        acc * (p - 1u32) * p.pow(e - 1)
    })
}

/// Squarefree divisors with their Mobius sign, in subset order of the
/// factor list.
pub fn squarefree_divisors(factors: &Factors) -> Vec<(BigUint, i8)> {
    let mut out = vec![(BigUint::one(), 1i8)];
    for (p, _) in factors {
        let extra: Vec<_> = out.iter().map(|(t, s)| (t * p, -s)).collect();
        out.extend(extra);
    }
    out
}

pub fn product(factors: &Factors) -> BigUint {
    factors
        .iter()
        .fold(BigUint::one(), |acc, (p, e)| acc * p.pow(*e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n: u128) -> Vec<(u128, u32)> {
        factor(&BigUint::from(n), DEFAULT_FACTOR_BUDGET)
            .unwrap()
            .into_iter()
            .map(|(p, e)| (p.to_u128().unwrap(), e))
            .collect()
    }

    #[test]
    fn factors_of_mersenne_like_numbers() {
        assert_eq!(f(32767), vec![(7, 1), (31, 1), (151, 1)]);
        assert_eq!(f(1), vec![]);
        assert_eq!(f((1u128 << 60) - 1).len(), 11);
        assert_eq!(f(5u128.pow(12) - 1), vec![(2, 4), (3, 2), (7, 1), (13, 1), (31, 1), (601, 1)]);
    }

    #[test]
    fn pollard_splits_semiprimes_beyond_trial_range() {
        let p = 1_000_003u128;
        let q = 998_244_353u128;
        assert_eq!(f(p * q), vec![(p, 1), (q, 1)]);
        let r = 4_294_967_311u128; // first prime above 2^32
        assert_eq!(f(q * r * r), vec![(q, 1), (r, 2)]);
        // 2^67 - 1 = 193707721 * 761838257287
        assert_eq!(f((1u128 << 67) - 1), vec![(193_707_721, 1), (761_838_257_287, 1)]);
    }

    #[test]
    fn budget_is_enforced() {
        let p = 1_000_000_000_039u128;
        let q = 1_000_000_000_061u128;
        let r = factor(&BigUint::from(p * q), 10);
        assert!(matches!(r, Err(Error::FactorBudget(_))));
    }

    #[test]
    fn phi_and_w() {
        let fs = factor(&BigUint::from(32767u32), DEFAULT_FACTOR_BUDGET).unwrap();
        assert_eq!(euler_phi(&fs), BigUint::from(27000u32));
        assert_eq!(w_of(&fs), BigUint::from(8u32));
        let sq = squarefree_divisors(&fs);
        assert_eq!(sq.len(), 8);
        assert_eq!(sq.iter().filter(|(_, s)| *s < 0).count(), 4);
    }
}
