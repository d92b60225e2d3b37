//! Prime-field scalars and dense polynomials over F_p.
//!
//! Everything above this layer (the tower, subfields, F_q-polynomials) is
//! expressed in terms of these two primitives.

/// Arithmetic modulo a prime `p < 2^64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fp {
    p: u64,
}

impl Fp {
    pub fn new(p: u64) -> Self {
        debug_assert!(p >= 2);
        Fp { p }
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        a % self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        if a >= self.p - b {
            a - (self.p - b)
        } else {
            a + b
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + (self.p - b)
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if self.p <= u32::MAX as u64 {
            a * b % self.p
        } else {
            ((a as u128 * b as u128) % self.p as u128) as u64
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse of a nonzero residue.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a % self.p != 0);
        // extended Euclid on i128 keeps this exact for every 64-bit prime
        let (mut r0, mut r1) = (self.p as i128, (a % self.p) as i128);
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let t = r0 / r1;
            (r0, r1) = (r1, r0 - t * r1);
            (s0, s1) = (s1, s0 - t * s1);
        }
        s0.rem_euclid(self.p as i128) as u64
    }

    /// True when products of `terms` residues can be summed in a `u64`
    /// before reducing.
    #[inline]
    pub fn lazy_ok(&self, terms: usize) -> bool {
        let pm = (self.p - 1) as u128;
        pm * pm * (terms as u128 + 1) < u64::MAX as u128
    }
}

fn mulmod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod_u64(acc, b, m);
        }
        b = mulmod_u64(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for sp in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % sp == 0 {
            return n == sp;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Splits `q` as `p^e` with `p` prime, if it is a prime power.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 0;
    if q % 2 == 0 {
        p = 2;
    } else {
        let mut f = 3u64;
        while f.saturating_mul(f) <= q && f < 1 << 21 {
            if q % f == 0 {
                p = f;
                break;
            }
            f += 2;
        }
        if p == 0 {
            if is_prime_u64(q) {
                return Some((q, 1));
            }
            // q has no factor below 2^21 yet is composite: splitting into a
            // prime power would need p > 2^21 and e >= 2
            for e in (2..=3u32).rev() {
                let r = (q as f64).powf(1.0 / e as f64).round() as u64;
                for c in r.saturating_sub(1)..=r + 1 {
                    if c.checked_pow(e) == Some(q) && is_prime_u64(c) {
                        return Some((c, e));
                    }
                }
            }
            return None;
        }
    }
    let mut e = 0;
    let mut r = q;
    while r % p == 0 {
        r /= p;
        e += 1;
    }
    (r == 1).then_some((p, e))
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Dense polynomials over F_p, constant term first, no trailing zeros.
pub mod fp_poly {
    use super::Fp;

    pub type Poly = Vec<u64>;

    pub fn trim(f: &mut Poly) {
        while f.last() == Some(&0) {
            f.pop();
        }
    }

    pub fn degree(f: &[u64]) -> Option<usize> {
        f.len().checked_sub(1)
    }

    pub fn sub(fp: &Fp, f: &[u64], g: &[u64]) -> Poly {
        let n = f.len().max(g.len());
        let mut out: Poly = (0..n)
            .map(|i| fp.sub(*f.get(i).unwrap_or(&0), *g.get(i).unwrap_or(&0)))
            .collect();
        trim(&mut out);
        out
    }

    pub fn mul(fp: &Fp, f: &[u64], g: &[u64]) -> Poly {
        if f.is_empty() || g.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; f.len() + g.len() - 1];
        for (i, &a) in f.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in g.iter().enumerate() {
                out[i + j] = fp.add(out[i + j], fp.mul(a, b));
            }
        }
        trim(&mut out);
        out
    }

    /// Remainder of `f` modulo nonzero `g`.
    pub fn rem(fp: &Fp, f: &[u64], g: &[u64]) -> Poly {
        let dg = g.len() - 1;
        let lead_inv = fp.inv(g[dg]);
        let mut r = f.to_vec();
        trim(&mut r);
        while r.len() > dg {
            let top = r.len() - 1;
            let c = fp.mul(r[top], lead_inv);
            if c != 0 {
                let shift = top - dg;
                for (j, &gj) in g.iter().enumerate() {
                    r[shift + j] = fp.sub(r[shift + j], fp.mul(c, gj));
                }
            }
            r.pop();
            trim(&mut r);
        }
        r
    }

    pub fn gcd(fp: &Fp, f: &[u64], g: &[u64]) -> Poly {
        let mut a = f.to_vec();
        let mut b = g.to_vec();
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            let r = rem(fp, &a, &b);
            a = b;
            b = r;
        }
        if let Some(&lead) = a.last() {
            let inv = fp.inv(lead);
            for c in a.iter_mut() {
                *c = fp.mul(*c, inv);
            }
        }
        a
    }

    pub fn mulmod(fp: &Fp, f: &[u64], g: &[u64], modulus: &[u64]) -> Poly {
        rem(fp, &mul(fp, f, g), modulus)
    }

    pub fn powmod(fp: &Fp, base: &[u64], mut exp: u64, modulus: &[u64]) -> Poly {
        let mut acc: Poly = vec![1];
        let mut b = rem(fp, base, modulus);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mulmod(fp, &acc, &b, modulus);
            }
            b = mulmod(fp, &b, &b, modulus);
            exp >>= 1;
        }
        rem(fp, &acc, modulus)
    }

    fn prime_divisors(mut n: u64) -> Vec<u64> {
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

    /// Rabin's irreducibility test for a monic `f` of degree >= 1.
    pub fn is_irreducible(fp: &Fp, f: &[u64]) -> bool {
        let n = match degree(f) {
            Some(0) | None => return false,
            Some(n) => n,
        };
        if n == 1 {
            return true;
        }
        let p = fp.modulus();
        let x: Poly = vec![0, 1];
        // frob[i] = x^{p^i} mod f
        let mut frob = vec![rem(fp, &x, f)];
        for i in 1..=n {
            let next = powmod(fp, &frob[i - 1], p, f);
            frob.push(next);
        }
        if sub(fp, &frob[n], &x) != Vec::<u64>::new() {
            return false;
        }
        prime_divisors(n as u64).into_iter().all(|r| {
            let h = sub(fp, &frob[n / r as usize], &x);
            gcd(fp, &h, f) == vec![1]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fp_inverse_and_pow() {
        let f = Fp::new(1_000_000_007);
        for a in [1u64, 2, 12345, 999_999_999] {
            assert_eq!(f.mul(a, f.inv(a)), 1);
        }
        assert_eq!(f.pow(3, 1_000_000_006), 1);
        let big = Fp::new(18_446_744_073_709_551_557); // largest 64-bit prime
        assert_eq!(big.mul(big.inv(12345), 12345), 1);
        assert_eq!(big.add(big.modulus() - 1, 5), 4);
    }

    #[test]
    fn primality_and_prime_powers() {
        assert!(is_prime_u64(2) && is_prime_u64(32749) && !is_prime_u64(32767));
        assert!(is_prime_u64(18_446_744_073_709_551_557));
        assert_eq!(prime_power(4), Some((2, 2)));
        assert_eq!(prime_power(1334), None);
        assert_eq!(prime_power(125), Some((5, 3)));
        assert_eq!(prime_power(7), Some((7, 1)));
        assert_eq!(prime_power(1), None);
        assert_eq!(prime_power(4_194_319u64 * 4_194_319), Some((4_194_319, 2)));
    }

    #[test]
    fn rabin_test_small_cases() {
        let f2 = Fp::new(2);
        assert!(fp_poly::is_irreducible(&f2, &[1, 1, 1]));
        assert!(!fp_poly::is_irreducible(&f2, &[1, 0, 1]));
        assert!(fp_poly::is_irreducible(&f2, &[1, 1, 0, 0, 1]));
        // x^4+x^2+1 = (x^2+x+1)^2
        assert!(!fp_poly::is_irreducible(&f2, &[1, 0, 1, 0, 1]));
        let f3 = Fp::new(3);
        assert!(fp_poly::is_irreducible(&f3, &[1, 0, 1]));
        assert!(!fp_poly::is_irreducible(&f3, &[2, 0, 1]));
    }
}
