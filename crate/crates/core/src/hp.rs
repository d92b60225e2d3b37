//! Outward-rounded high-precision intervals.
//!
//! Values are pairs of fixed-point integers with `FRAC` fractional bits.
//! Every operation widens the result so that the true value stays inside;
//! comparisons answer only when the intervals are disjoint.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

const FRAC: u32 = 320;
/// Absolute slack added after each transcendental evaluation.
const SLACK_BITS: u32 = 300;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HiDec {
    lo: BigInt,
    hi: BigInt,
}

fn one_fx() -> BigInt {
    BigInt::one() << FRAC
}

fn slack() -> BigInt {
    BigInt::one() << (FRAC - SLACK_BITS)
}

fn fx_mul_floor(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b).div_floor(&one_fx())
}

fn fx_div_floor(a: &BigInt, b: &BigInt) -> BigInt {
    (a << FRAC).div_floor(b)
}

/// `2 atanh(z)` for fixed-point `0 <= z < 1/2`, truncated; error below
/// one ulp per term.
fn two_atanh(z: &BigInt) -> BigInt {
    let z2 = fx_mul_floor(z, z);
    let mut term = z.clone();
    let mut sum = BigInt::zero();
    let mut k = 1u64;
    while !term.is_zero() {
        sum += &term / BigInt::from(k);
        term = fx_mul_floor(&term, &z2);
        k += 2;
    }
    sum * 2
}

fn ln2_fx() -> BigInt {
    two_atanh(&(one_fx() / 3))
}

/// Approximate `ln(x)` of a positive fixed-point value.
fn ln_fx(x: &BigInt) -> BigInt {
    assert!(x.is_positive());
    let bits = x.bits() as i64;
    let k = bits - 1 - FRAC as i64;
    let y = if k >= 0 { x >> k as u64 } else { x << (-k) as u64 };
    let one = one_fx();
    let z = fx_div_floor(&(&y - &one), &(&y + &one));
    BigInt::from(k) * ln2_fx() + two_atanh(&z)
}

/// Approximate `exp(x)` of a fixed-point value.
fn exp_fx(x: &BigInt) -> BigInt {
    let ln2 = ln2_fx();
    let k = x.div_floor(&ln2);
    let r = x - &k * &ln2;
    let mut term = one_fx();
    let mut sum = BigInt::zero();
    let mut i = 1u64;
    while !term.is_zero() {
        sum += &term;
        term = fx_mul_floor(&term, &r) / BigInt::from(i);
        i += 1;
    }
    let k = k.to_i64().expect("exponent out of range");
    if k >= 0 {
        sum << k as u64
    } else {
        sum >> (-k) as u64
    }
}

impl HiDec {
    pub fn from_int(v: impl Into<BigInt>) -> Self {
        let x = v.into() << FRAC;
        HiDec { lo: x.clone(), hi: x }
    }

    pub fn from_biguint(v: &BigUint) -> Self {
        Self::from_int(BigInt::from_biguint(Sign::Plus, v.clone()))
    }

    /// Encloses `num / den`.
    pub fn from_ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        let (n, d) = (num.into() << FRAC, den.into());
        assert!(d.is_positive());
        HiDec { lo: n.div_floor(&d), hi: n.div_ceil(&d) }
    }

    /// Encloses a decimal literal such as `"2.4015"` or `"-0.96"`.
    pub fn from_decimal(s: &str) -> Self {
        let (neg, s) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let digits: BigInt = format!("{int}{frac}").parse().expect("bad decimal literal");
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let v = Self::from_ratio(digits, den);
        if neg {
            v.neg()
        } else {
            v
        }
    }

    pub fn from_f64(x: f64) -> Self {
        let (m, e, s) = num_traits::float::FloatCore::integer_decode(x);
        let v = BigInt::from(m) * s as i64;
        let shift = e as i64 + FRAC as i64;
        if shift >= 0 {
            let v = v << shift as u64;
            HiDec { lo: v.clone(), hi: v }
        } else {
            let d = BigInt::one() << (-shift) as u64;
            HiDec { lo: v.div_floor(&d), hi: v.div_ceil(&d) }
        }
    }

    fn widen(mut self, by: &BigInt) -> Self {
        self.lo -= by;
        self.hi += by;
        self
    }

    /// The upper end as a point.
    pub fn upper(&self) -> HiDec {
        HiDec { lo: self.hi.clone(), hi: self.hi.clone() }
    }

    pub fn lower(&self) -> HiDec {
        HiDec { lo: self.lo.clone(), hi: self.lo.clone() }
    }

    pub fn add(&self, o: &HiDec) -> HiDec {
        HiDec { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &HiDec) -> HiDec {
        HiDec { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn neg(&self) -> HiDec {
        HiDec { lo: -&self.hi, hi: -&self.lo }
    }

    pub fn mul(&self, o: &HiDec) -> HiDec {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let one = one_fx();
        let lo = c.iter().min().unwrap().div_floor(&one);
        let hi = c.iter().max().unwrap().div_ceil(&one);
        HiDec { lo, hi }
    }

    /// Division by an interval that excludes zero.
    pub fn div(&self, o: &HiDec) -> HiDec {
        assert!(o.lo.is_positive() || o.hi.is_negative(), "division by an interval containing 0");
        let c = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let lo = c.iter().map(|(a, b)| (*a << FRAC).div_floor(*b)).min().unwrap();
        let hi = c.iter().map(|(a, b)| (*a << FRAC).div_ceil(*b)).max().unwrap();
        HiDec { lo, hi }
    }

    pub fn mul_int(&self, k: i64) -> HiDec {
        self.mul(&HiDec::from_int(k))
    }

    /// Natural logarithm; requires a positive lower end.
    pub fn ln(&self) -> HiDec {
        assert!(self.lo.is_positive(), "logarithm of a non-positive interval");
        HiDec { lo: ln_fx(&self.lo), hi: ln_fx(&self.hi) }.widen(&slack())
    }

    pub fn exp(&self) -> HiDec {
        let lo = exp_fx(&self.lo);
        let hi = exp_fx(&self.hi);
        let rel = |v: &BigInt| (v.abs() >> SLACK_BITS) + slack();
        let (dl, dh) = (rel(&lo), rel(&hi));
        HiDec { lo: lo - dl, hi: hi + dh }
    }

    pub fn ln2() -> HiDec {
        HiDec::from_int(2).ln()
    }

    pub fn ln10() -> HiDec {
        HiDec::from_int(10).ln()
    }

    pub fn log10(&self) -> HiDec {
        self.ln().div(&HiDec::ln10())
    }

    /// `10^self`.
    pub fn exp10(&self) -> HiDec {
        self.mul(&HiDec::ln10()).exp()
    }

    pub fn lower_f64(&self) -> f64 {
        fx_to_f64(&self.lo).next_down()
    }

    pub fn upper_f64(&self) -> f64 {
        fx_to_f64(&self.hi).next_up()
    }

    pub fn mid_f64(&self) -> f64 {
        fx_to_f64(&((&self.lo + &self.hi) / 2u32))
    }

    /// Width of the enclosure.
    pub fn width_f64(&self) -> f64 {
        fx_to_f64(&(&self.hi - &self.lo))
    }

    /// `Some(ordering)` only when the enclosures are disjoint or both are
    /// the same exact point.
    pub fn try_cmp(&self, o: &HiDec) -> Option<Ordering> {
        if self.hi < o.lo {
            Some(Ordering::Less)
        } else if self.lo > o.hi {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && o.lo == o.hi && self.lo == o.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// `self >= o`, certified.
    pub fn certainly_ge(&self, o: &HiDec) -> bool {
        self.lo >= o.hi
    }

    /// `self < o`, certified.
    pub fn certainly_lt(&self, o: &HiDec) -> bool {
        self.hi < o.lo
    }

    /// Smallest integer certainly `>= self`.
    pub fn ceil_int(&self) -> BigInt {
        self.hi.div_ceil(&one_fx())
    }

    pub fn floor_int(&self) -> BigInt {
        self.lo.div_floor(&one_fx())
    }

    pub fn min(&self, o: &HiDec) -> HiDec {
        HiDec { lo: (&self.lo).min(&o.lo).clone(), hi: (&self.hi).min(&o.hi).clone() }
    }

    /// Decimal rendering of the midpoint with `digits` fractional digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        let mid: BigInt = (&self.lo + &self.hi) / 2u32;
        let scale: BigInt = num_traits::pow(BigInt::from(10), digits);
        let v: BigInt = (&mid * &scale + (one_fx() >> 1u32)).div_floor(&one_fx());
        let (int, frac) = v.abs().div_rem(&scale);
        let sign = if v.is_negative() { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{:0>width$}", frac.to_string(), width = digits)
        }
    }
}

fn fx_to_f64(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        v.to_f64().unwrap() / 2f64.powi(FRAC as i32)
    } else {
        let shift = bits - 900;
        (v >> shift).to_f64().unwrap() * 2f64.powi(shift as i32 - FRAC as i32)
    }
}

/// `10^x` for a decimal exponent, as a mantissa in `[1, 10)` and a
/// power of ten.
pub fn sci_from_log10(x: &HiDec) -> (f64, BigInt) {
    let e = x.floor_int();
    let frac = x.sub(&HiDec::from_int(e.clone()));
    (frac.exp10().mid_f64(), e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let l2 = HiDec::ln2();
        assert!((l2.mid_f64() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(l2.width_f64() < 1e-80);
        let l10 = HiDec::from_int(1000).log10();
        assert!(l10.certainly_ge(&HiDec::from_decimal("2.9999999999")));
        assert!(l10.certainly_lt(&HiDec::from_decimal("3.0000000001")));
        assert_eq!(HiDec::from_decimal("1.5").exp().ln().to_decimal(20), "1.50000000000000000000");
    }

    #[test]
    fn scientific() {
        let (m, e) = sci_from_log10(&HiDec::from_int(1553069).add(&HiDec::from_decimal("0.38048")));
        assert_eq!(e, BigInt::from(1553069));
        assert!((m - 2.4015).abs() < 1e-3);
        assert_eq!(HiDec::from_ratio(-7, 2).floor_int(), BigInt::from(-4));
        assert_eq!(HiDec::from_ratio(7, 2).to_decimal(1), "3.5");
    }
}
