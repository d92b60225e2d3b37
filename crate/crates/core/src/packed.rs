//! Digit vectors over F_p packed into a single `u64`.
//!
//! Each digit gets `b = ceil(log2 p) + 1` bits (one bit of headroom so that
//! the sum of two digits never carries into its neighbour), except for
//! `p = 2` where one bit per digit suffices and addition is XOR. Linear maps
//! are tabulated per chunk of input digits, so applying an F_p-linear map is
//! a handful of table lookups and packed additions.

use crate::linalg::Matrix;

/// Lookup tables are kept below this many index bits per chunk.
const CHUNK_BITS: u32 = 12;
/// Digits wider than this cannot be tabulated.
const MAX_DIGIT_BITS: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedLayout {
    p: u64,
    bits: u32,
    digits: usize,
    high: u64,
    off: u64,
    pfield: u64,
}

impl PackedLayout {
    /// Layout for `digits` residues mod `p`, if they fit in 64 bits.
    pub fn new(p: u64, digits: usize) -> Option<Self> {
        let bits = if p == 2 { 1 } else { 64 - (p - 1).leading_zeros() + 1 };
        if bits > MAX_DIGIT_BITS || bits as usize * digits > 64 {
            return None;
        }
        let mut high = 0u64;
        let mut off = 0u64;
        let mut pfield = 0u64;
        for i in 0..digits {
            let s = i as u32 * bits;
            high |= 1 << (s + bits - 1);
            pfield |= p << s;
            if p != 2 {
                off |= ((1u64 << (bits - 1)) - p) << s;
            }
        }
        Some(PackedLayout { p, bits, digits, high, off, pfield })
    }

    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn pack(&self, v: &[u64]) -> u64 {
        debug_assert_eq!(v.len(), self.digits);
        v.iter()
            .enumerate()
            .fold(0, |acc, (i, &d)| acc | (d << (i as u32 * self.bits)))
    }

    #[inline]
    pub fn digit(&self, x: u64, i: usize) -> u64 {
        (x >> (i as u32 * self.bits)) & ((1 << self.bits) - 1)
    }

    pub fn unpack(&self, x: u64) -> Vec<u64> {
        (0..self.digits).map(|i| self.digit(x, i)).collect()
    }

    #[inline]
    fn reduce_once(&self, s: u64) -> u64 {
        let t = s + self.off;
        let ge = (t & self.high) >> (self.bits - 1);
        s - ge * self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        if self.p == 2 {
            a ^ b
        } else {
            self.reduce_once(a + b)
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if self.p == 2 {
            a
        } else {
            self.reduce_once(self.pfield - a)
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    fn chunking(&self) -> (usize, usize) {
        let per = ((CHUNK_BITS / self.bits).max(1) as usize).min(self.digits.max(1));
        let chunks = self.digits.div_ceil(per);
        (per, chunks)
    }
}

/// Tabulated F_p-linear map between packed layouts.
#[derive(Clone, Debug)]
pub struct PackedLinearMap {
    input: PackedLayout,
    output: PackedLayout,
    per: usize,
    chunk_mask: u64,
    tables: Vec<Vec<u64>>,
}

/// Calls `f(pattern, digits)` for every bit pattern of a chunk of `len`
/// digits whose fields all hold valid residues.
fn for_each_chunk_value(layout: &PackedLayout, len: usize, mut f: impl FnMut(u64, &[u64])) {
    let mut digits = vec![0u64; len];
    loop {
        let pattern = digits
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &d)| acc | (d << (i as u32 * layout.bits)));
        f(pattern, &digits);
        let mut i = 0;
        loop {
            if i == len {
                return;
            }
            digits[i] += 1;
            if digits[i] < layout.p {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

impl PackedLinearMap {
    /// `matrix` maps `input.digits()` coordinates to `output.digits()`.
    pub fn new(input: &PackedLayout, matrix: &Matrix, output: &PackedLayout) -> Self {
        assert_eq!(matrix.cols, input.digits);
        assert_eq!(matrix.rows, output.digits);
        let p = input.p;
        let (per, chunks) = input.chunking();
        let chunk_mask = if per as u32 * input.bits == 64 {
            u64::MAX
        } else {
            (1u64 << (per as u32 * input.bits)) - 1
        };
        let mut tables = Vec::with_capacity(chunks);
        for k in 0..chunks {
            let lo = k * per;
            let len = per.min(input.digits - lo);
            let mut table = vec![0u64; 1 << (len as u32 * input.bits)];
            for_each_chunk_value(input, len, |pattern, digits| {
                let out: Vec<u64> = (0..output.digits)
                    .map(|r| {
                        digits.iter().enumerate().fold(0u64, |acc, (j, &d)| {
                            (acc + d * matrix.get(r, lo + j)) % p
                        })
                    })
                    .collect();
                table[pattern as usize] = output.pack(&out);
            });
            tables.push(table);
        }
        PackedLinearMap { input: input.clone(), output: output.clone(), per, chunk_mask, tables }
    }

    #[inline]
    pub fn apply(&self, x: u64) -> u64 {
        let shift = self.per as u32 * self.input.bits;
        let mut acc = 0u64;
        let mut rest = x;
        for table in &self.tables {
            acc = self.output.add(acc, table[(rest & self.chunk_mask) as usize]);
            rest = rest.checked_shr(shift).unwrap_or(0);
        }
        acc
    }

    pub fn output(&self) -> &PackedLayout {
        &self.output
    }
}

/// Converts a packed vector to the integer `sum d_i p^i`.
#[derive(Clone, Debug)]
pub struct PackedIndex {
    bits: u32,
    per: usize,
    chunk_mask: u64,
    tables: Vec<Vec<u64>>,
}

impl PackedIndex {
    pub fn new(layout: &PackedLayout) -> Self {
        let (per, chunks) = layout.chunking();
        let chunk_mask = if per as u32 * layout.bits == 64 {
            u64::MAX
        } else {
            (1u64 << (per as u32 * layout.bits)) - 1
        };
        let mut tables = Vec::with_capacity(chunks);
        let mut scale = 1u64;
        for k in 0..chunks {
            let len = per.min(layout.digits - k * per);
            let mut table = vec![0u64; 1 << (len as u32 * layout.bits)];
            for_each_chunk_value(layout, len, |pattern, digits| {
                let v = digits.iter().rev().fold(0u64, |acc, &d| acc * layout.p + d);
                table[pattern as usize] = v.wrapping_mul(scale);
            });
            scale = scale.wrapping_mul(layout.p.wrapping_pow(len as u32));
            tables.push(table);
        }
        PackedIndex { bits: layout.bits, per, chunk_mask, tables }
    }

    #[inline]
    pub fn index(&self, x: u64) -> u64 {
        let shift = self.per as u32 * self.bits;
        let mut acc = 0u64;
        let mut rest = x;
        for table in &self.tables {
            acc = acc.wrapping_add(table[(rest & self.chunk_mask) as usize]);
            rest = rest.checked_shr(shift).unwrap_or(0);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Fp;

    #[test]
    fn packed_add_matches_digitwise() {
        for p in [2u64, 3, 5, 7, 13, 31] {
            let l = PackedLayout::new(p, 5).unwrap();
            let fp = Fp::new(p);
            let a = [0, 1, p - 1, p / 2, p - 1];
            let b = [p - 1, p - 1, p - 1, 0, 1];
            let sum: Vec<u64> = a.iter().zip(&b).map(|(&x, &y)| fp.add(x, y)).collect();
            let diff: Vec<u64> = a.iter().zip(&b).map(|(&x, &y)| fp.sub(x, y)).collect();
            assert_eq!(l.unpack(l.add(l.pack(&a), l.pack(&b))), sum);
            assert_eq!(l.unpack(l.sub(l.pack(&a), l.pack(&b))), diff);
            assert_eq!(l.neg(0), 0);
        }
    }

    #[test]
    fn linear_map_and_index() {
        let p = 5;
        let fp = Fp::new(p);
        let input = PackedLayout::new(p, 7).unwrap();
        let output = PackedLayout::new(p, 3).unwrap();
        let m = Matrix {
            rows: 3,
            cols: 7,
            data: (0..21).map(|i| (i * 7 + 3) % p).collect(),
        };
        let map = PackedLinearMap::new(&input, &m, &output);
        let idx = PackedIndex::new(&input);
        let v = vec![4, 0, 3, 1, 2, 4, 1];
        assert_eq!(output.unpack(map.apply(input.pack(&v))), m.apply(&fp, &v));
        let want = v.iter().rev().fold(0u64, |a, &d| a * p + d);
        assert_eq!(idx.index(input.pack(&v)), want);
    }
}
