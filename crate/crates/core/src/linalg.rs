//! Dense linear algebra over F_p: row reduction, affine solving and
//! subspace bases. Every F_q-linear map in the tower (Frobenius powers,
//! traces, q-associates) is F_p-linear, so this is the workhorse for exact
//! questions about them.

use crate::arith::Fp;

/// Row-major `rows x cols` matrix over F_p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix whose `j`-th column is `cols[j]`.
    pub fn from_columns(rows: usize, cols: &[Vec<u64>]) -> Self {
        let mut m = Self::zero(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                m.data[i * cols.len() + j] = v;
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn apply(&self, fp: &Fp, v: &[u64]) -> Vec<u64> {
        let lazy = fp.lazy_ok(self.cols);
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                if lazy {
                    let s: u64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
                    fp.reduce(s)
                } else {
                    row.iter()
                        .zip(v)
                        .fold(0, |acc, (&a, &b)| fp.add(acc, fp.mul(a, b)))
                }
            })
            .collect()
    }

    pub fn mul(&self, fp: &Fp, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let cols: Vec<Vec<u64>> = (0..other.cols)
            .map(|c| self.apply(fp, &other.column(c)))
            .collect();
        Matrix::from_columns(self.rows, &cols)
    }

    pub fn sub_identity(&self, fp: &Fp) -> Matrix {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            let v = m.data[i * self.cols + i];
            m.data[i * self.cols + i] = fp.sub(v, 1);
        }
        m
    }

    pub fn rank(&self, fp: &Fp) -> usize {
        let mut rows: Vec<Vec<u64>> = (0..self.rows).map(|r| self.row(r).to_vec()).collect();
        rref(fp, &mut rows, self.cols).len()
    }
}

/// Reduces `rows` (each of length `cols`) to reduced row echelon form in
/// place, dropping zero rows. Returns the pivot column of each kept row.
pub fn rref(fp: &Fp, rows: &mut Vec<Vec<u64>>, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(sel) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, sel);
        let inv = fp.inv(rows[r][c]);
        for v in rows[r].iter_mut() {
            *v = fp.mul(*v, inv);
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[c] != 0 {
                let f = row[c];
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x = fp.sub(*x, fp.mul(f, y));
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

/// Solves `A x = b`. Free variables are set to zero, so the returned
/// solution is a deterministic function of `(A, b)`. `None` when the system
/// is inconsistent. Also returns the rank of `A`.
pub fn solve(fp: &Fp, a: &Matrix, b: &[u64]) -> (Option<Vec<u64>>, usize) {
    let mut rows: Vec<Vec<u64>> = (0..a.rows)
        .map(|r| {
            let mut row = a.row(r).to_vec();
            row.push(b[r]);
            row
        })
        .collect();
    let pivots = rref(fp, &mut rows, a.cols + 1);
    let rank = pivots.iter().filter(|&&c| c < a.cols).count();
    if pivots.last() == Some(&a.cols) {
        return (None, rank);
    }
    let mut x = vec![0u64; a.cols];
    for (row, &c) in rows.iter().zip(&pivots) {
        x[c] = row[a.cols];
    }
    (Some(x), rank)
}

/// Basis of the kernel of `a`, returned in reduced row echelon form.
pub fn kernel(fp: &Fp, a: &Matrix) -> (Vec<Vec<u64>>, Vec<usize>) {
    let mut rows: Vec<Vec<u64>> = (0..a.rows).map(|r| a.row(r).to_vec()).collect();
    let pivots = rref(fp, &mut rows, a.cols);
    let free: Vec<usize> = (0..a.cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis: Vec<Vec<u64>> = free
        .iter()
        .map(|&f| {
            let mut v = vec![0u64; a.cols];
            v[f] = 1;
            for (row, &pc) in rows.iter().zip(&pivots) {
                v[pc] = fp.neg(row[f]);
            }
            v
        })
        .collect();
    let kp = rref(fp, &mut basis, a.cols);
    (basis, kp)
}

/// RREF basis (and pivots) of the span of `vectors`.
pub fn span(fp: &Fp, vectors: &[Vec<u64>], dim: usize) -> (Vec<Vec<u64>>, Vec<usize>) {
    let mut rows = vectors.to_vec();
    let piv = rref(fp, &mut rows, dim);
    (rows, piv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_with_free_variables() {
        let fp = Fp::new(5);
        // x0 + x1 = 3, 2x0 + 2x1 = 2 is inconsistent
        let a = Matrix { rows: 2, cols: 2, data: vec![1, 1, 2, 2] };
        assert_eq!(solve(&fp, &a, &[3, 2]).0, None);
        let (x, rank) = solve(&fp, &a, &[3, 1]);
        assert_eq!(rank, 1);
        assert_eq!(x, Some(vec![3, 0]));
    }

    #[test]
    fn kernel_dimension() {
        let fp = Fp::new(3);
        let a = Matrix { rows: 2, cols: 3, data: vec![1, 2, 0, 0, 0, 1] };
        let (k, _) = kernel(&fp, &a);
        assert_eq!(k.len(), 1);
        assert_eq!(a.apply(&fp, &k[0]), vec![0, 0]);
    }
}
