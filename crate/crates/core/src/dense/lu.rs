use super::DenseMatrix;
use crate::error::{Error, Result};

/// Relative pivot threshold: a pivot below `PIVOT_TOL * max|A|` is singular.
const PIVOT_TOL: f64 = 1e-13;

/// LU factorization with partial pivoting, `P A = L U`, stored packed.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
    min_pivot_ratio: f64,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        let threshold = PIVOT_TOL * scale;
        let mut min_pivot_ratio = f64::INFINITY;

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= threshold || scale == 0.0 {
                return Err(Error::SingularMatrix { step: k, pivot: pmax });
            }
            min_pivot_ratio = min_pivot_ratio.min(pmax / scale);
            if p != k {
                perm.swap(p, k);
                let cols = lu.cols();
                let data = lu.as_mut_slice();
                for j in 0..cols {
                    data.swap(k * cols + j, p * cols + j);
                }
            }
            let pivot = lu[(k, k)];
            let cols = lu.cols();
            let (head, tail) = lu.as_mut_slice().split_at_mut((k + 1) * cols);
            let krow = &head[k * cols..];
            for i in 0..n - k - 1 {
                let row = &mut tail[i * cols..(i + 1) * cols];
                let factor = row[k] / pivot;
                row[k] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        row[j] -= factor * krow[j];
                    }
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            min_pivot_ratio,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Smallest `|pivot| / max|A|` encountered; a cheap nonsingularity gauge.
    pub fn min_pivot_ratio(&self) -> f64 {
        self.min_pivot_ratio
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} for dimension {n}",
                b.len()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Solves in place for a right-hand side that is already permuted.
    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
    }

    pub fn solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.rows() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "rhs has {} rows for dimension {}",
                b.rows(),
                self.dim()
            )));
        }
        let mut x = DenseMatrix::zeros(b.rows(), b.cols());
        let mut col = vec![0.0; b.rows()];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(self.perm[i], j)];
            }
            self.solve_in_place(&mut col);
            x.set_column(j, &col);
        }
        Ok(x)
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} for dimension {n}",
                b.len()
            )));
        }
        // A^T = U^T L^T P, so solve U^T y = b, L^T z = y, x = P^T z.
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lu[(k, i)] * y[k];
            }
            y[i] = s / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.lu[(k, i)] * y[k];
            }
            y[i] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        Ok(x)
    }

    /// Explicit inverse; only for desk-scale matrices.
    pub fn inverse(&self) -> DenseMatrix {
        self.solve(&DenseMatrix::identity(self.dim()))
            .expect("identity has matching dimension")
    }
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn lu_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    Lu::factor(a)?.solve(b)
}
