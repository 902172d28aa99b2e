use super::DenseMatrix;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Lower-triangular Cholesky factor `F` with `F F^T = A`.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(Cholesky::factor(a)?.factor)
}

#[derive(Clone, Debug)]
pub struct Cholesky {
    factor: DenseMatrix,
}

impl Cholesky {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Cholesky of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        if !a.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::PreconditionViolation(format!(
                "Cholesky input is not symmetric (relative asymmetry {:e})",
                a.asymmetry()
            )));
        }
        let n = a.rows();
        let mut f = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let fj = f.row(j);
            let d = a[(j, j)] - fj[..j].iter().map(|v| v * v).sum::<f64>();
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { step: j, pivot: d });
            }
            let djj = d.sqrt();
            f[(j, j)] = djj;
            for i in j + 1..n {
                let s: f64 = f.row(i)[..j].iter().zip(&f.row(j)[..j]).map(|(x, y)| x * y).sum();
                f[(i, j)] = (a[(i, j)] - s) / djj;
            }
        }
        Ok(Self { factor: f })
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.factor.rows()
    }

    /// Solves `F y = b` in place.
    pub fn forward_in_place(&self, y: &mut [f64]) {
        for i in 0..self.dim() {
            let row = self.factor.row(i);
            let s: f64 = row[..i].iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / row[i];
        }
    }

    /// Solves `F^T x = y` in place.
    pub fn backward_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let xi = x[i] / self.factor[(i, i)];
            x[i] = xi;
            let row = self.factor.row(i);
            for k in 0..i {
                x[k] -= row[k] * xi;
            }
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} for dimension {}",
                b.len(),
                self.dim()
            )));
        }
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        Ok(x)
    }

    /// `F^{-1} M`, solving row-wise so every update touches contiguous rows.
    pub fn forward_matrix(&self, m: &DenseMatrix) -> DenseMatrix {
        assert_eq!(m.rows(), self.dim());
        let mut x = m.clone();
        let cols = m.cols();
        for i in 0..self.dim() {
            let (head, tail) = x.as_mut_slice().split_at_mut(i * cols);
            let xi = &mut tail[..cols];
            let frow = self.factor.row(i);
            for k in 0..i {
                let l = frow[k];
                if l != 0.0 {
                    for (v, &u) in xi.iter_mut().zip(&head[k * cols..(k + 1) * cols]) {
                        *v -= l * u;
                    }
                }
            }
            let d = frow[i];
            xi.iter_mut().for_each(|v| *v /= d);
        }
        x
    }
}
