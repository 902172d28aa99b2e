use std::collections::BTreeSet;

use super::CsrMatrix;
use crate::error::{Error, Result};

const MAX_ESCALATIONS: usize = 20;
const SHIFT_FRACTION: f64 = 1e-3;

/// Incomplete Cholesky factor `F` with `F F^T ~ A + shift I`.
#[derive(Clone, Debug)]
pub struct IncompleteFactor {
    f: CsrMatrix,
    drop_tol: f64,
    diagonal_shift: f64,
}

impl IncompleteFactor {
    /// Lower-triangular factor, diagonal stored last in each row.
    pub fn factor(&self) -> &CsrMatrix {
        &self.f
    }

    pub fn drop_tol(&self) -> f64 {
        self.drop_tol
    }

    /// Shift `alpha` actually added to the diagonal (0 when none was needed).
    pub fn diagonal_shift(&self) -> f64 {
        self.diagonal_shift
    }

    pub fn dim(&self) -> usize {
        self.f.rows()
    }

    /// Solves `F y = b` in place.
    pub fn forward_in_place(&self, y: &mut [f64]) {
        for i in 0..self.dim() {
            let (idx, vals) = self.f.row(i);
            let last = idx.len() - 1;
            let s: f64 = idx[..last].iter().zip(&vals[..last]).map(|(&k, &l)| l * y[k]).sum();
            y[i] = (y[i] - s) / vals[last];
        }
    }

    /// Solves `F^T x = y` in place.
    pub fn backward_in_place(&self, x: &mut [f64]) {
        for i in (0..self.dim()).rev() {
            let (idx, vals) = self.f.row(i);
            let last = idx.len() - 1;
            let xi = x[i] / vals[last];
            x[i] = xi;
            for (&k, &l) in idx[..last].iter().zip(&vals[..last]) {
                x[k] -= l * xi;
            }
        }
    }

    /// `(F F^T)^{-1} b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
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
}

/// Row-oriented incomplete Cholesky with scaled threshold dropping.
///
/// An off-diagonal update `w_k` (before division by the pivot) is discarded
/// when `|w_k| < drop_tol * sqrt(a_ii a_kk)`. A nonpositive pivot restarts
/// the factorization on `A + alpha I` with `alpha <- max(2 alpha, 1e-3 mean(diag A))`.
pub fn ichol(a: &CsrMatrix, drop_tol: f64) -> Result<IncompleteFactor> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "ichol of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    if !(drop_tol >= 0.0) {
        return Err(Error::PreconditionViolation(format!("drop tolerance {drop_tol} must be >= 0")));
    }
    let diag = a.diagonal_values();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::PreconditionViolation(format!(
            "ichol needs a positive diagonal, row {i} has {}",
            diag[i]
        )));
    }
    if !a.is_symmetric(1e-12) {
        return Err(Error::PreconditionViolation("ichol input is not symmetric".into()));
    }
    let n = a.rows();
    let mean_diag = if n == 0 { 0.0 } else { diag.iter().sum::<f64>() / n as f64 };

    let mut alpha = 0.0;
    for _ in 0..=MAX_ESCALATIONS {
        match factor_shifted(a, &diag, drop_tol, alpha) {
            Some(f) => {
                return Ok(IncompleteFactor {
                    f,
                    drop_tol,
                    diagonal_shift: alpha,
                })
            }
            None => alpha = f64::max(2.0 * alpha, SHIFT_FRACTION * mean_diag),
        }
    }
    Err(Error::Breakdown {
        attempts: MAX_ESCALATIONS,
        shift: alpha,
    })
}

/// One factorization attempt; `None` on a nonpositive pivot.
fn factor_shifted(a: &CsrMatrix, diag: &[f64], drop_tol: f64, alpha: f64) -> Option<CsrMatrix> {
    let n = a.rows();
    // columns of the finished rows of F: (row, value)
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut pivots = vec![0.0; n];
    let mut row_ptr = vec![0usize; n + 1];
    let mut col_idx = Vec::with_capacity(a.nnz());
    let mut values = Vec::with_capacity(a.nnz());

    let mut w = vec![0.0; n];
    let mut pending = BTreeSet::new();
    for i in 0..n {
        let (idx, vals) = a.row(i);
        let mut wii = alpha;
        for (&k, &v) in idx.iter().zip(vals) {
            if k < i {
                w[k] = v;
                pending.insert(k);
            } else if k == i {
                wii += v;
            }
        }
        let mut row: Vec<(usize, f64)> = Vec::new();
        while let Some(k) = pending.pop_first() {
            let wk = w[k];
            w[k] = 0.0;
            if wk.abs() < drop_tol * (diag[i] * diag[k]).sqrt() || wk == 0.0 {
                continue;
            }
            let lik = wk / pivots[k];
            wii -= lik * lik;
            for &(j, ljk) in &columns[k] {
                pending.insert(j);
                w[j] -= lik * ljk;
            }
            row.push((k, lik));
        }
        if !(wii > 0.0) || !wii.is_finite() {
            return None;
        }
        let lii = wii.sqrt();
        pivots[i] = lii;
        for &(k, v) in &row {
            col_idx.push(k);
            values.push(v);
            columns[k].push((i, v));
        }
        col_idx.push(i);
        values.push(lii);
        row_ptr[i + 1] = col_idx.len();
    }
    Some(CsrMatrix::new(n, n, row_ptr, col_idx, values).expect("rows emitted in increasing column order"))
}
