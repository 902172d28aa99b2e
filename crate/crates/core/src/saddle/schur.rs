use serde::{Deserialize, Serialize};

use super::DoubleSaddleSystem;
use crate::dense::{DenseMatrix, Lu, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};
use crate::krylov::LinearOperator;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Approximated,
}

/// Dense `S1 = D + B A^-1 B^T` and `S2 = C S1^-1 C^T`.
#[derive(Clone, Debug)]
pub struct SchurPair {
    pub s1: DenseMatrix,
    pub s2: DenseMatrix,
    pub s1_provenance: Provenance,
    pub s2_provenance: Provenance,
}

/// Both Schur complements via dense LU.
pub fn schur_exact(sys: &DoubleSaddleSystem) -> Result<SchurPair> {
    let (n, m, _) = sys.dims();
    let big = n.max(m);
    if big > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded {
            dim: big,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let a = sys.a().to_dense();
    let bt = sys.b().transpose().to_dense();
    let x = Lu::factor(&a)?.solve(&bt)?;
    let s1 = sys.d().to_dense().add(&sys.b().to_dense().matmul(&x)?)?;
    let ct = sys.c().transpose().to_dense();
    let y = Lu::factor(&s1)?.solve(&ct)?;
    let s2 = sys.c().to_dense().matmul(&y)?;
    Ok(SchurPair {
        s1,
        s2,
        s1_provenance: Provenance::Exact,
        s2_provenance: Provenance::Exact,
    })
}

/// `D + B A~^-1 B^T` as a sparse matrix, given an (approximate) `A` inverse.
///
/// Only rows of `B` that hold entries contribute, so a `B` supported on a few
/// rows yields a small dense correction on top of `D`.
pub fn s1_sparse(sys: &DoubleSaddleSystem, a_inv: &dyn LinearOperator) -> Result<CsrMatrix> {
    let (n, m, _) = sys.dims();
    if a_inv.dim() != n {
        return Err(Error::DimensionMismatch(format!("A inverse has dim {}, expected {n}", a_inv.dim())));
    }
    let b = sys.b();
    let active: Vec<usize> = (0..m).filter(|&i| !b.row(i).0.is_empty()).collect();
    let mut trip: Vec<(usize, usize, f64)> = sys.d().triplets().collect();
    let mut rhs = vec![0.0; n];
    let mut sol = vec![0.0; n];
    for &r in &active {
        rhs.iter_mut().for_each(|v| *v = 0.0);
        let (idx, vals) = b.row(r);
        for (&j, &v) in idx.iter().zip(vals) {
            rhs[j] = v;
        }
        a_inv.apply(&rhs, &mut sol);
        for &i in &active {
            let (idx, vals) = b.row(i);
            let s: f64 = idx.iter().zip(vals).map(|(&j, &v)| v * sol[j]).sum();
            trip.push((i, r, s));
        }
    }
    CsrMatrix::from_triplets(m, m, &trip)
}

/// Dense `C S1^-1 C^T` from an `S1` solver.
pub fn s2_dense(c: &CsrMatrix, s1_inv: &dyn LinearOperator) -> Result<DenseMatrix> {
    let (p, m) = (c.rows(), c.cols());
    if s1_inv.dim() != m {
        return Err(Error::DimensionMismatch(format!("S1 inverse has dim {}, expected {m}", s1_inv.dim())));
    }
    if p > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded {
            dim: p,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let mut s2 = DenseMatrix::zeros(p, p);
    let mut col = vec![0.0; m];
    let mut sol = vec![0.0; m];
    let mut out = vec![0.0; p];
    for j in 0..p {
        col.iter_mut().for_each(|v| *v = 0.0);
        // column j of C^T is row j of C
        let (cidx, cvals) = c.row(j);
        for (&k, &v) in cidx.iter().zip(cvals) {
            col[k] = v;
        }
        s1_inv.apply(&col, &mut sol);
        c.spmv_into(&sol, &mut out);
        s2.set_column(j, &out);
    }
    Ok(s2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::cholesky;
    use crate::saddle::precond::dense_inverse_operator;
    use crate::saddle::{random_instance, InstanceCase, RandomInstanceConfig};

    #[test]
    fn identity_blocks() {
        let sys = DoubleSaddleSystem::new(
            CsrMatrix::identity(3),
            CsrMatrix::identity(3),
            CsrMatrix::identity(3),
            CsrMatrix::zeros(3, 3),
        )
        .unwrap();
        let pair = schur_exact(&sys).unwrap();
        assert_eq!(pair.s1, DenseMatrix::identity(3));
        assert_eq!(pair.s2, DenseMatrix::identity(3));
    }

    #[test]
    fn scalar_hand_arithmetic() {
        let s = |v: f64| DenseMatrix::from_rows(&[&[v]]);
        let sys = DoubleSaddleSystem::from_dense(&s(2.0), &s(3.0), &s(5.0), &s(7.0)).unwrap();
        let pair = schur_exact(&sys).unwrap();
        assert!((pair.s1[(0, 0)] - 11.5).abs() < 1e-15);
        assert!((pair.s2[(0, 0)] - 25.0 / 11.5).abs() < 1e-15);
    }

    #[test]
    fn random_symmetric_instance_gives_spd_complements() {
        let sys = random_instance(&RandomInstanceConfig {
            n: 20,
            m: 10,
            p: 4,
            case: InstanceCase::Symmetric,
            seed: 1,
        })
        .unwrap();
        let pair = schur_exact(&sys).unwrap();
        assert!(pair.s1.is_symmetric(1e-12));
        assert!(pair.s2.is_symmetric(1e-12));
        assert!(cholesky(&pair.s1.symmetric_part()).is_ok());
        assert!(cholesky(&pair.s2.symmetric_part()).is_ok());
    }

    #[test]
    fn sparse_and_dense_routes_agree() {
        let sys = random_instance(&RandomInstanceConfig {
            n: 12,
            m: 7,
            p: 3,
            case: InstanceCase::DNonzeroPair,
            seed: 4,
        })
        .unwrap();
        let pair = schur_exact(&sys).unwrap();
        let a_inv = dense_inverse_operator(&sys.a().to_dense()).unwrap();
        let s1 = s1_sparse(&sys, a_inv.as_ref()).unwrap().to_dense();
        assert!(s1.sub(&pair.s1).unwrap().max_abs() < 1e-10 * pair.s1.max_abs());
        let s1_inv = dense_inverse_operator(&pair.s1).unwrap();
        let s2 = s2_dense(sys.c(), s1_inv.as_ref()).unwrap();
        assert!(s2.sub(&pair.s2).unwrap().max_abs() < 1e-10 * pair.s2.max_abs());
    }
}
