//! Double saddle-point systems `K = [A B^T 0; B -D C^T; 0 C 0]` and their
//! block preconditioners.

mod bfbt;
mod io;
mod precond;
mod random;
mod schur;

pub use bfbt::{bfbt_s2_inverse, bfbt_s2_inverse_dense, build_w_factors, projector_p, S1Action, WFactors};
pub use io::{load_system_dir, save_system_dir, Manifest, SystemBundle};
pub use precond::{
    assemble_block_preconditioner, dense_inverse_operator, exact_a_inverse, exact_s1_inverse, exact_solver, ichol_operator,
    preconditioned_matrix, ASolve, BlockPreconditioner, Family, PreconditionerSpec, S1Solve, S2Solve,
    StructureHints,
};
pub use random::{random_instance, InstanceCase, RandomInstanceConfig};
pub use schur::{s1_sparse, s2_dense, schur_exact, Provenance, SchurPair};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Signs of the second diagonal block in `K`, `M_LT` and `M_D`.
pub(crate) mod signs {
    /// `K` stores `-D`.
    pub const K22: f64 = -1.0;
    /// `M_LT` stores `-S_1`.
    pub const MLT22: f64 = -1.0;
    /// `M_D` stores `+S_1`.
    pub const MD22: f64 = 1.0;
}

/// Blocks `A (n x n)`, `B (m x n)`, `C (p x m)`, `D (m x m)`.
#[derive(Clone, Debug)]
pub struct DoubleSaddleSystem {
    a: CsrMatrix,
    b: CsrMatrix,
    c: CsrMatrix,
    d: CsrMatrix,
}

impl DoubleSaddleSystem {
    pub fn new(a: CsrMatrix, b: CsrMatrix, c: CsrMatrix, d: CsrMatrix) -> Result<Self> {
        let (n, m) = (a.rows(), b.rows());
        let ok = a.cols() == n && b.cols() == n && c.cols() == m && d.rows() == m && d.cols() == m;
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                c.rows(),
                c.cols(),
                d.rows(),
                d.cols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn from_dense(a: &DenseMatrix, b: &DenseMatrix, c: &DenseMatrix, d: &DenseMatrix) -> Result<Self> {
        Self::new(
            CsrMatrix::from_dense(a),
            CsrMatrix::from_dense(b),
            CsrMatrix::from_dense(c),
            CsrMatrix::from_dense(d),
        )
    }

    pub fn a(&self) -> &CsrMatrix {
        &self.a
    }
    pub fn b(&self) -> &CsrMatrix {
        &self.b
    }
    pub fn c(&self) -> &CsrMatrix {
        &self.c
    }
    pub fn d(&self) -> &CsrMatrix {
        &self.d
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }
    pub fn m(&self) -> usize {
        self.b.rows()
    }
    pub fn p(&self) -> usize {
        self.c.rows()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n(), self.m(), self.p())
    }

    pub fn total_dim(&self) -> usize {
        self.n() + self.m() + self.p()
    }

    pub fn d_is_zero(&self) -> bool {
        self.d.values().iter().all(|&v| v == 0.0)
    }

    /// `A` and `D` symmetric to a relative `1e-12`.
    pub fn is_symmetric(&self) -> bool {
        self.a.is_symmetric(1e-12) && self.d.is_symmetric(1e-12)
    }

    pub fn assemble_k(&self) -> CsrMatrix {
        assemble_k(self)
    }

    /// Splits a full-length vector into its three blocks.
    pub fn split<'v>(&self, x: &'v [f64]) -> (&'v [f64], &'v [f64], &'v [f64]) {
        let (n, m) = (self.n(), self.m());
        (&x[..n], &x[n..n + m], &x[n + m..])
    }
}

/// Assembles `[A B^T 0; B -D C^T; 0 C 0]`.
pub fn assemble_k(sys: &DoubleSaddleSystem) -> CsrMatrix {
    let (n, m, p) = sys.dims();
    let mut trip = Vec::with_capacity(sys.a.nnz() + 2 * sys.b.nnz() + 2 * sys.c.nnz() + sys.d.nnz());
    trip.extend(sys.a.triplets());
    for (i, j, v) in sys.b.triplets() {
        trip.push((n + i, j, v));
        trip.push((j, n + i, v));
    }
    trip.extend(sys.d.triplets().map(|(i, j, v)| (n + i, n + j, signs::K22 * v)));
    for (i, j, v) in sys.c.triplets() {
        trip.push((n + m + i, n + j, v));
        trip.push((n + j, n + m + i, v));
    }
    let dim = n + m + p;
    CsrMatrix::from_triplets(dim, dim, &trip).expect("block offsets stay in range")
}
