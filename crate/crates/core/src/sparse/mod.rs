//! Sparse storage and direct/incomplete factorizations.

mod banded;
mod csr;
mod ichol;
mod mtx;

pub use banded::{banded_cholesky_solve, BandedCholesky, BandedLu};
pub use csr::CsrMatrix;
pub use ichol::{ichol, IncompleteFactor};
pub use mtx::{read_mtx, read_mtx_file, write_mtx, write_mtx_file};
