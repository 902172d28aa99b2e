use super::CsrMatrix;
use crate::error::{Error, Result};

/// Banded Cholesky `A = F F^T` for SPD matrices of half-bandwidth `bw`.
///
/// Row `i` of the factor is stored as `bw + 1` entries covering columns
/// `i - bw ..= i`.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix, bandwidth: usize) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "banded Cholesky of a {}x{} matrix",
                n,
                a.cols()
            )));
        }
        if !a.is_symmetric(1e-12) {
            return Err(Error::PreconditionViolation("banded Cholesky input is not symmetric".into()));
        }
        let bw = bandwidth;
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for (i, j, v) in a.triplets() {
            if i.abs_diff(j) > bw {
                return Err(Error::BandViolation {
                    row: i,
                    col: j,
                    bandwidth: bw,
                });
            }
            if j <= i {
                band[i * w + (j + bw - i)] = v;
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // F[i][j] = (A[i][j] - sum_{k<j} F[i][k] F[j][k]) / F[j][j]
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = band[i * w + (j + bw - i)];
                for k in klo..j {
                    s -= band[i * w + (k + bw - i)] * band[j * w + (k + bw - j)];
                }
                if j == i {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { step: i, pivot: s });
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + (j + bw - i)] = s / band[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &self.band[i * w..(i + 1) * w];
            let s: f64 = (lo..i).map(|k| row[k + bw - i] * x[k]).sum();
            x[i] = (x[i] - s) / row[bw];
        }
        for i in (0..n).rev() {
            let row = &self.band[i * w..(i + 1) * w];
            let xi = x[i] / row[bw];
            x[i] = xi;
            for k in i.saturating_sub(bw)..i {
                x[k] -= row[k + bw - i] * xi;
            }
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(b.len(), self.n)?;
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Solves `A X = B` for each right-hand side in `rhs`.
pub fn banded_cholesky_solve(a: &CsrMatrix, bandwidth: usize, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let f = BandedCholesky::factor(a, bandwidth)?;
    rhs.iter().map(|b| f.solve_vec(b)).collect()
}

/// Banded LU without pivoting on a symmetrically permuted matrix.
///
/// With `perm[new] = old`, the factorization is of `P A P^T`; solves take and
/// return vectors in the original ordering. Intended for matrices whose
/// symmetric part is positive definite.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row `i` covers columns `i - kl ..= i + ku`.
    band: Vec<f64>,
    perm: Option<Vec<usize>>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix, perm: Option<Vec<usize>>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch(format!("banded LU of a {}x{} matrix", n, a.cols())));
        }
        let permuted;
        let a = match &perm {
            Some(p) => {
                permuted = a.permute_symmetric(p)?;
                &permuted
            }
            None => a,
        };
        let (kl, ku) = a.lower_upper_bandwidth();
        let w = kl + ku + 1;
        let mut band = vec![0.0; n * w];
        for (i, j, v) in a.triplets() {
            band[i * w + (j + kl - i)] = v;
        }
        let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let pivot = band[k * w + kl];
            if pivot.abs() <= 1e-13 * scale || !pivot.is_finite() {
                return Err(Error::SingularMatrix { step: k, pivot });
            }
            let jmax = (k + ku).min(n - 1);
            for i in k + 1..=(k + kl).min(n - 1) {
                let idx = i * w + (k + kl - i);
                let factor = band[idx] / pivot;
                band[idx] = factor;
                if factor == 0.0 {
                    continue;
                }
                for j in k + 1..=jmax {
                    band[i * w + (j + kl - i)] -= factor * band[k * w + (j + kl - k)];
                }
            }
        }
        Ok(Self { n, kl, ku, band, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(b.len(), self.n)?;
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.kl + self.ku + 1);
        let mut x: Vec<f64> = match &self.perm {
            Some(p) => p.iter().map(|&old| b[old]).collect(),
            None => b.to_vec(),
        };
        for i in 0..n {
            let row = &self.band[i * w..(i + 1) * w];
            let s: f64 = (i.saturating_sub(kl)..i).map(|k| row[k + kl - i] * x[k]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.band[i * w..(i + 1) * w];
            let s: f64 = (i + 1..=(i + ku).min(n - 1)).map(|j| row[j + kl - i] * x[j]).sum();
            x[i] = (x[i] - s) / row[kl];
        }
        Ok(match &self.perm {
            Some(p) => {
                let mut out = vec![0.0; n];
                for (new, &old) in p.iter().enumerate() {
                    out[old] = x[new];
                }
                out
            }
            None => x,
        })
    }
}

fn check_len(got: usize, n: usize) -> Result<()> {
    if got != n {
        return Err(Error::DimensionMismatch(format!("rhs length {got} for dimension {n}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{lu_solve, DenseMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_1d(n: usize, h: f64) -> CsrMatrix {
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 2.0 / (h * h)));
            if i > 0 {
                trip.push((i, i - 1, -1.0 / (h * h)));
                trip.push((i - 1, i, -1.0 / (h * h)));
            }
        }
        CsrMatrix::from_triplets(n, n, &trip).unwrap()
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![vec![1.0, -2.0, 3.0], vec![0.5, 0.0, 7.0]];
        assert_eq!(banded_cholesky_solve(&CsrMatrix::identity(3), 0, &b).unwrap(), b);
    }

    #[test]
    fn tridiagonal_matches_dense_lu() {
        let a = laplacian_1d(3, 0.25);
        let x = banded_cholesky_solve(&a, 1, &[vec![1.0; 3]]).unwrap();
        let xd = lu_solve(&a.to_dense(), &DenseMatrix::column(&[1.0; 3])).unwrap();
        for i in 0..3 {
            assert!((x[0][i] - xd[(i, 0)]).abs() < 1e-12 * xd.max_abs());
        }
    }

    #[test]
    fn band_violation_is_reported() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (2, 2, 2.0), (1, 1, 2.0), (0, 2, 0.1), (2, 0, 0.1)]).unwrap();
        assert!(matches!(
            BandedCholesky::factor(&a, 1),
            Err(Error::BandViolation { row: 0, col: 2, bandwidth: 1 })
        ));
        assert!(BandedCholesky::factor(&a, 2).is_ok());
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(BandedCholesky::factor(&a, 1), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn banded_lu_matches_dense_on_permuted_nonsymmetric() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 6.0));
            for d in 1..=3usize {
                if i + d < n {
                    trip.push((i, i + d, rng.random_range(-1.0..1.0)));
                    trip.push((i + d, i, rng.random_range(-1.0..1.0)));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &trip).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let xd = lu_solve(&a.to_dense(), &DenseMatrix::column(&b)).unwrap();
        let plain = BandedLu::factor(&a, None).unwrap();
        assert_eq!(plain.bandwidths(), (3, 3));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(0, 1);
        perm.swap(10, 12);
        let permuted = BandedLu::factor(&a, Some(perm)).unwrap();
        for f in [plain, permuted] {
            let x = f.solve_vec(&b).unwrap();
            for i in 0..n {
                assert!((x[i] - xd[(i, 0)]).abs() < 1e-12);
            }
        }
    }
}
