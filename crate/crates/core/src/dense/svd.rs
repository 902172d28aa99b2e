use super::{dot, norm2, DenseMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 30;
const GRAM_TOL: f64 = 1e-14;
const RANK_TOL: f64 = 1e-12;

/// Full SVD `A = U Sigma V^T` of a tall `r x c` matrix (`r >= c`).
///
/// `U` is completed to an `r x r` orthogonal matrix; its leading `c` columns
/// (`u_hat`) span the range of `A` and the trailing `r - c` columns
/// (`u_tilde`) its orthogonal complement.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
    /// Smallest singular value below `1e-12` times the largest.
    pub rank_deficient: bool,
}

impl SvdFactors {
    pub fn u_hat(&self) -> DenseMatrix {
        self.u.block(0, 0, self.u.rows(), self.singular_values.len())
    }

    pub fn u_tilde(&self) -> DenseMatrix {
        let c = self.singular_values.len();
        self.u.block(0, c, self.u.rows(), self.u.rows() - c)
    }

    pub fn sigma_hat(&self) -> DenseMatrix {
        DenseMatrix::from_diagonal(&self.singular_values)
    }

    /// `U_hat Sigma_hat V^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u_hat();
        for i in 0..us.rows() {
            for (j, s) in self.singular_values.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&self.v.transpose()).expect("consistent SVD shapes")
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &DenseMatrix) -> Result<SvdFactors> {
    let (r, c) = (a.rows(), a.cols());
    if r < c {
        return Err(Error::DimensionMismatch(format!(
            "SVD expects rows >= cols, got {r}x{c}"
        )));
    }
    // work on columns as contiguous rows
    let mut cols = a.transpose();
    let mut vt = DenseMatrix::identity(c);
    let fro2 = a.frobenius_norm().powi(2);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..c {
            for j in i + 1..c {
                let alpha = norm2(cols.row(i)).powi(2);
                let beta = norm2(cols.row(j)).powi(2);
                let gamma = dot(cols.row(i), cols.row(j));
                off = off.max(gamma.abs());
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_rows(&mut cols, i, j, cs, sn);
                rotate_rows(&mut vt, i, j, cs, sn);
            }
        }
        if off <= GRAM_TOL * fro2 {
            break;
        }
    }

    let mut order: Vec<(usize, f64)> = (0..c).map(|j| (j, norm2(cols.row(j)))).collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1));
    let smax = order.first().map_or(0.0, |o| o.1);
    let singular_values: Vec<f64> = order.iter().map(|o| o.1).collect();
    let rank_deficient = c > 0 && singular_values[c - 1] < RANK_TOL * smax;

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(r);
    let mut v = DenseMatrix::zeros(c, c);
    let mut missing = Vec::new();
    for (k, &(j, s)) in order.iter().enumerate() {
        for i in 0..c {
            v[(i, k)] = vt[(j, i)];
        }
        if s > RANK_TOL * smax && s > 0.0 {
            basis.push(cols.row(j).iter().map(|x| x / s).collect());
        } else {
            missing.push(k);
            basis.push(vec![0.0; r]);
        }
    }
    complete_basis(&mut basis, &missing, r);

    let mut u = DenseMatrix::zeros(r, r);
    for (k, col) in basis.iter().enumerate() {
        u.set_column(k, col);
    }
    Ok(SvdFactors {
        u,
        singular_values,
        v,
        rank_deficient,
    })
}

fn rotate_rows(m: &mut DenseMatrix, i: usize, j: usize, c: f64, s: f64) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(j * cols);
    let ri = &mut head[i * cols..(i + 1) * cols];
    let rj = &mut tail[..cols];
    for (x, y) in ri.iter_mut().zip(rj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the zero placeholders listed in `missing` and appends vectors until
/// `basis` is an orthonormal basis of R^r, using Gram-Schmidt on unit vectors.
fn complete_basis(basis: &mut Vec<Vec<f64>>, missing: &[usize], r: usize) {
    let needed = missing.len() + (r - basis.len());
    if needed == 0 {
        return;
    }
    let mut fresh = Vec::with_capacity(needed);
    let mut candidate = 0usize;
    while fresh.len() < needed && candidate < r {
        let mut w = vec![0.0; r];
        w[candidate] = 1.0;
        candidate += 1;
        for _ in 0..2 {
            for b in basis.iter().chain(fresh.iter()) {
                let proj = dot(b, &w);
                if proj != 0.0 {
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= proj * bi;
                    }
                }
            }
        }
        let nw = norm2(&w);
        if nw > 1e-6 {
            w.iter_mut().for_each(|x| *x /= nw);
            fresh.push(w);
        }
    }
    let mut fresh = fresh.into_iter();
    for &k in missing {
        basis[k] = fresh.next().expect("enough completion vectors");
    }
    basis.extend(fresh);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_has_unit_singular_values() {
        let f = svd(&DenseMatrix::identity(4)).unwrap();
        assert!(f.singular_values.iter().all(|s| (s - 1.0).abs() < 1e-15));
        assert!(!f.rank_deficient);
    }

    #[test]
    fn axis_aligned() {
        let a = DenseMatrix::from_rows(&[&[3.0, 0.0], &[0.0, 4.0], &[0.0, 0.0]]);
        let f = svd(&a).unwrap();
        assert_eq!(f.singular_values, vec![4.0, 3.0]);
        assert_eq!(f.u.rows(), 3);
        assert!(f.reconstruct().sub(&a).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn random_tall_reconstruction_and_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = DenseMatrix::from_fn(12, 5, |_, _| rng.random_range(-1.0..1.0));
        let f = svd(&a).unwrap();
        assert!(f.reconstruct().sub(&a).unwrap().frobenius_norm() <= 1e-12);
        let cross = f.u_tilde().transpose().matmul(&f.u_hat()).unwrap();
        assert!(cross.max_abs() < 1e-12);
        let utu = f.u.transpose().matmul(&f.u).unwrap();
        assert!(utu.sub(&DenseMatrix::identity(12)).unwrap().max_abs() < 1e-12);
        let vtv = f.v.transpose().matmul(&f.v).unwrap();
        assert!(vtv.sub(&DenseMatrix::identity(5)).unwrap().max_abs() < 1e-12);
        assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn flags_rank_deficiency() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        let f = svd(&a).unwrap();
        assert!(f.rank_deficient);
        let utu = f.u.transpose().matmul(&f.u).unwrap();
        assert!(utu.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-12);
        assert!(f.reconstruct().sub(&a).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn wide_input_rejected() {
        assert!(svd(&DenseMatrix::zeros(2, 3)).is_err());
    }
}
