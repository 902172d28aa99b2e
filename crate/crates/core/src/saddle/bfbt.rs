use std::sync::Arc;

use super::precond::exact_a_inverse;
use super::DoubleSaddleSystem;
use crate::dense::{svd, Cholesky, DenseMatrix, Lu};
use crate::error::{Error, Result};
use crate::krylov::{FnOperator, LinearOperator};
use crate::sparse::BandedCholesky;

/// How `S1` is applied inside the BFBt approximation.
#[derive(Clone)]
pub enum S1Action {
    /// `D x + B A^-1 B^T x` with an exact `A` solve.
    Exact,
    /// A forward operator approximating `S1`.
    Supplied(Arc<dyn LinearOperator>),
}

/// Operator `x -> (C C^T)^-1 C S1 C^T (C C^T)^-1 x`.
pub fn bfbt_s2_inverse(sys: &DoubleSaddleSystem, s1: S1Action) -> Result<Arc<dyn LinearOperator>> {
    let (_, m, p) = sys.dims();
    let c = sys.c().clone();
    let ct = c.transpose();
    let cct = c.matmul(&ct)?;
    let cct_f = BandedCholesky::factor(&cct, cct.bandwidth())?;
    let s1op: Arc<dyn LinearOperator> = match s1 {
        S1Action::Supplied(op) => {
            if op.dim() != m {
                return Err(Error::DimensionMismatch(format!("S1 operator has dim {}, expected {m}", op.dim())));
            }
            op
        }
        S1Action::Exact => {
            let a_inv = exact_a_inverse(sys)?;
            let (b, bt, d) = (sys.b().clone(), sys.b().transpose(), sys.d().clone());
            Arc::new(FnOperator::new(m, "S1", move |x: &[f64], y: &mut [f64]| {
                let t = a_inv.apply_vec(&bt.mul_vec(x));
                d.spmv_into(x, y);
                b.spmv_add(1.0, &t, y);
            }))
        }
    };
    Ok(Arc::new(FnOperator::new(p, "bfbt", move |x: &[f64], y: &mut [f64]| {
        let mut t = x.to_vec();
        cct_f.solve_in_place(&mut t);
        let u = ct.mul_vec(&t);
        let v = s1op.apply_vec(&u);
        c.spmv_into(&v, y);
        cct_f.solve_in_place(y);
    })))
}

/// `(C C^T)^-1 C`, the least-squares pseudo-inverse transposed.
fn cct_inv_c(c: &DenseMatrix) -> Result<DenseMatrix> {
    let cct = c.matmul(&c.transpose())?;
    let ch = Cholesky::factor(&cct)?;
    let mut x = ch.forward_matrix(c);
    // backward solve F^T X = Y column by column
    for j in 0..x.cols() {
        let mut col = x.column_vec(j);
        ch.backward_in_place(&mut col);
        x.set_column(j, &col);
    }
    Ok(x)
}

/// Dense `(C C^T)^-1 C S1 C^T (C C^T)^-1`.
pub fn bfbt_s2_inverse_dense(s1: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    if s1.rows() != c.cols() || !s1.is_square() {
        return Err(Error::DimensionMismatch("S1 must be m x m for C of size p x m".into()));
    }
    let x = cct_inv_c(c)?;
    x.matmul(s1)?.matmul(&x.transpose())
}

/// Orthogonal projector `C^T (C C^T)^-1 C` onto the row space of `C`.
pub fn projector_p(c: &DenseMatrix) -> Result<DenseMatrix> {
    c.transpose().matmul(&cct_inv_c(c)?)
}

/// Blocks of `S1` in the basis `[U^ U~]` from the SVD `C^T = U Sigma V^T`.
#[derive(Clone, Debug)]
pub struct WFactors {
    /// `I + N1^T S^-1 N2 M^-1`.
    pub w: DenseMatrix,
    /// `(U^T S1 U^)(U^T S1^-1 U^)`.
    pub w_product: DenseMatrix,
    pub m: DenseMatrix,
    pub n1t: DenseMatrix,
    pub n2: DenseMatrix,
    pub l: DenseMatrix,
    pub s: DenseMatrix,
    pub u_hat: DenseMatrix,
    pub u_tilde: DenseMatrix,
}

pub fn build_w_factors(s1: &DenseMatrix, c: &DenseMatrix) -> Result<WFactors> {
    let (p, m) = (c.rows(), c.cols());
    if s1.rows() != m || !s1.is_square() {
        return Err(Error::DimensionMismatch("S1 must be m x m for C of size p x m".into()));
    }
    if m <= p {
        return Err(Error::PreconditionViolation(format!(
            "the W construction needs m > p, got m = {m}, p = {p}"
        )));
    }
    let f = svd(&c.transpose())?;
    if f.rank_deficient {
        return Err(Error::RankDeficient(format!(
            "C has smallest singular value {:e}",
            f.singular_values[p - 1]
        )));
    }
    let (uh, ut) = (f.u_hat(), f.u_tilde());
    let (uht, utt) = (uh.transpose(), ut.transpose());
    let s1_uh = s1.matmul(&uh)?;
    let s1_ut = s1.matmul(&ut)?;
    let mm = uht.matmul(&s1_uh)?;
    let n1t = uht.matmul(&s1_ut)?;
    let n2 = utt.matmul(&s1_uh)?;
    let l = utt.matmul(&s1_ut)?.scale(-1.0);
    let m_inv = Lu::factor(&mm)?.inverse();
    let s = l.add(&n2.matmul(&m_inv)?.matmul(&n1t)?)?.scale(-1.0);
    let s_inv = Lu::factor(&s)?.inverse();
    let w = DenseMatrix::identity(p).add(&n1t.matmul(&s_inv)?.matmul(&n2)?.matmul(&m_inv)?)?;
    let s1_inv_uh = Lu::factor(s1)?.solve(&uh)?;
    let w_product = mm.matmul(&uht.matmul(&s1_inv_uh)?)?;
    Ok(WFactors {
        w,
        w_product,
        m: mm,
        n1t,
        n2,
        l,
        s,
        u_hat: uh,
        u_tilde: ut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::eig_general;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn spd(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let g = random(n, n, rng);
        g.transpose().matmul(&g).unwrap().add(&DenseMatrix::identity(n)).unwrap()
    }

    #[test]
    fn projector_cases() {
        assert!(projector_p(&DenseMatrix::identity(3)).unwrap().sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-15);
        let p = projector_p(&DenseMatrix::from_rows(&[&[1.0, 0.0]])).unwrap();
        assert_eq!(p, DenseMatrix::from_diagonal(&[1.0, 0.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random(4, 9, &mut rng);
        let p = projector_p(&c).unwrap();
        assert!(p.matmul(&p).unwrap().sub(&p).unwrap().max_abs() < 1e-10);
        assert!(p.matmul(&c.transpose()).unwrap().sub(&c.transpose()).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn square_c_gives_s1() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s1 = spd(5, &mut rng);
        let x = bfbt_s2_inverse_dense(&s1, &DenseMatrix::identity(5)).unwrap();
        assert!(x.sub(&s1).unwrap().max_abs() < 1e-12 * s1.max_abs());
    }

    #[test]
    fn identity_s1_gives_exact_s2_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = random(3, 7, &mut rng);
        let x = bfbt_s2_inverse_dense(&DenseMatrix::identity(7), &c).unwrap();
        let s2 = c.matmul(&c.transpose()).unwrap();
        let prod = x.matmul(&s2).unwrap();
        assert!(prod.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn w_constructions_agree_and_match_bfbt_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s1 = spd(10, &mut rng);
        let c = random(4, 10, &mut rng);
        let wf = build_w_factors(&s1, &c).unwrap();
        assert!(wf.w.sub(&wf.w_product).unwrap().max_abs() < 1e-10 * wf.w.max_abs());
        let s2 = c.matmul(&Lu::factor(&s1).unwrap().solve(&c.transpose()).unwrap()).unwrap();
        let t = bfbt_s2_inverse_dense(&s1, &c).unwrap().matmul(&s2).unwrap();
        let mut a: Vec<f64> = eig_general(&t).unwrap().real_parts();
        let mut b: Vec<f64> = eig_general(&wf.w).unwrap().real_parts();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8);
            assert!(*x >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn identity_s1_gives_identity_w() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = random(3, 6, &mut rng);
        let wf = build_w_factors(&DenseMatrix::identity(6), &c).unwrap();
        assert!(wf.w.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-12);
        assert!(wf.w_product.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn square_c_is_rejected() {
        let r = build_w_factors(&DenseMatrix::identity(3), &DenseMatrix::identity(3));
        assert!(matches!(r, Err(Error::PreconditionViolation(_))));
    }

    #[test]
    fn rank_deficient_c_is_rejected() {
        let c = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]);
        let r = build_w_factors(&DenseMatrix::identity(3), &c);
        assert!(matches!(r, Err(Error::RankDeficient(_))));
    }
}
