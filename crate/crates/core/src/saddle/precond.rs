use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bfbt::{bfbt_s2_inverse, S1Action};
use super::schur::{s1_sparse, s2_dense};
use super::{signs, DoubleSaddleSystem};
use crate::dense::{Cholesky, DenseMatrix, Lu, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};
use crate::krylov::{materialize, FnOperator, LinearOperator};
use crate::sparse::{ichol, BandedCholesky, BandedLu, CsrMatrix};

/// Dense direct solves are used up to this dimension when no narrow band exists.
const DENSE_DIRECT_LIMIT: usize = 2500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Block lower-triangular `[A 0 0; B -S1 0; 0 C S2]`.
    Mlt,
    /// Block diagonal `diag(A, S1, S2)`.
    Md,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ASolve {
    Exact,
    /// `(F F^T)^-1` with `F` the incomplete Cholesky factor of `A`.
    Ichol { drop_tol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum S1Solve {
    Exact,
    /// `S1~ = D + B (F F^T)^-1 B^T`, factored directly.
    IcholCorrection { drop_tol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum S2Solve {
    Exact,
    /// `S2^ = factor * S2`.
    Scaled { factor: f64 },
    /// `S2^-1 = (C C^T)^-1 C S1 C^T (C C^T)^-1`.
    Bfbt,
    /// Problem-supplied approximation, see [`StructureHints`].
    StokesDarcyPractical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreconditionerSpec {
    pub family: Family,
    pub a_solve: ASolve,
    pub s1_solve: S1Solve,
    pub s2_solve: S2Solve,
}

impl Default for PreconditionerSpec {
    fn default() -> Self {
        Self::exact(Family::Mlt)
    }
}

impl PreconditionerSpec {
    pub fn exact(family: Family) -> Self {
        Self {
            family,
            a_solve: ASolve::Exact,
            s1_solve: S1Solve::Exact,
            s2_solve: S2Solve::Exact,
        }
    }

    /// Exact `A`, incomplete-Cholesky `S1~` at drop tolerance 0.01, practical `S2~`.
    pub fn practical(family: Family) -> Self {
        Self {
            family,
            a_solve: ASolve::Exact,
            s1_solve: S1Solve::IcholCorrection { drop_tol: 0.01 },
            s2_solve: S2Solve::StokesDarcyPractical,
        }
    }
}

/// Problem-specific structure a generic system does not carry.
pub trait StructureHints: Send + Sync {
    /// Symmetric permutation (`perm[new] = old`) giving `S1` a narrow band.
    fn s1_ordering(&self) -> Option<Vec<usize>> {
        None
    }

    fn practical_s2_inverse(&self) -> Result<Arc<dyn LinearOperator>> {
        Err(Error::Unsupported("no practical S2 approximation for this system".into()))
    }
}

/// Solver for a dense matrix: Cholesky when symmetric positive definite, LU otherwise.
pub fn dense_inverse_operator(a: &DenseMatrix) -> Result<Arc<dyn LinearOperator>> {
    let n = a.rows();
    if a.is_symmetric(1e-12) {
        if let Ok(ch) = Cholesky::factor(&a.symmetric_part()) {
            return Ok(Arc::new(FnOperator::new(n, "dense-cholesky", move |x: &[f64], y: &mut [f64]| {
                y.copy_from_slice(x);
                ch.forward_in_place(y);
                ch.backward_in_place(y);
            })));
        }
    }
    let lu = Lu::factor(a)?;
    Ok(Arc::new(FnOperator::new(n, "dense-lu", move |x: &[f64], y: &mut [f64]| {
        y.copy_from_slice(&lu.solve_vec(x).expect("dimension checked by caller"));
    })))
}

/// Direct solver for a sparse matrix.
///
/// Symmetric positive definite matrices use banded Cholesky over their own
/// bandwidth; others use banded LU under `ordering` when the band is narrow
/// and dense LU otherwise.
pub fn exact_solver(a: &CsrMatrix, ordering: Option<Vec<usize>>) -> Result<Arc<dyn LinearOperator>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch(format!("solver for a {}x{} matrix", n, a.cols())));
    }
    if a.is_symmetric(1e-12) {
        if let Ok(f) = BandedCholesky::factor(a, a.bandwidth()) {
            return Ok(Arc::new(FnOperator::new(n, "banded-cholesky", move |x: &[f64], y: &mut [f64]| {
                y.copy_from_slice(x);
                f.solve_in_place(y);
            })));
        }
    }
    let narrow = match &ordering {
        Some(p) => {
            let (kl, ku) = a.permute_symmetric(p)?.lower_upper_bandwidth();
            kl + ku < n / 4
        }
        None => {
            let (kl, ku) = a.lower_upper_bandwidth();
            kl + ku < n / 4
        }
    };
    if narrow || n > DENSE_DIRECT_LIMIT {
        match BandedLu::factor(a, ordering) {
            Ok(f) => {
                return Ok(Arc::new(FnOperator::new(n, "banded-lu", move |x: &[f64], y: &mut [f64]| {
                    y.copy_from_slice(&f.solve_vec(x).expect("dimension checked by caller"));
                })))
            }
            Err(e) if n > DENSE_DIRECT_LIMIT => return Err(e),
            Err(_) => {}
        }
    }
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded {
            dim: n,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    dense_inverse_operator(&a.to_dense())
}

pub fn exact_a_inverse(sys: &DoubleSaddleSystem) -> Result<Arc<dyn LinearOperator>> {
    exact_solver(sys.a(), None)
}

/// Solver for the exact `S1 = D + B A^-1 B^T`, assembled sparsely.
pub fn exact_s1_inverse(
    sys: &DoubleSaddleSystem,
    hints: Option<&dyn StructureHints>,
) -> Result<Arc<dyn LinearOperator>> {
    let a_inv = exact_a_inverse(sys)?;
    let s1 = s1_sparse(sys, a_inv.as_ref())?;
    exact_solver(&s1, hints.and_then(|h| h.s1_ordering()))
}

/// `x -> (F F^T)^-1 x` for the incomplete Cholesky factor `F` of `a`.
pub fn ichol_operator(a: &CsrMatrix, drop_tol: f64) -> Result<Arc<dyn LinearOperator>> {
    let f = ichol(a, drop_tol)?;
    Ok(Arc::new(FnOperator::new(a.rows(), "ichol", move |x: &[f64], y: &mut [f64]| {
        y.copy_from_slice(x);
        f.forward_in_place(y);
        f.backward_in_place(y);
    })))
}

fn scaled(op: Arc<dyn LinearOperator>, alpha: f64) -> Arc<dyn LinearOperator> {
    let n = op.dim();
    Arc::new(FnOperator::new(n, "scaled", move |x: &[f64], y: &mut [f64]| {
        op.apply(x, y);
        y.iter_mut().for_each(|v| *v *= alpha);
    }))
}

/// Prefactored block preconditioner; applying it performs `M^-1 r`.
#[derive(Clone)]
pub struct BlockPreconditioner {
    family: Family,
    n: usize,
    m: usize,
    p: usize,
    b: CsrMatrix,
    c: CsrMatrix,
    a_inv: Arc<dyn LinearOperator>,
    s1_inv: Arc<dyn LinearOperator>,
    s2_inv: Arc<dyn LinearOperator>,
}

impl std::fmt::Debug for BlockPreconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockPreconditioner")
            .field("family", &self.family)
            .field("dims", &(self.n, self.m, self.p))
            .field("a_inv", &self.a_inv.label())
            .field("s1_inv", &self.s1_inv.label())
            .field("s2_inv", &self.s2_inv.label())
            .finish()
    }
}

impl BlockPreconditioner {
    pub fn build(
        sys: &DoubleSaddleSystem,
        spec: &PreconditionerSpec,
        hints: Option<&dyn StructureHints>,
    ) -> Result<Self> {
        let a_exact = exact_a_inverse(sys)?;
        let a_inv = match spec.a_solve {
            ASolve::Exact => a_exact.clone(),
            ASolve::Ichol { drop_tol } => ichol_operator(sys.a(), drop_tol)?,
        };
        let ordering = hints.and_then(|h| h.s1_ordering());
        let s1_exact_matrix = s1_sparse(sys, a_exact.as_ref())?;
        let s1_exact = || exact_solver(&s1_exact_matrix, ordering.clone());
        let (s1_inv, s1_matrix) = match spec.s1_solve {
            S1Solve::Exact => (s1_exact()?, s1_exact_matrix.clone()),
            S1Solve::IcholCorrection { drop_tol } => {
                let approx = s1_sparse(sys, ichol_operator(sys.a(), drop_tol)?.as_ref())?;
                (exact_solver(&approx, ordering.clone())?, approx)
            }
        };
        let s2_inv = match spec.s2_solve {
            S2Solve::Exact | S2Solve::Scaled { .. } => {
                let s1_for_s2 = match spec.s1_solve {
                    S1Solve::Exact => s1_inv.clone(),
                    _ => s1_exact()?,
                };
                let s2 = s2_dense(sys.c(), s1_for_s2.as_ref())?;
                let inv = dense_inverse_operator(&s2)?;
                match spec.s2_solve {
                    S2Solve::Scaled { factor } => {
                        if !(factor > 0.0) {
                            return Err(Error::PreconditionViolation(format!(
                                "S2 scale factor {factor} must be positive"
                            )));
                        }
                        scaled(inv, 1.0 / factor)
                    }
                    _ => inv,
                }
            }
            S2Solve::Bfbt => {
                let action = match spec.s1_solve {
                    S1Solve::Exact => S1Action::Exact,
                    _ => S1Action::Supplied(Arc::new(s1_matrix)),
                };
                bfbt_s2_inverse(sys, action)?
            }
            S2Solve::StokesDarcyPractical => hints
                .ok_or_else(|| Error::Unsupported("practical S2 needs a Stokes-Darcy problem".into()))?
                .practical_s2_inverse()?,
        };
        Self::from_operators(spec.family, sys, a_inv, s1_inv, s2_inv)
    }

    /// Wraps caller-provided block inverses.
    pub fn from_operators(
        family: Family,
        sys: &DoubleSaddleSystem,
        a_inv: Arc<dyn LinearOperator>,
        s1_inv: Arc<dyn LinearOperator>,
        s2_inv: Arc<dyn LinearOperator>,
    ) -> Result<Self> {
        let (n, m, p) = sys.dims();
        if a_inv.dim() != n || s1_inv.dim() != m || s2_inv.dim() != p {
            return Err(Error::DimensionMismatch(format!(
                "block inverses {}/{}/{} for system {n}/{m}/{p}",
                a_inv.dim(),
                s1_inv.dim(),
                s2_inv.dim()
            )));
        }
        Ok(Self {
            family,
            n,
            m,
            p,
            b: sys.b().clone(),
            c: sys.c().clone(),
            a_inv,
            s1_inv,
            s2_inv,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Same blocks, other family.
    pub fn with_family(&self, family: Family) -> Self {
        Self { family, ..self.clone() }
    }

    fn check(&self, r: &[f64]) -> Result<()> {
        if r.len() != self.n + self.m + self.p {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for preconditioner of size {}",
                r.len(),
                self.n + self.m + self.p
            )));
        }
        Ok(())
    }

    /// `z = M_LT^-1 r` by forward block substitution.
    pub fn apply_mlt_inverse(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.check(r)?;
        let mut z = vec![0.0; r.len()];
        self.mlt_into(r, &mut z);
        Ok(z)
    }

    /// `z = M_D^-1 r` blockwise.
    pub fn apply_md_inverse(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.check(r)?;
        let mut z = vec![0.0; r.len()];
        self.md_into(r, &mut z);
        Ok(z)
    }

    fn mlt_into(&self, r: &[f64], z: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        let (r1, rest) = r.split_at(n);
        let (r2, r3) = rest.split_at(m);
        let (z1, rest) = z.split_at_mut(n);
        let (z2, z3) = rest.split_at_mut(m);

        // t0 = A~^-1 r1
        self.a_inv.apply(r1, z1);
        // t1 = B t0;  S1 block sign: B z1 + MLT22 S1 z2 = r2
        let mut t1 = vec![0.0; m];
        self.b.spmv_into(z1, &mut t1);
        for (t, rr) in t1.iter_mut().zip(r2) {
            *t = (rr - *t) * signs::MLT22;
        }
        // t2 = S1~^-1 (t1 - r2)
        self.s1_inv.apply(&t1, z2);
        // z3 = -S2~^-1 (C t2 - r3)
        let mut t3 = vec![0.0; self.p];
        self.c.spmv_into(z2, &mut t3);
        for (t, rr) in t3.iter_mut().zip(r3) {
            *t = rr - *t;
        }
        self.s2_inv.apply(&t3, z3);
    }

    fn md_into(&self, r: &[f64], z: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        self.a_inv.apply(&r[..n], &mut z[..n]);
        self.s1_inv.apply(&r[n..n + m], &mut z[n..n + m]);
        if signs::MD22 < 0.0 {
            z[n..n + m].iter_mut().for_each(|v| *v = -*v);
        }
        self.s2_inv.apply(&r[n + m..], &mut z[n + m..]);
    }
}

impl LinearOperator for BlockPreconditioner {
    fn dim(&self) -> usize {
        self.n + self.m + self.p
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self.family {
            Family::Mlt => self.mlt_into(x, y),
            Family::Md => self.md_into(x, y),
        }
    }

    fn label(&self) -> &str {
        match self.family {
            Family::Mlt => "M_LT",
            Family::Md => "M_D",
        }
    }
}

/// Dense `[A 0 0; B -S1 0; 0 C S2]` or `diag(A, S1, S2)`.
pub fn assemble_block_preconditioner(
    family: Family,
    sys: &DoubleSaddleSystem,
    s1: &DenseMatrix,
    s2: &DenseMatrix,
) -> Result<DenseMatrix> {
    let (n, m, p) = sys.dims();
    if s1.rows() != m || s1.cols() != m || s2.rows() != p || s2.cols() != p {
        return Err(Error::DimensionMismatch("Schur blocks do not match the system".into()));
    }
    let mut out = DenseMatrix::zeros(n + m + p, n + m + p);
    out.set_block(0, 0, &sys.a().to_dense());
    let sign = match family {
        Family::Mlt => {
            out.set_block(n, 0, &sys.b().to_dense());
            out.set_block(n + m, n, &sys.c().to_dense());
            signs::MLT22
        }
        Family::Md => signs::MD22,
    };
    out.set_block(n, n, &s1.scale(sign));
    out.set_block(n + m, n + m, s2);
    Ok(out)
}

/// Dense `M^-1 K`, column by column.
pub fn preconditioned_matrix(prec: &dyn LinearOperator, k: &CsrMatrix) -> Result<DenseMatrix> {
    let n = k.rows();
    if prec.dim() != n {
        return Err(Error::DimensionMismatch(format!("preconditioner {} vs operator {n}", prec.dim())));
    }
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded {
            dim: n,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let composed = FnOperator::new(n, "M^-1 K", |x: &[f64], y: &mut [f64]| {
        let kx = k.apply_vec(x);
        prec.apply(&kx, y);
    });
    Ok(materialize(&composed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::eig_general;
    use crate::krylov::IdentityOperator;
    use crate::saddle::{random_instance, schur_exact, InstanceCase, RandomInstanceConfig};

    fn instance(case: InstanceCase) -> DoubleSaddleSystem {
        random_instance(&RandomInstanceConfig {
            n: 20,
            m: 10,
            p: 4,
            case,
            seed: 7,
        })
        .unwrap()
    }

    #[test]
    fn identity_blocks_sign_bookkeeping() {
        let sys = DoubleSaddleSystem::new(
            CsrMatrix::identity(2),
            CsrMatrix::zeros(3, 2),
            CsrMatrix::zeros(2, 3),
            CsrMatrix::identity(3),
        )
        .unwrap();
        let prec = BlockPreconditioner::from_operators(
            Family::Mlt,
            &sys,
            Arc::new(IdentityOperator(2)),
            Arc::new(IdentityOperator(3)),
            Arc::new(IdentityOperator(2)),
        )
        .unwrap();
        let r: Vec<f64> = (1..=7).map(|v| v as f64).collect();
        let z = prec.apply_mlt_inverse(&r).unwrap();
        assert_eq!(z, vec![1.0, 2.0, -3.0, -4.0, -5.0, 6.0, 7.0]);
        assert_eq!(prec.apply_md_inverse(&r).unwrap(), r);
    }

    #[test]
    fn exact_mlt_inverts_assembled_matrix() {
        for case in [InstanceCase::Symmetric, InstanceCase::DNonzeroPair] {
            let sys = instance(case);
            let pair = schur_exact(&sys).unwrap();
            let prec = BlockPreconditioner::build(&sys, &PreconditionerSpec::exact(Family::Mlt), None).unwrap();
            let r: Vec<f64> = (0..34).map(|i| ((i * 7) as f64).sin()).collect();
            for family in [Family::Mlt, Family::Md] {
                let z = prec.with_family(family).apply_vec(&r);
                let m = assemble_block_preconditioner(family, &sys, &pair.s1, &pair.s2).unwrap();
                let back = m.matvec(&z).unwrap();
                for (u, v) in back.iter().zip(&r) {
                    assert!((u - v).abs() < 1e-9, "{family:?}: {u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn exact_mlt_spectrum_is_one() {
        let sys = instance(InstanceCase::Symmetric);
        let prec = BlockPreconditioner::build(&sys, &PreconditionerSpec::exact(Family::Mlt), None).unwrap();
        let t = preconditioned_matrix(&prec, &sys.assemble_k()).unwrap();
        let spec = eig_general(&t).unwrap();
        assert!(spec.eigenvalues().iter().all(|l| (l - 1.0).norm() < 1e-4));
        // nilpotent part of degree < 3: (T - I)^3 = 0
        let e = t.sub(&DenseMatrix::identity(34)).unwrap();
        let e3 = e.matmul(&e).unwrap().matmul(&e).unwrap();
        assert!(e3.max_abs() < 1e-8 * e.max_abs().powi(3).max(1.0));
    }

    #[test]
    fn scaled_s2_matches_factor() {
        let sys = instance(InstanceCase::Symmetric);
        let exact = BlockPreconditioner::build(&sys, &PreconditionerSpec::exact(Family::Md), None).unwrap();
        let spec = PreconditionerSpec {
            s2_solve: S2Solve::Scaled { factor: 2.0 },
            ..PreconditionerSpec::exact(Family::Md)
        };
        let half = BlockPreconditioner::build(&sys, &spec, None).unwrap();
        let mut r = vec![0.0; 34];
        r[33] = 1.0;
        let (a, b) = (exact.apply_vec(&r), half.apply_vec(&r));
        for i in 30..34 {
            assert!((a[i] - 2.0 * b[i]).abs() < 1e-12 * a[i].abs().max(1.0));
        }
    }

    #[test]
    fn practical_without_hints_is_unsupported() {
        let sys = instance(InstanceCase::Symmetric);
        let r = BlockPreconditioner::build(&sys, &PreconditionerSpec::practical(Family::Mlt), None);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = PreconditionerSpec::practical(Family::Md);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"ichol_correction\""));
        let back: PreconditionerSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let partial: PreconditionerSpec = serde_json::from_str(r#"{"family":"md"}"#).unwrap();
        assert_eq!(partial, PreconditionerSpec::exact(Family::Md));
    }
}
