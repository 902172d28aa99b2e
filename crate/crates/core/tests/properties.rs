use proptest::prelude::*;

use dsaddle::dense::{cholesky, eig_general, eig_sym_generalized, lu_solve, svd, DenseMatrix};
use dsaddle::krylov::{gmres_restarted, GmresOptions, IdentityOperator};
use dsaddle::saddle::{
    assemble_block_preconditioner, bfbt_s2_inverse_dense, build_w_factors, random_instance, schur_exact,
    BlockPreconditioner, DoubleSaddleSystem, Family, InstanceCase, PreconditionerSpec, RandomInstanceConfig,
};
use dsaddle::sparse::{ichol, read_mtx, write_mtx, CsrMatrix};
use dsaddle::stokes_darcy::MacGrid;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-1.0f64..1.0, rows * cols).prop_map(move |v| DenseMatrix::new(rows, cols, v).unwrap())
}

fn square() -> impl Strategy<Value = DenseMatrix> {
    (1usize..9).prop_flat_map(|n| matrix(n, n))
}

fn spd() -> impl Strategy<Value = DenseMatrix> {
    square().prop_map(|g| {
        let n = g.rows();
        g.matmul(&g.transpose()).unwrap().add(&DenseMatrix::identity(n)).unwrap()
    })
}

fn sparse(rows: usize, cols: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    prop::collection::vec((0..rows, 0..cols, -2.0f64..2.0), 0..3 * (rows + cols))
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..5, 0usize..4, 0usize..4).prop_map(|(p, dm, dn)| {
        let m = p + dm + 1;
        (m + dn, m, p)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectrum_is_complete_sorted_and_conjugate_closed(a in square()) {
        let s = eig_general(&a).unwrap();
        prop_assert_eq!(s.clusters().iter().map(|c| c.multiplicity).sum::<usize>(), a.rows());
        let ev = s.eigenvalues();
        for w in ev.windows(2) {
            prop_assert!((w[0].re, w[0].im) <= (w[1].re, w[1].im) || (w[0].re - w[1].re).abs() < 1e-12);
        }
        let trace: f64 = (0..a.rows()).map(|i| a[(i, i)]).sum();
        let sum: f64 = ev.iter().map(|z| z.re).sum();
        prop_assert!((trace - sum).abs() < 1e-8 * (1.0 + trace.abs()));
        let imag: f64 = ev.iter().map(|z| z.im).sum();
        prop_assert!(imag.abs() < 1e-8);
    }

    #[test]
    fn lu_solves_diagonally_dominant(a in square(), seed in 0u64..1000) {
        let n = a.rows();
        let a = a.add(&DenseMatrix::identity(n).scale(n as f64 + 1.0)).unwrap();
        let x0 = DenseMatrix::from_fn(n, 2, |i, j| ((i * 7 + j * 3) as f64 + seed as f64).sin());
        let b = a.matmul(&x0).unwrap();
        let x = lu_solve(&a, &b).unwrap();
        prop_assert!(x.sub(&x0).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn cholesky_reconstructs(a in spd()) {
        let f = cholesky(&a).unwrap();
        let r = f.matmul(&f.transpose()).unwrap();
        prop_assert!(r.sub(&a).unwrap().max_abs() < 1e-12 * a.max_abs().max(1.0));
    }

    #[test]
    fn generalized_eigenvalues_match_general_solver(a in spd(), b in spd()) {
        prop_assume!(a.rows() == b.rows());
        let mu = eig_sym_generalized(&a, &b).unwrap().real_parts();
        let binv_a = lu_solve(&b, &a).unwrap();
        let mut gen = eig_general(&binv_a).unwrap().real_parts();
        gen.sort_by(f64::total_cmp);
        for (x, y) in mu.iter().zip(&gen) {
            prop_assert!((x - y).abs() < 1e-8 * y.abs().max(1.0));
        }
    }

    #[test]
    fn svd_reconstructs_tall(a in (1usize..6).prop_flat_map(|c| (Just(c), c..8)).prop_flat_map(|(c, r)| matrix(r, c))) {
        let f = svd(&a).unwrap();
        prop_assert!(f.reconstruct().sub(&a).unwrap().max_abs() < 1e-10);
        for w in f.singular_values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn csr_agrees_with_dense(t in sparse(6, 5), x in prop::collection::vec(-1.0f64..1.0, 5)) {
        let a = CsrMatrix::from_triplets(6, 5, &t).unwrap();
        let mut d = DenseMatrix::zeros(6, 5);
        for &(i, j, v) in &t {
            d[(i, j)] += v;
        }
        prop_assert!(a.to_dense().sub(&d).unwrap().max_abs() < 1e-14);
        let y = a.spmv(&x).unwrap();
        let yd = d.matvec(&x).unwrap();
        for (p, q) in y.iter().zip(&yd) {
            prop_assert!((p - q).abs() < 1e-13);
        }
        prop_assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn matrix_market_round_trip(t in sparse(5, 7)) {
        let a = CsrMatrix::from_triplets(5, 7, &t).unwrap();
        let mut buf = Vec::new();
        write_mtx(&a, &mut buf).unwrap();
        let b = read_mtx(buf.as_slice()).unwrap();
        prop_assert_eq!(b, a);
    }

    #[test]
    fn incomplete_cholesky_without_dropping_is_exact(a in spd()) {
        let csr = CsrMatrix::from_dense(&a);
        let f = ichol(&csr, 0.0).unwrap();
        prop_assert_eq!(f.diagonal_shift(), 0.0);
        let l = f.factor().to_dense();
        let r = l.matmul(&l.transpose()).unwrap();
        prop_assert!(r.sub(&a).unwrap().max_abs() < 1e-9 * a.max_abs());
    }

    #[test]
    fn exact_preconditioners_invert_their_matrices((n, m, p) in dims(), seed in 0u64..500) {
        let sys = random_instance(&RandomInstanceConfig { n, m, p, case: InstanceCase::Symmetric, seed }).unwrap();
        let schur = schur_exact(&sys).unwrap();
        for family in [Family::Mlt, Family::Md] {
            let prec = BlockPreconditioner::build(&sys, &PreconditionerSpec::exact(family), None).unwrap();
            let dense = assemble_block_preconditioner(family, &sys, &schur.s1, &schur.s2).unwrap();
            let r: Vec<f64> = (0..sys.total_dim()).map(|i| (i as f64 * 0.37 + seed as f64).cos()).collect();
            let mut z = vec![0.0; r.len()];
            dsaddle::krylov::LinearOperator::apply(&prec, &r, &mut z);
            let back = dense.matvec(&z).unwrap();
            let err = back.iter().zip(&r).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
            let scale = dense.max_abs() * z.iter().fold(0.0f64, |a, v| a.max(v.abs())) * r.len() as f64;
            prop_assert!(err <= 1e-12 * scale, "{:?}: {} vs {}", family, err, scale);
        }
    }

    #[test]
    fn assembled_k_has_block_structure((n, m, p) in dims(), seed in 0u64..500) {
        let sys = random_instance(&RandomInstanceConfig { n, m, p, case: InstanceCase::Symmetric, seed }).unwrap();
        let k = sys.assemble_k().to_dense();
        prop_assert_eq!(k.rows(), n + m + p);
        prop_assert_eq!(k.block(0, n + m, n, p).max_abs(), 0.0);
        prop_assert_eq!(k.block(n + m, 0, p, n).max_abs(), 0.0);
        prop_assert_eq!(k.block(n + m, n + m, p, p).max_abs(), 0.0);
        prop_assert!(k.is_symmetric(1e-14));
    }

    #[test]
    fn bfbt_generalized_eigenvalues_at_least_one(s1 in spd(), seed in 0u64..500) {
        let m = s1.rows();
        prop_assume!(m >= 2);
        let p = 1 + (seed as usize) % (m - 1);
        let c = DenseMatrix::from_fn(p, m, |i, j| ((i * m + j) as f64 * 1.3 + seed as f64).sin());
        prop_assume!(svd(&c.transpose()).unwrap().singular_values[p - 1] > 1e-3);
        let s2 = c.matmul(&lu_solve(&s1, &c.transpose()).unwrap()).unwrap();
        let hat_inv = bfbt_s2_inverse_dense(&s1, &c).unwrap();
        let mu = eig_general(&hat_inv.matmul(&s2).unwrap()).unwrap();
        for z in mu.eigenvalues() {
            prop_assert!(z.re >= 1.0 - 1e-8 && z.im.abs() < 1e-8, "{}", z);
        }
        let w = build_w_factors(&s1, &c).unwrap();
        prop_assert!(w.w.sub(&w.w_product).unwrap().max_abs() < 1e-8 * w.w.max_abs().max(1.0));
    }

    #[test]
    fn mac_grid_dimension_law(n1 in 2usize..40) {
        let g = MacGrid::new(n1).unwrap();
        prop_assert_eq!(g.total(), 4 * n1 * n1 - n1);
        prop_assert_eq!(g.interleaved_velocity_ordering().len(), g.m());
    }

    #[test]
    fn gmres_solves_shifted_systems(a in square(), seed in 0u64..100) {
        let n = a.rows();
        let a = a.add(&DenseMatrix::identity(n).scale(3.0)).unwrap();
        let csr = CsrMatrix::from_dense(&a);
        let x0: Vec<f64> = (0..n).map(|i| (i as f64 + seed as f64).sin()).collect();
        let b = csr.spmv(&x0).unwrap();
        prop_assume!(b.iter().any(|&v| v != 0.0));
        let (x, rep) = gmres_restarted(&csr, &IdentityOperator(n), &b, &GmresOptions::default()).unwrap();
        prop_assert!(rep.converged());
        prop_assert!(rep.iterations <= n);
        for (p, q) in x.iter().zip(&x0) {
            prop_assert!((p - q).abs() < 1e-7);
        }
    }
}

#[test]
fn d_nonzero_instances_have_spd_blocks() {
    let sys: DoubleSaddleSystem = random_instance(&RandomInstanceConfig {
        case: InstanceCase::DNonzeroPair,
        ..Default::default()
    })
    .unwrap();
    assert!(!sys.d_is_zero());
    assert!(cholesky(&sys.d().to_dense()).is_ok());
}
