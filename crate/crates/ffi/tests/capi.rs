use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use dsaddle_ffi::*;

fn last_error() -> String {
    let p = dsaddle_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn random_system(seed: u64) -> *mut DsaddleSystem {
    let mut sys = ptr::null_mut();
    let st = unsafe { dsaddle_random_instance(20, 10, 4, false, seed, &mut sys) };
    assert_eq!(st, DsaddleStatus::Ok);
    sys
}

#[test]
fn random_instance_solves_with_exact_mlt() {
    unsafe {
        let sys = random_system(7);
        let (mut n, mut m, mut p) = (0, 0, 0);
        assert_eq!(dsaddle_system_dims(sys, &mut n, &mut m, &mut p), DsaddleStatus::Ok);
        assert_eq!((n, m, p), (20, 10, 4));
        let len = n + m + p;

        let mut prec = ptr::null_mut();
        assert_eq!(dsaddle_preconditioner_new(sys, ptr::null(), &mut prec), DsaddleStatus::Ok);

        let mut x = vec![0.0; len];
        let mut report = DsaddleSolveReport::default();
        let st = dsaddle_solve_gmres(sys, prec, ptr::null(), x.as_mut_ptr(), len, 20, 1e-10, 100, &mut report);
        assert_eq!(st, DsaddleStatus::Ok);
        assert_eq!(report.status, 0);
        assert!(report.iterations <= 3, "{report:?}");
        assert!(report.relative_residual < 1e-9);

        dsaddle_preconditioner_free(prec);
        dsaddle_system_free(sys);
    }
}

#[test]
fn preconditioner_from_json_and_apply() {
    unsafe {
        let sys = random_system(3);
        let spec = CString::new(r#"{"family": "md"}"#).unwrap();
        let mut prec = ptr::null_mut();
        assert_eq!(dsaddle_preconditioner_new(sys, spec.as_ptr(), &mut prec), DsaddleStatus::Ok);
        let x = vec![1.0; 34];
        let mut y = vec![0.0; 34];
        assert_eq!(dsaddle_preconditioner_apply(prec, x.as_ptr(), y.as_mut_ptr(), 34), DsaddleStatus::Ok);
        assert!(y.iter().all(|v| v.is_finite()) && y.iter().any(|&v| v != 0.0));

        let mut short = vec![0.0; 5];
        let st = dsaddle_preconditioner_apply(prec, x.as_ptr(), short.as_mut_ptr(), 5);
        assert_eq!(st, DsaddleStatus::DimensionMismatch);
        assert!(last_error().contains("dimension"));

        let bad = CString::new(r#"{"family": "upper"}"#).unwrap();
        let mut other = ptr::null_mut();
        assert_eq!(dsaddle_preconditioner_new(sys, bad.as_ptr(), &mut other), DsaddleStatus::InvalidArgument);
        assert!(other.is_null());

        dsaddle_preconditioner_free(prec);
        dsaddle_system_free(sys);
    }
}

#[test]
fn stokes_darcy_practical_solve() {
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(dsaddle_stokes_darcy_new(8, 1.0, 1.0, 0.0, &mut sys), DsaddleStatus::Ok);
        let mut len = 0;
        let (mut m, mut p) = (0, 0);
        dsaddle_system_dims(sys, &mut len, &mut m, &mut p);
        len += m + p;
        assert_eq!(len, 4 * 64 - 8);

        let mut rhs = vec![0.0; len];
        assert_eq!(dsaddle_system_rhs(sys, rhs.as_mut_ptr(), len), DsaddleStatus::Ok);
        assert!(rhs.iter().any(|&v| v != 0.0));

        let mut prec = ptr::null_mut();
        assert_eq!(dsaddle_preconditioner_new(sys, ptr::null(), &mut prec), DsaddleStatus::Ok);
        let mut x = vec![0.0; len];
        let mut report = DsaddleSolveReport::default();
        let st = dsaddle_solve_gmres(sys, prec, rhs.as_ptr(), x.as_mut_ptr(), len, 20, 1e-10, 400, &mut report);
        assert_eq!(st, DsaddleStatus::Ok);
        assert_eq!(report.status, 0, "{report:?}");

        dsaddle_preconditioner_free(prec);
        dsaddle_system_free(sys);
    }
}

#[test]
fn error_paths() {
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(dsaddle_stokes_darcy_new(1, 1.0, 1.0, 0.0, &mut sys), DsaddleStatus::InvalidArgument);
        assert!(last_error().contains("n1"));
        assert!(sys.is_null());

        assert_eq!(
            dsaddle_stokes_darcy_new(8, 1.0, 1.0, 0.0, ptr::null_mut()),
            DsaddleStatus::NullPointer
        );
        assert_eq!(
            dsaddle_system_dims(ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()),
            DsaddleStatus::NullPointer
        );

        let missing = CString::new("/nonexistent/dsaddle").unwrap();
        assert_eq!(dsaddle_system_load_mtx(missing.as_ptr(), &mut sys), DsaddleStatus::Io);

        dsaddle_system_free(ptr::null_mut());
        dsaddle_preconditioner_free(ptr::null_mut());
    }
}

#[test]
fn spectral_helpers() {
    let mut six = [0.0; 6];
    assert_eq!(unsafe { dsaddle_six_eigenvalues(six.as_mut_ptr()) }, DsaddleStatus::Ok);
    assert!((six[0] + 1.2470).abs() < 1e-4 && six[3] == 1.0);

    let mut roots = [0.0; 6];
    assert_eq!(unsafe { dsaddle_cubic_roots(1.0, roots.as_mut_ptr()) }, DsaddleStatus::Ok);
    assert!((roots[0] - 1.8019).abs() < 1e-4 && roots[1] == 0.0);
    assert_eq!(
        unsafe { dsaddle_cubic_roots(f64::NAN, roots.as_mut_ptr()) },
        DsaddleStatus::InvalidArgument
    );
}

#[test]
fn load_round_trip_through_export() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dsaddle::bench::build_instance(&Default::default(), 42).unwrap().to_bundle();
    dsaddle::saddle::save_system_dir(&bundle, dir.path()).unwrap();
    let path = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(dsaddle_system_load_mtx(path.as_ptr(), &mut sys), DsaddleStatus::Ok);
        let mut rhs = vec![0.0; 34];
        dsaddle_system_rhs(sys, rhs.as_mut_ptr(), 34);
        assert_eq!(Some(rhs), bundle.rhs);
        dsaddle_system_free(sys);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dsaddle.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["dsaddle_solve_gmres", "dsaddle_last_error_message", "DSADDLE_STATUS_NULL_POINTER"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(status.success());
}
