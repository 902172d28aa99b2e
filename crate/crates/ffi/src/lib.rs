//! C ABI over `dsaddle`.
//!
//! Systems and preconditioners are opaque heap handles released with their
//! `_free` functions. Every fallible call returns a [`DsaddleStatus`]; the
//! message of the most recent failure on the calling thread is available
//! from [`dsaddle_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dsaddle::bench::{build_instance, effective_preconditioner, Instance, InstanceSource};
use dsaddle::krylov::{gmres_restarted, GmresOptions, LinearOperator, Side, SolveStatus};
use dsaddle::saddle::{BlockPreconditioner, InstanceCase, PreconditionerSpec};
use dsaddle::spectral::{cubic_roots, six_eigenvalue_catalogue};
use dsaddle::stokes_darcy::RhsMode;
use dsaddle::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DsaddleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    SingularMatrix = 4,
    NotPositiveDefinite = 5,
    Breakdown = 6,
    NoConvergence = 7,
    Io = 8,
    Internal = 9,
}

/// Solver outcome written by [`dsaddle_solve_gmres`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DsaddleSolveReport {
    pub iterations: usize,
    pub restarts: usize,
    /// 0 converged, 1 iteration limit, 2 stagnated.
    pub status: i32,
    pub relative_residual: f64,
    pub wall_seconds: f64,
}

/// A double saddle-point system with its right-hand side.
pub struct DsaddleSystem {
    inner: Instance,
}

pub struct DsaddlePreconditioner {
    inner: BlockPreconditioner,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nulls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> DsaddleStatus {
    match err {
        Error::DimensionMismatch(_) | Error::CapExceeded { .. } => DsaddleStatus::DimensionMismatch,
        Error::SingularMatrix { .. } | Error::RankDeficient(_) => DsaddleStatus::SingularMatrix,
        Error::NotPositiveDefinite { .. } | Error::IndefinitePreconditioner(_) => DsaddleStatus::NotPositiveDefinite,
        Error::Breakdown { .. } => DsaddleStatus::Breakdown,
        Error::NoConvergence { .. } => DsaddleStatus::NoConvergence,
        Error::Io(_) => DsaddleStatus::Io,
        Error::PreconditionViolation(_)
        | Error::Parse(_)
        | Error::Json(_)
        | Error::Unsupported(_)
        | Error::NotSymmetric(_)
        | Error::BandViolation { .. }
        | Error::NonFinite(..)
        | Error::DegenerateExpansion(_) => DsaddleStatus::InvalidArgument,
    }
}

fn fail(status: DsaddleStatus, msg: impl Into<String>) -> DsaddleStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), DsaddleStatus>) -> DsaddleStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DsaddleStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(DsaddleStatus::Internal, "panic inside dsaddle"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, DsaddleStatus>;
}

impl<T> OrStatus<T> for dsaddle::Result<T> {
    fn or_status(self) -> Result<T, DsaddleStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), DsaddleStatus> {
    if p.is_null() {
        Err(fail(DsaddleStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn emit_system(src: InstanceSource, seed: u64, out: *mut *mut DsaddleSystem) -> Result<(), DsaddleStatus> {
    non_null(out, "out")?;
    let inner = build_instance(&src, seed).or_status()?;
    *out = Box::into_raw(Box::new(DsaddleSystem { inner }));
    Ok(())
}

/// Manufactured Stokes-Darcy problem on an `n1 x n1` grid per subdomain.
/// `alpha <= 0` sets the slip coefficient to `nu`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_stokes_darcy_new(
    n1: usize,
    kappa: f64,
    nu: f64,
    alpha: f64,
    out: *mut *mut DsaddleSystem,
) -> DsaddleStatus {
    guard(|| {
        let src = InstanceSource::StokesDarcy {
            n1,
            kappa,
            nu,
            alpha: (alpha > 0.0).then_some(alpha),
            rhs_mode: RhsMode::Discrete,
        };
        emit_system(src, 0, out)
    })
}

/// Seeded random instance; `d_nonzero` selects the nonzero-`D` case.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_random_instance(
    n: usize,
    m: usize,
    p: usize,
    d_nonzero: bool,
    seed: u64,
    out: *mut *mut DsaddleSystem,
) -> DsaddleStatus {
    guard(|| {
        let case = if d_nonzero {
            InstanceCase::DNonzeroPair
        } else {
            InstanceCase::Symmetric
        };
        emit_system(InstanceSource::BuiltinRandom { n, m, p, case }, seed, out)
    })
}

/// Loads a directory written by `dsaddle export-mtx`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_system_load_mtx(path: *const c_char, out: *mut *mut DsaddleSystem) -> DsaddleStatus {
    guard(|| {
        non_null(path, "path")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(DsaddleStatus::InvalidArgument, "path is not UTF-8"))?;
        emit_system(
            InstanceSource::MtxDirectory {
                path: Path::new(path).to_path_buf(),
            },
            0,
            out,
        )
    })
}

/// # Safety
/// `sys` must come from a `dsaddle_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_system_free(sys: *mut DsaddleSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Block sizes `n`, `m`, `p`; any output pointer may be null.
///
/// # Safety
/// `sys` must be a live handle; non-null outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_system_dims(
    sys: *const DsaddleSystem,
    n: *mut usize,
    m: *mut usize,
    p: *mut usize,
) -> DsaddleStatus {
    guard(|| {
        non_null(sys, "sys")?;
        let (a, b, c) = (*sys).inner.sys.dims();
        for (dst, v) in [(n, a), (m, b), (p, c)] {
            if !dst.is_null() {
                *dst = v;
            }
        }
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize) -> Result<(), DsaddleStatus> {
    non_null(dst, "output buffer")?;
    if len != src.len() {
        return Err(fail(
            DsaddleStatus::DimensionMismatch,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
    Ok(())
}

/// Copies the right-hand side (length `n + m + p`) into `out`.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_system_rhs(sys: *const DsaddleSystem, out: *mut f64, len: usize) -> DsaddleStatus {
    guard(|| {
        non_null(sys, "sys")?;
        copy_out(&(*sys).inner.rhs, out, len)
    })
}

/// Builds a block preconditioner from a JSON description, e.g.
/// `{"family": "md"}`. A null `spec_json` selects the default for the
/// system: the practical variant for Stokes-Darcy, exact blocks otherwise.
///
/// # Safety
/// `sys` must be a live handle, `spec_json` null or NUL-terminated, and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_preconditioner_new(
    sys: *const DsaddleSystem,
    spec_json: *const c_char,
    out: *mut *mut DsaddlePreconditioner,
) -> DsaddleStatus {
    guard(|| {
        non_null(sys, "sys")?;
        non_null(out, "out")?;
        let inst = &(*sys).inner;
        let spec = if spec_json.is_null() {
            effective_preconditioner(&Default::default(), inst.problem.is_some())
        } else {
            let text = CStr::from_ptr(spec_json)
                .to_str()
                .map_err(|_| fail(DsaddleStatus::InvalidArgument, "spec is not UTF-8"))?;
            serde_json::from_str::<PreconditionerSpec>(text)
                .map_err(|e| fail(DsaddleStatus::InvalidArgument, format!("bad preconditioner spec: {e}")))?
        };
        let inner = BlockPreconditioner::build(&inst.sys, &spec, inst.hints()).or_status()?;
        *out = Box::into_raw(Box::new(DsaddlePreconditioner { inner }));
        Ok(())
    })
}

/// `y = M^-1 x`, both of length `n + m + p`.
///
/// # Safety
/// `x` and `y` must be valid for `len` reads and writes and not overlap.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_preconditioner_apply(
    prec: *const DsaddlePreconditioner,
    x: *const f64,
    y: *mut f64,
    len: usize,
) -> DsaddleStatus {
    guard(|| {
        non_null(prec, "prec")?;
        non_null(x, "x")?;
        let op = &(*prec).inner;
        if len != op.dim() {
            return Err(fail(
                DsaddleStatus::DimensionMismatch,
                format!("vector length {len}, operator dimension {}", op.dim()),
            ));
        }
        let z = op.apply_vec(std::slice::from_raw_parts(x, len));
        copy_out(&z, y, len)
    })
}

/// # Safety
/// `prec` must come from [`dsaddle_preconditioner_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_preconditioner_free(prec: *mut DsaddlePreconditioner) {
    if !prec.is_null() {
        drop(Box::from_raw(prec));
    }
}

/// Left-preconditioned restarted GMRES from a zero guess. A null `rhs`
/// uses the system's own right-hand side. Non-convergence is reported in
/// `report` with status `DSADDLE_STATUS_OK`.
///
/// # Safety
/// `rhs` (if non-null) and `x` must be valid for `len` values; `report`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_solve_gmres(
    sys: *const DsaddleSystem,
    prec: *const DsaddlePreconditioner,
    rhs: *const f64,
    x: *mut f64,
    len: usize,
    restart: usize,
    tol: f64,
    maxit: usize,
    report: *mut DsaddleSolveReport,
) -> DsaddleStatus {
    guard(|| {
        non_null(sys, "sys")?;
        non_null(prec, "prec")?;
        let inst = &(*sys).inner;
        if len != inst.sys.total_dim() {
            return Err(fail(
                DsaddleStatus::DimensionMismatch,
                format!("vector length {len}, system dimension {}", inst.sys.total_dim()),
            ));
        }
        let b = if rhs.is_null() {
            &inst.rhs[..]
        } else {
            std::slice::from_raw_parts(rhs, len)
        };
        let opts = GmresOptions {
            restart,
            tol,
            maxit,
            side: Side::Left,
        };
        let k = inst.sys.assemble_k();
        let (sol, rep) = gmres_restarted(&k, &(*prec).inner, b, &opts).or_status()?;
        copy_out(&sol, x, len)?;
        if !report.is_null() {
            *report = DsaddleSolveReport {
                iterations: rep.iterations,
                restarts: rep.restarts,
                status: match rep.status {
                    SolveStatus::Converged => 0,
                    SolveStatus::MaxIter => 1,
                    SolveStatus::Stagnated => 2,
                },
                relative_residual: rep.true_relative_residual,
                wall_seconds: rep.wall_seconds,
            };
        }
        Ok(())
    })
}

/// The six eigenvalues `2 cos((2i+1) pi / (2j+3))`, ascending.
///
/// # Safety
/// `out` must be valid for 6 writes.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_six_eigenvalues(out: *mut f64) -> DsaddleStatus {
    guard(|| copy_out(&six_eigenvalue_catalogue(), out, 6))
}

/// Roots of `l^3 - l^2 - (1 + mu) l + mu`, by descending real part, as
/// interleaved `(re, im)` pairs.
///
/// # Safety
/// `out` must be valid for 6 writes.
#[no_mangle]
pub unsafe extern "C" fn dsaddle_cubic_roots(mu: f64, out: *mut f64) -> DsaddleStatus {
    guard(|| {
        if !mu.is_finite() {
            return Err(fail(DsaddleStatus::InvalidArgument, "mu must be finite"));
        }
        let roots = cubic_roots(mu);
        let flat: Vec<f64> = roots.lambdas.iter().flat_map(|z| [z.re, z.im]).collect();
        copy_out(&flat, out, 6)
    })
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dsaddle_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
