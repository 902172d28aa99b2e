use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, norm, true_residual, LinearOperator, SolveReport, SolveStatus};
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const SYMMETRY_PROBES: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinresOptions {
    pub tol: f64,
    pub maxit: usize,
    /// Probe `<Ax, y> = <x, Ay>` on random unit vectors before iterating.
    pub check_symmetry: bool,
}

impl Default for MinresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            maxit: 400,
            check_symmetry: true,
        }
    }
}

/// Preconditioned MINRES from a zero initial guess.
///
/// Convergence is measured in the preconditioned norm,
/// `sqrt(r^T M^-1 r) / sqrt(b^T M^-1 b)`, which the recurrence tracks for free.
pub fn minres(
    a: &dyn LinearOperator,
    minv: &dyn LinearOperator,
    b: &[f64],
    opts: &MinresOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = a.dim();
    if minv.dim() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "operator {n}, preconditioner {}, rhs {}",
            minv.dim(),
            b.len()
        )));
    }
    if opts.check_symmetry {
        check_symmetric(a)?;
    }

    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = minv.apply_vec(&r1);
    let beta1_sq = dot(&r1, &y);
    if beta1_sq < 0.0 || (beta1_sq == 0.0 && norm(&r1) > 0.0) {
        return Err(Error::IndefinitePreconditioner(beta1_sq));
    }
    let finish = |x: Vec<f64>, history: Vec<f64>, iterations: usize, status: SolveStatus| {
        let true_rel = true_residual(a, &x, b);
        (
            x,
            SolveReport {
                iterations,
                restarts: 0,
                residual_history: history,
                status,
                wall_seconds: start.elapsed().as_secs_f64(),
                true_relative_residual: true_rel,
            },
        )
    };
    if beta1_sq == 0.0 {
        return Ok(finish(x, vec![0.0], 0, SolveStatus::Converged));
    }
    let beta1 = beta1_sq.sqrt();

    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut history = vec![1.0];
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;

    while iterations < opts.maxit {
        iterations += 1;
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        a.apply(&v, &mut y);
        if iterations >= 2 {
            let f = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= f * ri;
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= f * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        minv.apply(&r2, &mut y);
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 || (beta_sq == 0.0 && norm(&r2) > 0.0) {
            return Err(Error::IndefinitePreconditioner(beta_sq));
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        let rel = phibar.abs() / beta1;
        history.push(rel);
        if rel <= opts.tol || beta == 0.0 {
            status = SolveStatus::Converged;
            break;
        }
    }
    Ok(finish(x, history, iterations, status))
}

fn check_symmetric(a: &dyn LinearOperator) -> Result<()> {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..SYMMETRY_PROBES {
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (nx, ny) = (norm(&x), norm(&y));
        x.iter_mut().for_each(|v| *v /= nx);
        y.iter_mut().for_each(|v| *v /= ny);
        let ax = a.apply_vec(&x);
        let ay = a.apply_vec(&y);
        let gap = (dot(&ax, &y) - dot(&x, &ay)).abs();
        let scale = norm(&ax).max(norm(&ay)).max(1.0);
        if gap > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(gap));
        }
    }
    Ok(())
}
