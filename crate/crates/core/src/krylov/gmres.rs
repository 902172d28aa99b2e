use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{dot, norm, true_residual, LinearOperator, Side, SolveReport, SolveStatus};
use crate::error::{Error, Result};

const HAPPY_BREAKDOWN: f64 = 1e-14;
const STAGNATION: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmresOptions {
    pub restart: usize,
    pub tol: f64,
    pub maxit: usize,
    pub side: Side,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 20,
            tol: 1e-10,
            maxit: 400,
            side: Side::Left,
        }
    }
}

/// GMRES(restart) from a zero initial guess.
///
/// Left preconditioning measures `||M^-1 (b - A x)|| / ||M^-1 b||`; right
/// preconditioning measures the true relative residual. `maxit` bounds the
/// total number of inner iterations.
pub fn gmres_restarted(
    a: &dyn LinearOperator,
    minv: &dyn LinearOperator,
    b: &[f64],
    opts: &GmresOptions,
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
    if opts.restart == 0 || !(opts.tol >= 0.0) {
        return Err(Error::PreconditionViolation("restart must be >= 1 and tol >= 0".into()));
    }
    let m = opts.restart;
    let mut x = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut w = vec![0.0; n];

    let residual = |x: &[f64], out: &mut Vec<f64>, scratch: &mut [f64]| {
        a.apply(x, scratch);
        let r: Vec<f64> = b.iter().zip(scratch.iter()).map(|(bi, ai)| bi - ai).collect();
        match opts.side {
            Side::Left => minv.apply(&r, out),
            Side::Right => out.copy_from_slice(&r),
        }
    };

    let mut r = vec![0.0; n];
    residual(&x, &mut r, &mut tmp);
    let norm0 = norm(&r);
    let mut history = vec![if norm0 == 0.0 { 0.0 } else { 1.0 }];
    let mut iterations = 0usize;
    let mut restarts = 0usize;
    let mut status = SolveStatus::MaxIter;
    if norm0 == 0.0 {
        status = SolveStatus::Converged;
    }

    let mut v: Vec<Vec<f64>> = vec![vec![0.0; n]; m + 1];
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];

    while status == SolveStatus::MaxIter && iterations < opts.maxit {
        let beta = norm(&r);
        let cycle_start = beta / norm0;
        for (vi, ri) in v[0].iter_mut().zip(&r) {
            *vi = ri / beta;
        }
        g.iter_mut().for_each(|gi| *gi = 0.0);
        g[0] = beta;
        let mut k = 0;
        let mut happy = false;
        while k < m && iterations < opts.maxit {
            match opts.side {
                Side::Left => {
                    a.apply(&v[k], &mut tmp);
                    minv.apply(&tmp, &mut w);
                }
                Side::Right => {
                    minv.apply(&v[k], &mut tmp);
                    a.apply(&tmp, &mut w);
                }
            }
            let wnorm0 = norm(&w);
            for i in 0..=k {
                let hik = dot(&w, &v[i]);
                h[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= hik * vj;
                }
            }
            let hnext = norm(&w);
            h[k + 1][k] = hnext;
            happy = hnext <= HAPPY_BREAKDOWN * wnorm0;
            if !happy {
                for (vj, wj) in v[k + 1].iter_mut().zip(&w) {
                    *vj = wj / hnext;
                }
            }
            for i in 0..k {
                let (hi, hi1) = (h[i][k], h[i + 1][k]);
                h[i][k] = cs[i] * hi + sn[i] * hi1;
                h[i + 1][k] = -sn[i] * hi + cs[i] * hi1;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            history.push(g[k].abs() / norm0);
            if happy || g[k].abs() / norm0 <= opts.tol {
                break;
            }
        }

        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = if h[i][i] == 0.0 { 0.0 } else { (g[i] - s) / h[i][i] };
        }
        let mut update = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&v) {
            for (u, vv) in update.iter_mut().zip(vi) {
                *u += yi * vv;
            }
        }
        if opts.side == Side::Right {
            minv.apply(&update, &mut tmp);
            update.copy_from_slice(&tmp);
        }
        let x_old = x.clone();
        for (xi, ui) in x.iter_mut().zip(&update) {
            *xi += ui;
        }

        residual(&x, &mut r, &mut tmp);
        let rel = norm(&r) / norm0;
        *history.last_mut().expect("nonempty history") = rel;
        if rel <= opts.tol || happy {
            status = SolveStatus::Converged;
            break;
        }
        let dx: f64 = x.iter().zip(&x_old).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        let identical = dx <= f64::EPSILON * norm(&x);
        let flat = (cycle_start - rel).abs() <= STAGNATION * cycle_start;
        if identical || flat {
            status = SolveStatus::Stagnated;
            break;
        }
        if iterations < opts.maxit {
            restarts += 1;
        }
    }

    let true_rel = true_residual(a, &x, b);
    Ok((
        x,
        SolveReport {
            iterations,
            restarts,
            residual_history: history,
            status,
            wall_seconds: start.elapsed().as_secs_f64(),
            true_relative_residual: true_rel,
        },
    ))
}
