//! Restarted GMRES and preconditioned MINRES over abstract operators.

mod gmres;
mod minres;
mod operator;

use serde::{Deserialize, Serialize};

pub use gmres::{gmres_restarted, GmresOptions};
pub use minres::{minres, MinresOptions};
pub use operator::{materialize, FnOperator, IdentityOperator, LinearOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Stagnated,
}

impl SolveStatus {
    /// Table rendering; stagnation prints as `S`.
    pub fn short(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "maxit",
            SolveStatus::Stagnated => "S",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    /// Total inner iterations across restarts.
    pub iterations: usize,
    pub restarts: usize,
    /// Relative residual norms; entry 0 is the initial guess.
    pub residual_history: Vec<f64>,
    pub status: SolveStatus,
    pub wall_seconds: f64,
    /// `||b - A x|| / ||b||` of the returned iterate.
    pub true_relative_residual: f64,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history holds the initial residual")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn true_residual(a: &dyn LinearOperator, x: &[f64], b: &[f64]) -> f64 {
    let bn = norm(b);
    let ax = a.apply_vec(x);
    let r: f64 = ax.iter().zip(b).map(|(u, v)| (v - u) * (v - u)).sum::<f64>().sqrt();
    if bn == 0.0 {
        r
    } else {
        r / bn
    }
}
