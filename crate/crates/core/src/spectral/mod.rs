//! Closed-form eigenvalue predictions for block-preconditioned double
//! saddle-point matrices, and reports that compare them with computed spectra.

mod classify;

pub use classify::{
    classify_bfbt_symmetric, classify_d_nonzero_pair, classify_theorem1, congruent_perturbation, Check,
    ClassificationReport, ExpectedCluster,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{eig_general, DenseMatrix};
use crate::error::{Error, Result};

/// The six distinct eigenvalues `2 cos((2i+1) pi / (2j+3))`, `j = 0, 1, 2`,
/// `i = 0..=j`, ascending.
pub fn six_eigenvalue_catalogue() -> [f64; 6] {
    let mut out = [0.0; 6];
    let mut k = 0;
    for j in 0..3u32 {
        for i in 0..=j {
            out[k] = if j == 0 {
                1.0
            } else {
                2.0 * ((2 * i + 1) as f64 * PI / (2 * j + 3) as f64).cos()
            };
            k += 1;
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// `(1 + sqrt 5) / 2` and `(1 - sqrt 5) / 2`.
pub fn golden_ratios() -> [f64; 2] {
    let r = 5f64.sqrt();
    [(1.0 + r) / 2.0, (1.0 - r) / 2.0]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// `l^3 - l^2 - (1 + mu) l + mu = 0` (zero `D`).
    Cubic,
    /// `l (l + 1) = mu` (nonzero `D`).
    Quadratic,
}

/// Roots `lambda` attached to one generalized eigenvalue `mu`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuLambdaMap {
    pub mu: f64,
    /// Sorted by decreasing real part.
    pub lambdas: Vec<Complex64>,
    pub kind: MapKind,
}

impl MuLambdaMap {
    pub fn polynomial(&self, l: Complex64) -> Complex64 {
        match self.kind {
            MapKind::Cubic => cubic(self.mu, l),
            MapKind::Quadratic => l * (l + 1.0) - self.mu,
        }
    }

    /// Largest `|p(lambda)|` over the roots.
    pub fn max_residual(&self) -> f64 {
        self.lambdas.iter().fold(0.0, |m, &l| m.max(self.polynomial(l).norm()))
    }

    /// Root closest to `target`.
    pub fn root_near(&self, target: Complex64) -> Complex64 {
        *self
            .lambdas
            .iter()
            .min_by(|a, b| (**a - target).norm().total_cmp(&(**b - target).norm()))
            .expect("maps always hold roots")
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.lambdas.iter().all(|l| l.im.abs() <= tol)
    }

    /// Real parts, in stored order.
    pub fn real_roots(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l.re).collect()
    }
}

fn cubic(mu: f64, l: Complex64) -> Complex64 {
    ((l - 1.0) * l - (1.0 + mu)) * l + mu
}

fn cubic_derivative(mu: f64, l: Complex64) -> Complex64 {
    (3.0 * l - 2.0) * l - (1.0 + mu)
}

fn sort_desc(v: &mut [Complex64]) {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Roots of `l^3 - l^2 - (1 + mu) l + mu` from the companion matrix,
/// polished by one Newton step.
pub fn cubic_roots(mu: f64) -> MuLambdaMap {
    let companion = DenseMatrix::from_rows(&[&[1.0, 1.0 + mu, -mu], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
    let mut lambdas: Vec<Complex64> = eig_general(&companion)
        .expect("3x3 companion matrix")
        .eigenvalues()
        .iter()
        .map(|&l| {
            let d = cubic_derivative(mu, l);
            if d.norm() > 0.0 {
                l - cubic(mu, l) / d
            } else {
                l
            }
        })
        .collect();
    sort_desc(&mut lambdas);
    MuLambdaMap {
        mu,
        lambdas,
        kind: MapKind::Cubic,
    }
}

/// `(-1 +- sqrt(1 + 4 mu)) / 2`, complex when `1 + 4 mu < 0`.
pub fn quadratic_roots(mu: f64) -> MuLambdaMap {
    let disc = 1.0 + 4.0 * mu;
    let lambdas = if disc >= 0.0 {
        let r = disc.sqrt();
        // the smaller-magnitude root from Vieta avoids cancellation
        let big = -(1.0 + r) / 2.0;
        let small = if big != 0.0 { -mu / big } else { 0.0 };
        let mut v = vec![Complex64::new(small, 0.0), Complex64::new(big, 0.0)];
        sort_desc(&mut v);
        v
    } else {
        let im = (-disc).sqrt() / 2.0;
        vec![Complex64::new(-0.5, im), Complex64::new(-0.5, -im)]
    };
    MuLambdaMap {
        mu,
        lambdas,
        kind: MapKind::Quadratic,
    }
}

/// First-order coefficient of a cubic root in `mu = 1 + eps`:
/// `(l0 - 1) / (3 l0^2 - 2 l0 - 2)`.
pub fn perturbation_first_order(lambda0: f64) -> Result<f64> {
    let denom = 3.0 * lambda0 * lambda0 - 2.0 * lambda0 - 2.0;
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateExpansion(lambda0));
    }
    Ok((lambda0 - 1.0) / denom)
}
