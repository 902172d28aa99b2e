//! Eigenvalues of dense matrices.
//!
//! General real matrices are balanced, reduced to upper Hessenberg form by
//! Householder reflections, and then driven to real Schur form by the
//! Francis implicit double-shift QR iteration (eigenvalues only).
//!
//! Symmetric-definite pencils `A z = mu B z` are reduced to the standard
//! symmetric problem `F^{-1} A F^{-T}` with `B = F F^T`, tridiagonalized, and
//! solved by the implicit QL iteration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Cholesky, DenseMatrix};
use crate::error::{Error, Result};

/// Largest dense dimension the eigensolvers accept by default.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Clustering tolerance relative to `max(1, spectral radius)`.
const CLUSTER_REL_TOL: f64 = 1e-6;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// Eigenvalues sorted by (real, imaginary) part, with clusters of
/// numerically coincident values.
#[derive(Clone, Debug)]
pub struct Spectrum {
    eigenvalues: Vec<Complex64>,
    clusters: Vec<Cluster>,
    tolerance: f64,
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<Complex64>) -> Self {
        Self::with_relative_tolerance(eigenvalues, CLUSTER_REL_TOL)
    }

    /// Clusters with `|l_i - l_j| <= rel_tol * max(1, rho)`, transitively.
    pub fn with_relative_tolerance(mut eigenvalues: Vec<Complex64>, rel_tol: f64) -> Self {
        eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let rho = eigenvalues.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let tolerance = rel_tol * rho.max(1.0);
        let clusters = cluster(&eigenvalues, tolerance);
        Self {
            eigenvalues,
            clusters,
            tolerance,
        }
    }

    /// Builds a spectrum from real eigenvalues.
    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// Absolute tolerance used for clustering.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Real parts, ascending.
    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    /// Number of eigenvalues within `tol` of `value`.
    pub fn count_near(&self, value: Complex64, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|z| (**z - value).norm() <= tol).count()
    }
}

fn cluster(sorted: &[Complex64], tol: f64) -> Vec<Cluster> {
    let n = sorted.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            // sorted by real part, so later entries only get farther in re
            if sorted[j].re - sorted[i].re > tol {
                break;
            }
            if (sorted[j] - sorted[i]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = ri.min(rj);
                }
            }
        }
    }
    let mut sums: Vec<(Complex64, usize)> = vec![(Complex64::new(0.0, 0.0), 0); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        sums[r].0 += sorted[i];
        sums[r].1 += 1;
    }
    let mut clusters: Vec<Cluster> = sums
        .into_iter()
        .filter(|(_, c)| *c > 0)
        .map(|(s, c)| Cluster {
            value: s / c as f64,
            multiplicity: c,
        })
        .collect();
    clusters.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });
    clusters
}

/// Full complex spectrum of a real square matrix (dimension cap 4096).
pub fn eig_general(a: &DenseMatrix) -> Result<Spectrum> {
    eig_general_with_cap(a, DEFAULT_DENSE_CAP)
}

pub fn eig_general_with_cap(a: &DenseMatrix, cap: usize) -> Result<Spectrum> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() > cap {
        return Err(Error::CapExceeded { dim: a.rows(), cap });
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let values = hessenberg_qr(&mut h)?;
    Ok(Spectrum::new(values))
}

/// Parlett-Reinsch balancing by powers of two.
fn balance(a: &mut DenseMatrix) {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let ginv = 1.0 / f;
                a.row_mut(i).iter_mut().for_each(|v| *v *= ginv);
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(h: &mut DenseMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let x = &mut v[..len];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = h[(k + 1 + i, k)];
        }
        let xnorm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        x[0] -= alpha;
        let vnorm2: f64 = x.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // H[k+1.., k..] -= beta v (v^T H[k+1.., k..])
        let wk = &mut w[k..n];
        wk.iter_mut().for_each(|t| *t = 0.0);
        for i in 0..len {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            let row = &h.row(k + 1 + i)[k..];
            for (t, &hij) in wk.iter_mut().zip(row) {
                *t += vi * hij;
            }
        }
        for i in 0..len {
            let s = beta * v[i];
            if s == 0.0 {
                continue;
            }
            let row = &mut h.row_mut(k + 1 + i)[k..];
            for (hij, &t) in row.iter_mut().zip(wk.iter()) {
                *hij -= s * t;
            }
        }
        // H[.., k+1..] -= beta (H[.., k+1..] v) v^T
        for i in 0..n {
            let row = &mut h.row_mut(i)[k + 1..];
            let s: f64 = row.iter().zip(&v[..len]).map(|(a, b)| a * b).sum::<f64>() * beta;
            if s != 0.0 {
                for (hij, &vj) in row.iter_mut().zip(&v[..len]) {
                    *hij -= s * vj;
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; returns all
/// eigenvalues. Deflation when `|h[k+1][k]| <= eps (|h[k][k]| + |h[k+1][k+1]|)`.
fn hessenberg_qr(a: &mut DenseMatrix) -> Result<Vec<Complex64>> {
    let n = a.rows();
    let eps = f64::EPSILON;
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let max_total = 30 * n.max(1);
    let mut total_its = 0usize;
    let mut nn = n as isize - 1;
    let mut t = 0.0;

    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let nnu = nn as usize;
            // look for a negligible subdiagonal element
            let mut l = nnu;
            while l > 0 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = a[(nnu, nnu)];
            if l == nnu {
                out.push(Complex64::new(x + t, 0.0));
                nn -= 1;
                break;
            }
            let y = a[(nnu - 1, nnu - 1)];
            let w = a[(nnu, nnu - 1)] * a[(nnu - 1, nnu)];
            if l + 1 == nnu {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let xs = x + t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    let r1 = xs + z;
                    let r2 = if z != 0.0 { xs - w / z } else { r1 };
                    out.push(Complex64::new(r1, 0.0));
                    out.push(Complex64::new(r2, 0.0));
                } else {
                    out.push(Complex64::new(xs + p, z));
                    out.push(Complex64::new(xs + p, -z));
                }
                nn -= 2;
                break;
            }

            if total_its >= max_total {
                return Err(Error::NoConvergence {
                    iterations: total_its,
                });
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 0..=nnu {
                    a[(i, i)] -= x;
                }
                let s = a[(nnu, nnu - 1)].abs() + a[(nnu - 1, nnu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total_its += 1;

            // form shift and look for two consecutive small subdiagonals
            let mut m = nnu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nnu {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }
            // double QR step on rows l..nn and columns m..nn
            let mut xk = 0.0;
            for k in m..nnu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k != nnu - 1 { a[(k + 2, k - 1)] } else { 0.0 };
                    xk = p.abs() + q.abs() + r.abs();
                    if xk != 0.0 {
                        p /= xk;
                        q /= xk;
                        r /= xk;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * xk;
                }
                p += s;
                let xx = p / s;
                let yy = q / s;
                let zz = r / s;
                q /= p;
                r /= p;
                let last = k == nnu - 1;
                {
                    let cols = a.cols();
                    let data = a.as_mut_slice();
                    for j in k..=nnu {
                        let mut pp = data[k * cols + j] + q * data[(k + 1) * cols + j];
                        if !last {
                            pp += r * data[(k + 2) * cols + j];
                            data[(k + 2) * cols + j] -= pp * zz;
                        }
                        data[(k + 1) * cols + j] -= pp * yy;
                        data[k * cols + j] -= pp * xx;
                    }
                }
                let mmin = nnu.min(k + 3);
                for i in l..=mmin {
                    let row = a.row_mut(i);
                    let mut pp = xx * row[k] + yy * row[k + 1];
                    if !last {
                        pp += zz * row[k + 2];
                        row[k + 2] -= pp * r;
                    }
                    row[k + 1] -= pp * q;
                    row[k] -= pp;
                }
            }
        }
    }
    Ok(out)
}

/// Real generalized eigenvalues of `A z = mu B z` for symmetric `A` and SPD
/// `B`, ascending.
pub fn eig_sym_generalized(a: &DenseMatrix, b: &DenseMatrix) -> Result<Spectrum> {
    if !a.is_square() || a.rows() != b.rows() || !b.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "pencil of {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::PreconditionViolation(format!(
            "A is not symmetric (relative asymmetry {:e})",
            a.asymmetry()
        )));
    }
    let ch = Cholesky::factor(b)?;
    // C = F^{-1} A F^{-T} = F^{-1} (F^{-1} A)^T since A is symmetric
    let x = ch.forward_matrix(a);
    let c = ch.forward_matrix(&x.transpose()).symmetric_part();
    let mut values = symmetric_eigenvalues(&c)?;
    values.sort_by(f64::total_cmp);
    Ok(Spectrum::from_real(&values))
}

/// Eigenvalues of a symmetric matrix: Householder tridiagonalization followed
/// by implicit QL.
pub(crate) fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    let (mut d, mut e) = tridiagonalize(a);
    tridiagonal_ql(&mut d, &mut e)?;
    Ok(d)
}

/// Returns the diagonal and the subdiagonal (`e[i]` couples `i` and `i+1`,
/// last entry zero).
fn tridiagonalize(a: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows();
    let mut m = a.clone();
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x = &mut v[..len];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = m[(k + 1 + i, k)];
        }
        let xnorm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        x[0] -= alpha;
        let vnorm2: f64 = x.iter().map(|t| t * t).sum();
        e[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // p = beta * M22 v
        for i in 0..len {
            let row = &m.row(k + 1 + i)[k + 1..];
            p[i] = beta * row.iter().zip(&v[..len]).map(|(a, b)| a * b).sum::<f64>();
        }
        let kappa = 0.5 * beta * p[..len].iter().zip(&v[..len]).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..len {
            p[i] -= kappa * v[i];
        }
        // M22 -= v q^T + q v^T
        for i in 0..len {
            let (vi, qi) = (v[i], p[i]);
            let row = &mut m.row_mut(k + 1 + i)[k + 1..];
            for j in 0..len {
                row[j] -= vi * p[j] + qi * v[j];
            }
        }
    }
    if n >= 2 {
        e[n - 2] = m[(n - 1, n - 2)];
    }
    let d = (0..n).map(|i| m[(i, i)]).collect();
    (d, e)
}

fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let max_its = 30 * n.max(1);
    let mut total = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            total += 1;
            if total > max_its {
                return Err(Error::NoConvergence { iterations: total });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
