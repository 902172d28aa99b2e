use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cubic_roots, golden_ratios, quadratic_roots};
use crate::dense::{eig_general, eig_sym_generalized, svd, Cholesky, Cluster, DenseMatrix, Lu, Spectrum};
use crate::error::{Error, Result};
use crate::saddle::{assemble_block_preconditioner, bfbt_s2_inverse_dense, schur_exact, DoubleSaddleSystem, Family};

/// Relative tolerance for matching predicted and computed eigenvalues.
const MATCH_REL_TOL: f64 = 1e-6;

/// One predicted eigenvalue group and how well the computed spectrum hit it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCluster {
    pub value: Complex64,
    pub multiplicity: usize,
    /// Which prediction produced the value.
    pub rule: String,
    pub observed_multiplicity: usize,
    /// Largest distance between a predicted value and its matched eigenvalue.
    pub max_deviation: f64,
}

impl ExpectedCluster {
    pub fn matched(&self) -> bool {
        self.observed_multiplicity == self.multiplicity
    }
}

/// Side condition evaluated alongside the cluster match.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub name: String,
    pub dims: (usize, usize, usize),
    /// Absolute matching tolerance, `1e-6 max(1, spectral radius)`.
    pub tolerance: f64,
    /// Generalized eigenvalues of `S2 z = mu S2^ z`, ascending.
    pub mu: Vec<f64>,
    pub expected: Vec<ExpectedCluster>,
    pub observed: Vec<Cluster>,
    pub expected_total: usize,
    pub observed_total: usize,
    /// Only a subset of the spectrum is predicted.
    pub partial: bool,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ClassificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table of expected against observed clusters.
    pub fn to_table(&self) -> String {
        let (n, m, p) = self.dims;
        let mut out = String::new();
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{} (n={n}, m={m}, p={p}): {verdict}", self.name);
        let _ = writeln!(
            out,
            "{:>22}  {:>8}  {:>8}  {:>10}  rule",
            "value", "expected", "observed", "deviation"
        );
        for e in &self.expected {
            let value = if e.value.im == 0.0 {
                format!("{:.6}", e.value.re)
            } else {
                format!("{:.6}{:+.6}i", e.value.re, e.value.im)
            };
            let _ = writeln!(
                out,
                "{value:>22}  {:>8}  {:>8}  {:>10.2e}  {}",
                e.multiplicity, e.observed_multiplicity, e.max_deviation, e.rule
            );
        }
        let _ = writeln!(
            out,
            "total expected {} / observed {}{}",
            self.expected_total,
            self.observed_total,
            if self.partial { " (partial)" } else { "" }
        );
        for c in &self.checks {
            let _ = writeln!(out, "check {}: {} ({})", c.name, if c.pass { "ok" } else { "FAILED" }, c.detail);
        }
        out
    }
}

struct Prediction {
    value: Complex64,
    rule: String,
}

fn predict(out: &mut Vec<Prediction>, value: f64, count: usize, rule: &str) {
    out.extend((0..count).map(|_| Prediction {
        value: Complex64::new(value, 0.0),
        rule: rule.to_string(),
    }));
}

/// Greedy nearest matching of predictions to eigenvalues, then grouping of
/// coincident predictions into clusters.
fn build_report(
    name: &str,
    sys: &DoubleSaddleSystem,
    mu: Vec<f64>,
    predictions: Vec<Prediction>,
    observed: &Spectrum,
    partial: bool,
    checks: Vec<Check>,
) -> ClassificationReport {
    let tol = MATCH_REL_TOL * observed.spectral_radius().max(1.0);
    let eigs = observed.eigenvalues();
    let mut pairs = Vec::new();
    for (i, pr) in predictions.iter().enumerate() {
        for (j, &l) in eigs.iter().enumerate() {
            let d = (pr.value - l).norm();
            if d <= tol {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut hit: Vec<Option<f64>> = vec![None; predictions.len()];
    let mut taken = vec![false; eigs.len()];
    for (d, i, j) in pairs {
        if hit[i].is_none() && !taken[j] {
            hit[i] = Some(d);
            taken[j] = true;
        }
    }

    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (predictions[a].value, predictions[b].value);
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });
    let mut expected: Vec<ExpectedCluster> = Vec::new();
    let mut sums: Vec<Complex64> = Vec::new();
    let mut last: Option<Complex64> = None;
    for i in order {
        let pr = &predictions[i];
        let joins = last.is_some_and(|v| (pr.value - v).norm() <= tol);
        if !joins {
            expected.push(ExpectedCluster {
                value: pr.value,
                multiplicity: 0,
                rule: String::new(),
                observed_multiplicity: 0,
                max_deviation: 0.0,
            });
            sums.push(Complex64::new(0.0, 0.0));
        }
        last = Some(pr.value);
        let e = expected.last_mut().expect("pushed above");
        *sums.last_mut().expect("pushed above") += pr.value;
        e.multiplicity += 1;
        if !e.rule.split(" + ").any(|r| r == pr.rule) {
            if !e.rule.is_empty() {
                e.rule.push_str(" + ");
            }
            e.rule.push_str(&pr.rule);
        }
        if let Some(d) = hit[i] {
            e.observed_multiplicity += 1;
            e.max_deviation = e.max_deviation.max(d);
        }
    }
    for (e, s) in expected.iter_mut().zip(sums) {
        e.value = s / e.multiplicity as f64;
    }

    let expected_total = predictions.len();
    let counts_ok = partial || expected_total == observed.len();
    let pass = counts_ok && expected.iter().all(ExpectedCluster::matched) && checks.iter().all(|c| c.pass);
    ClassificationReport {
        name: name.to_string(),
        dims: sys.dims(),
        tolerance: tol,
        mu,
        expected,
        observed: observed.clusters().to_vec(),
        expected_total,
        observed_total: observed.len(),
        partial,
        checks,
        pass,
    }
}

fn violation(msg: impl Into<String>) -> Error {
    Error::PreconditionViolation(msg.into())
}

fn require_full_row_rank(name: &str, x: &DenseMatrix) -> Result<()> {
    if svd(&x.transpose())?.rank_deficient {
        return Err(violation(format!("{name} must have full row rank")));
    }
    Ok(())
}

fn require_spd(name: &str, x: &DenseMatrix, expected: usize) -> Result<()> {
    if x.rows() != expected || !x.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{}, expected {expected}x{expected}",
            x.rows(),
            x.cols()
        )));
    }
    if !x.is_symmetric(1e-12) {
        return Err(violation(format!("{name} must be symmetric")));
    }
    Cholesky::factor(x).map_err(|_| violation(format!("{name} must be positive definite")))?;
    Ok(())
}

fn require_symmetric_zero_d(sys: &DoubleSaddleSystem) -> Result<()> {
    let (n, m, p) = sys.dims();
    if !(n >= m && m >= p) {
        return Err(violation(format!("need n >= m >= p, got {n}, {m}, {p}")));
    }
    if !sys.is_symmetric() {
        return Err(violation("A must be symmetric"));
    }
    if !sys.d_is_zero() {
        return Err(violation("D must vanish"));
    }
    let a = sys.a().to_dense();
    Cholesky::factor(&a).map_err(|_| violation("A must be positive definite"))?;
    require_full_row_rank("B", &sys.b().to_dense())?;
    require_full_row_rank("C", &sys.c().to_dense())?;
    Ok(())
}

/// Spectrum of `M_D^-1 K` with exact `A`, `S1` and the given `S2^`.
fn md_spectrum(sys: &DoubleSaddleSystem, s1: &DenseMatrix, s2_hat: &DenseMatrix) -> Result<Spectrum> {
    let md = assemble_block_preconditioner(Family::Md, sys, s1, s2_hat)?;
    let t = Lu::factor(&md)?.solve(&sys.assemble_k().to_dense())?;
    eig_general(&t)
}

fn generalized_mu(s2: &DenseMatrix, s2_hat: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(eig_sym_generalized(&s2.symmetric_part(), s2_hat)?.real_parts())
}

fn push_cubics(predictions: &mut Vec<Prediction>, mu: &[f64]) {
    for &x in mu {
        for l in cubic_roots(x).lambdas {
            predictions.push(Prediction {
                value: l,
                rule: "cubic(mu)".into(),
            });
        }
    }
}

/// Full spectrum of `M_D^-1 K` for symmetric `K` with `D = 0`: `1` with
/// multiplicity `n - m`, the golden ratios with multiplicity `m - p` each,
/// and the roots of `l^3 - l^2 - (1 + mu) l + mu` for each `mu` of the pencil
/// `(S2, S2^)`.
pub fn classify_theorem1(sys: &DoubleSaddleSystem, s2_hat: &DenseMatrix) -> Result<ClassificationReport> {
    require_symmetric_zero_d(sys)?;
    let (n, m, p) = sys.dims();
    require_spd("S2^", s2_hat, p)?;
    let pair = schur_exact(sys)?;
    let mu = generalized_mu(&pair.s2, s2_hat)?;
    let [gp, gm] = golden_ratios();
    let mut predictions = Vec::new();
    predict(&mut predictions, 1.0, n - m, "unit");
    predict(&mut predictions, gp, m - p, "golden");
    predict(&mut predictions, gm, m - p, "golden");
    push_cubics(&mut predictions, &mu);
    let observed = md_spectrum(sys, &pair.s1, s2_hat)?;
    let positive = mu.iter().all(|&x| x > 0.0);
    let checks = vec![Check {
        name: "mu positive".into(),
        pass: positive,
        detail: format!("min mu {:.6e}", mu.first().copied().unwrap_or(f64::NAN)),
    }];
    Ok(build_report("exact-block diagonal preconditioner", sys, mu, predictions, &observed, false, checks))
}

/// Full spectrum of `M_D^-1 K` with the BFBt approximation
/// `S2^-1 = (C C^T)^-1 C S1 C^T (C C^T)^-1`: `1` (`n - m`), golden ratios
/// (`m - p` each), the `mu = 1` cubic roots (`max(2p - m, 0)` each), and
/// cubic roots at the remaining `min(p, m - p)` values of `mu`.
pub fn classify_bfbt_symmetric(sys: &DoubleSaddleSystem) -> Result<ClassificationReport> {
    require_symmetric_zero_d(sys)?;
    let (n, m, p) = sys.dims();
    if m <= p {
        return Err(violation(format!("BFBt classification needs m > p, got m = {m}, p = {p}")));
    }
    let pair = schur_exact(sys)?;
    let c = sys.c().to_dense();
    let s2_hat_inv = bfbt_s2_inverse_dense(&pair.s1.symmetric_part(), &c)?.symmetric_part();
    let s2_hat = Lu::factor(&s2_hat_inv)?.inverse().symmetric_part();
    let mu = generalized_mu(&pair.s2, &s2_hat)?;
    let unit = (2 * p).saturating_sub(m);
    let [gp, gm] = golden_ratios();
    let mut predictions = Vec::new();
    predict(&mut predictions, 1.0, n - m, "unit");
    predict(&mut predictions, gp, m - p, "golden");
    predict(&mut predictions, gm, m - p, "golden");
    for &l in cubic_roots(1.0).real_roots().iter() {
        predict(&mut predictions, l, unit, "cubic(1)");
    }
    // mu is ascending and bounded below by 1, so the unit values come first
    push_cubics(&mut predictions, &mu[unit..]);

    let min_mu = mu.first().copied().unwrap_or(f64::NAN);
    let unit_dev = mu[..unit].iter().fold(0.0f64, |d, &x| d.max((x - 1.0).abs()));
    let checks = vec![
        Check {
            name: "mu >= 1".into(),
            pass: min_mu >= 1.0 - 1e-10,
            detail: format!("min mu {min_mu:.12}"),
        },
        Check {
            name: "mu = 1 multiplicity".into(),
            pass: unit_dev <= 1e-8,
            detail: format!("{unit} smallest mu within {unit_dev:.2e} of 1"),
        },
    ];
    let observed = md_spectrum(sys, &pair.s1, &s2_hat)?;
    Ok(build_report("BFBt block diagonal preconditioner", sys, mu, predictions, &observed, false, checks))
}

/// Eigenvalues of `M_D^-1 K` with a vanishing first block when `D != 0`:
/// both roots of `l (l + 1) = mu` for each `mu` of the pencil `(S2, S2^)`.
/// The remaining spectrum is not predicted, and the presence of eigenvalues
/// at `1` and `-1` is recorded as checks.
pub fn classify_d_nonzero_pair(sys: &DoubleSaddleSystem, s2_hat: &DenseMatrix) -> Result<ClassificationReport> {
    if sys.d_is_zero() {
        return Err(violation("D must be nonzero"));
    }
    if !sys.is_symmetric() {
        return Err(violation("A and D must be symmetric"));
    }
    let p = sys.p();
    require_spd("S2^", s2_hat, p)?;
    require_full_row_rank("C", &sys.c().to_dense())?;
    let pair = schur_exact(sys)?;
    require_spd("S1", &pair.s1.symmetric_part(), sys.m())?;
    let mu = generalized_mu(&pair.s2, s2_hat)?;
    let mut predictions = Vec::new();
    for &x in &mu {
        for l in quadratic_roots(x).lambdas {
            predictions.push(Prediction {
                value: l,
                rule: "quadratic(mu)".into(),
            });
        }
    }
    let observed = md_spectrum(sys, &pair.s1, s2_hat)?;
    let tol = MATCH_REL_TOL * observed.spectral_radius().max(1.0);
    let near = |v: f64| observed.count_near(Complex64::new(v, 0.0), tol);
    let (plus, minus) = (near(1.0), near(-1.0));
    let checks = vec![Check {
        name: "eigenvalue 1 present".into(),
        pass: plus > 0,
        detail: format!("{plus} eigenvalues at 1, {minus} at -1"),
    }];
    Ok(build_report("pair eigenvalues with nonzero D", sys, mu, predictions, &observed, true, checks))
}

/// `L (I + scale E) L^T` for `S2 = L L^T` and a seeded random SPD `E` with
/// unit spectral scale, a symmetric stand-in for `S2 (I + scale E)`.
pub fn congruent_perturbation(s2: &DenseMatrix, scale: f64, seed: u64) -> Result<DenseMatrix> {
    let p = s2.rows();
    let ch = Cholesky::factor(&s2.symmetric_part())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DenseMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
    let e = g.transpose().matmul(&g)?;
    let e = e.scale(1.0 / e.frobenius_norm().max(f64::MIN_POSITIVE));
    let inner = DenseMatrix::identity(p).add(&e.scale(scale))?;
    let l = ch.lower();
    Ok(l.matmul(&inner)?.matmul(&l.transpose())?.symmetric_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::six_eigenvalue_catalogue;
    use crate::saddle::{random_instance, InstanceCase, RandomInstanceConfig};

    fn instance(n: usize, m: usize, p: usize, case: InstanceCase) -> DoubleSaddleSystem {
        random_instance(&RandomInstanceConfig { n, m, p, case, seed: 42 }).unwrap()
    }

    fn cluster_mults(r: &ClassificationReport) -> Vec<usize> {
        r.expected.iter().map(|e| e.multiplicity).collect()
    }

    #[test]
    fn exact_s2_gives_six_clusters() {
        let sys = instance(20, 10, 4, InstanceCase::Symmetric);
        let s2 = schur_exact(&sys).unwrap().s2.symmetric_part();
        let r = classify_theorem1(&sys, &s2).unwrap();
        assert!(r.pass, "{}", r.to_table());
        assert_eq!(cluster_mults(&r), vec![4, 6, 4, 10, 6, 4]);
        assert_eq!(r.observed.len(), 6);
        for (e, v) in r.expected.iter().zip(six_eigenvalue_catalogue()) {
            assert!((e.value.re - v).abs() < 1e-9);
        }
        assert_eq!(r.expected_total, 34);
    }

    #[test]
    fn perturbed_s2_matches_cubics() {
        let sys = instance(20, 10, 4, InstanceCase::Symmetric);
        let s2 = schur_exact(&sys).unwrap().s2;
        let hat = congruent_perturbation(&s2, 0.1, 9).unwrap();
        let r = classify_theorem1(&sys, &hat).unwrap();
        assert!(r.pass, "{}", r.to_table());
        assert_eq!(r.mu.len(), 4);
        assert!(r.mu.iter().any(|&x| (x - 1.0).abs() > 1e-3));
        assert_eq!(r.expected.iter().map(|e| e.multiplicity).sum::<usize>(), 34);
    }

    #[test]
    fn square_b_and_c_have_no_golden_block() {
        let sys = instance(6, 4, 4, InstanceCase::Symmetric);
        let s2 = schur_exact(&sys).unwrap().s2.symmetric_part();
        let r = classify_theorem1(&sys, &s2).unwrap();
        assert!(r.pass, "{}", r.to_table());
        assert!(r.expected.iter().all(|e| !e.rule.contains("golden")));
    }

    #[test]
    fn scaled_s2_reproduces_half_mu_cubic() {
        let sys = instance(12, 6, 3, InstanceCase::Symmetric);
        let s2 = schur_exact(&sys).unwrap().s2.symmetric_part();
        let r = classify_theorem1(&sys, &s2.scale(2.0)).unwrap();
        assert!(r.pass);
        for x in &r.mu {
            assert!((x - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_s2_hat_rejected() {
        let sys = instance(20, 10, 4, InstanceCase::Symmetric);
        let bad = DenseMatrix::from_diagonal(&[1.0, -1.0, 1.0, 1.0]);
        assert!(matches!(classify_theorem1(&sys, &bad), Err(Error::PreconditionViolation(_))));
        let pair = instance(20, 10, 4, InstanceCase::DNonzeroPair);
        assert!(matches!(
            classify_theorem1(&pair, &DenseMatrix::identity(4)),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn bfbt_with_unit_mu_block() {
        let sys = instance(20, 10, 7, InstanceCase::Symmetric);
        let r = classify_bfbt_symmetric(&sys).unwrap();
        assert!(r.pass, "{}", r.to_table());
        let remark: Vec<_> = r.expected.iter().filter(|e| e.rule.contains("cubic(1)")).collect();
        assert_eq!(remark.len(), 3);
        assert!(remark.iter().all(|e| e.multiplicity >= 4));
        assert!(r.mu.iter().all(|&x| x >= 1.0 - 1e-10));
    }

    #[test]
    fn bfbt_at_m_equal_2p() {
        let sys = instance(20, 10, 5, InstanceCase::Symmetric);
        let r = classify_bfbt_symmetric(&sys).unwrap();
        assert!(r.pass, "{}", r.to_table());
        assert!(r.expected.iter().all(|e| !e.rule.contains("cubic(1)")));
    }

    #[test]
    fn bfbt_rejects_square_c() {
        let sys = instance(8, 4, 4, InstanceCase::Symmetric);
        assert!(matches!(classify_bfbt_symmetric(&sys), Err(Error::PreconditionViolation(_))));
    }

    #[test]
    fn d_nonzero_pairs() {
        let sys = instance(20, 10, 4, InstanceCase::DNonzeroPair);
        let s2 = schur_exact(&sys).unwrap().s2.symmetric_part();
        let r = classify_d_nonzero_pair(&sys, &s2).unwrap();
        assert!(r.pass, "{}", r.to_table());
        assert!(r.partial);
        let [gp, gm] = golden_ratios();
        let values: Vec<f64> = r.expected.iter().map(|e| e.value.re).collect();
        assert!(values.iter().any(|v| (v - (gp - 1.0)).abs() < 1e-9));
        assert!(values.iter().any(|v| (v - (gm - 1.0)).abs() < 1e-9));

        let quarter = classify_d_nonzero_pair(&sys, &s2.scale(4.0)).unwrap();
        assert!(quarter.pass, "{}", quarter.to_table());
        let want = (-1.0 + 2f64.sqrt()) / 2.0;
        assert!(quarter.expected.iter().any(|e| (e.value.re - want).abs() < 1e-9));
    }

    #[test]
    fn d_nonzero_rejects_zero_d() {
        let sys = instance(20, 10, 4, InstanceCase::Symmetric);
        assert!(matches!(
            classify_d_nonzero_pair(&sys, &DenseMatrix::identity(4)),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn report_serializes_and_renders() {
        let sys = instance(8, 4, 2, InstanceCase::Symmetric);
        let s2 = schur_exact(&sys).unwrap().s2.symmetric_part();
        let r = classify_theorem1(&sys, &s2).unwrap();
        let back: ClassificationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.pass, r.pass);
        assert_eq!(back.dims, r.dims);
        assert_eq!(cluster_mults(&back), cluster_mults(&r));
        let table = r.to_table();
        assert!(table.contains("PASS") && table.contains("golden"));
    }
}
