//! Experiment driver behind the `dsaddle` binary: validation suites,
//! eigenvalue dumps, single solves and iteration-count tables.
//!
//! Every runner returns its artifacts in memory; the binary writes them.

mod config;
mod table;

pub use config::{
    set_dotted, ExperimentConfig, InstanceSource, Mode, OutputConfig, S2HatChoice, SolverConfig, SolverKind, Suite,
    TableConfig, ValidateConfig,
};
pub use table::{run_table, TableArtifact, TableCell};

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::dense::{eig_general, Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::krylov::{gmres_restarted, minres, LinearOperator, SolveReport};
use crate::saddle::{
    load_system_dir, preconditioned_matrix, random_instance, save_system_dir, schur_exact, BlockPreconditioner,
    DoubleSaddleSystem, Family, Manifest, PreconditionerSpec, RandomInstanceConfig, StructureHints, SystemBundle,
};
use crate::spectral::{
    classify_bfbt_symmetric, classify_d_nonzero_pair, classify_theorem1, congruent_perturbation, cubic_roots,
    golden_ratios, perturbation_first_order, six_eigenvalue_catalogue, Check, ClassificationReport,
};
use crate::stokes_darcy::{manufactured_problem_with, MacGrid, PhysicalParams, StokesDarcyProblem};

/// Artifacts of one run.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub pass: bool,
    /// Human-readable summary.
    pub text: String,
    /// `(file name, contents)` pairs destined for the output directory.
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

/// Process exit status: 0 pass, 1 failed check or runtime error, 2 bad
/// configuration.
pub fn exit_code(result: &Result<RunOutput>) -> u8 {
    match result {
        Ok(out) if out.pass => 0,
        Ok(_) => 1,
        Err(e) if is_config_error(e) => 2,
        Err(_) => 1,
    }
}

pub fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Parse(_) | Error::Json(_) | Error::Unsupported(_))
}

/// A system with whatever extra data its source provides.
pub struct Instance {
    pub sys: DoubleSaddleSystem,
    pub rhs: Vec<f64>,
    pub exact_solution: Option<Vec<f64>>,
    pub manifest: Manifest,
    pub problem: Option<StokesDarcyProblem>,
}

impl Instance {
    pub fn hints(&self) -> Option<&dyn StructureHints> {
        self.problem.as_ref().map(|p| p as &dyn StructureHints)
    }

    pub fn to_bundle(&self) -> SystemBundle {
        SystemBundle {
            system: self.sys.clone(),
            manifest: self.manifest.clone(),
            rhs: Some(self.rhs.clone()),
            exact_solution: self.exact_solution.clone(),
        }
    }
}

pub fn build_instance(src: &InstanceSource, seed: u64) -> Result<Instance> {
    match src {
        InstanceSource::BuiltinRandom { n, m, p, case } => {
            let cfg = RandomInstanceConfig {
                n: *n,
                m: *m,
                p: *p,
                case: *case,
                seed,
            };
            let sys = random_instance(&cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            let x: Vec<f64> = (0..sys.total_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rhs = sys.assemble_k().spmv(&x)?;
            let manifest = Manifest {
                n: *n,
                m: *m,
                p: *p,
                source: "random".into(),
                params: serde_json::to_value(cfg)?,
                has_rhs: true,
                has_exact_solution: true,
            };
            Ok(Instance {
                sys,
                rhs,
                exact_solution: Some(x),
                manifest,
                problem: None,
            })
        }
        InstanceSource::StokesDarcy {
            n1,
            kappa,
            nu,
            alpha,
            rhs_mode,
        } => {
            let params = PhysicalParams {
                kappa: *kappa,
                nu: *nu,
                alpha: alpha.unwrap_or(*nu),
            };
            let prob = manufactured_problem_with(&MacGrid::new(*n1)?, &params, *rhs_mode)?;
            Ok(Instance {
                sys: prob.sys.clone(),
                rhs: prob.rhs.clone(),
                exact_solution: Some(prob.exact_solution.clone()),
                manifest: prob.manifest(),
                problem: Some(prob),
            })
        }
        InstanceSource::MtxDirectory { path } => {
            let bundle = load_system_dir(path)?;
            let rhs = match bundle.rhs {
                Some(r) => r,
                None => bundle.system.assemble_k().spmv(&vec![1.0; bundle.system.total_dim()])?,
            };
            Ok(Instance {
                sys: bundle.system,
                rhs,
                exact_solution: bundle.exact_solution,
                manifest: bundle.manifest,
                problem: None,
            })
        }
    }
}

/// Preconditioner when the configuration leaves it unset: the practical
/// block lower-triangular one for Stokes-Darcy, exact blocks otherwise.
pub fn effective_preconditioner(cfg: &ExperimentConfig, instance_is_stokes_darcy: bool) -> PreconditionerSpec {
    cfg.preconditioner.unwrap_or(if instance_is_stokes_darcy {
        PreconditionerSpec::practical(Family::Mlt)
    } else {
        PreconditionerSpec::exact(Family::Mlt)
    })
}

fn build_preconditioner(cfg: &ExperimentConfig, inst: &Instance) -> Result<BlockPreconditioner> {
    let spec = effective_preconditioner(cfg, inst.problem.is_some());
    BlockPreconditioner::build(&inst.sys, &spec, inst.hints())
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------- validate

#[derive(Serialize)]
struct SuiteOutcome {
    suite: Suite,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<ClassificationReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    checks: Vec<Check>,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        pass,
        detail,
    }
}

fn catalogue_checks() -> Vec<Check> {
    let cat = six_eigenvalue_catalogue();
    let published = [-1.2470, -0.6180, 0.4450, 1.0, 1.6180, 1.8019];
    let dev = cat.iter().zip(published).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
    let [gp, gm] = golden_ratios();
    let remark = cat
        .iter()
        .filter(|&&l| l != 1.0 && (l - gp).abs() > 1e-12 && (l - gm).abs() > 1e-12)
        .fold(0.0f64, |r, &l| r.max((l * l * l - l * l - 2.0 * l + 1.0).abs()));
    let roots_at_one = cubic_roots(1.0).real_roots();
    let cubic_dev = roots_at_one.iter().fold(0.0f64, |d, &l| {
        d.max(cat.iter().fold(f64::MAX, |best, &c| best.min((c - l).abs())))
    });
    vec![
        check("published values", dev <= 5e-5, format!("max deviation {dev:.2e}")),
        check("contains 1", cat.contains(&1.0), format!("{cat:?}")),
        check("remaining roots solve l^3-l^2-2l+1", remark <= 1e-12, format!("residual {remark:.2e}")),
        check("cubic at mu = 1", cubic_dev <= 1e-6, format!("deviation {cubic_dev:.2e}")),
    ]
}

fn perturbation_checks() -> Result<Vec<Check>> {
    let eps = 1e-4;
    let mut out = Vec::new();
    for (l0, want) in [(1.8019377358048383, 0.1938), (-1.2469796037174670, -0.4356)] {
        let l1 = perturbation_first_order(l0)?;
        out.push(check(
            &format!("first-order coefficient at {l0:.4}"),
            (l1 - want).abs() <= 1e-3,
            format!("{l1:.6}"),
        ));
        let shifted = cubic_roots(1.0 + eps).root_near(Complex64::new(l0, 0.0)).re;
        let err = (shifted - (l0 + eps * l1)).abs();
        out.push(check(
            &format!("expansion at {l0:.4}"),
            err <= 10.0 * eps * eps,
            format!("error {err:.2e}"),
        ));
    }
    let big = cubic_roots(1e4).real_roots()[0];
    out.push(check(
        "largest root near sqrt(mu) at mu = 1e4",
        (big - 100.0).abs() <= 2.0,
        format!("{big:.4}"),
    ));
    Ok(out)
}

/// `S2^` for the suites, from the exact `S2`.
pub fn s2_hat_for(choice: &S2HatChoice, s2: &DenseMatrix, seed: u64) -> Result<DenseMatrix> {
    let s2 = s2.symmetric_part();
    match *choice {
        S2HatChoice::Exact => Ok(s2),
        S2HatChoice::Scaled { factor } => Ok(s2.scale(factor)),
        S2HatChoice::Perturbed { scale } => congruent_perturbation(&s2, scale, seed),
        S2HatChoice::Indefinite => {
            // L diag(-1, 1, ..., 1) L^T for S2 = L L^T
            let l = Cholesky::factor(&s2)?.lower().clone();
            let mut flip = DenseMatrix::identity(s2.rows());
            flip[(0, 0)] = -1.0;
            Ok(l.matmul(&flip)?.matmul(&l.transpose())?.symmetric_part())
        }
    }
}

fn default_suites(inst: &Instance) -> Vec<Suite> {
    let (_, m, p) = inst.sys.dims();
    if inst.sys.d_is_zero() {
        let mut s = vec![Suite::Catalogue, Suite::Perturbation, Suite::Theorem1];
        if m > p {
            s.push(Suite::Bfbt);
        }
        s
    } else {
        vec![Suite::DNonzero]
    }
}

/// Runs the classification suites; passes iff every suite passes.
pub fn run_validate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let inst = build_instance(&cfg.instance, cfg.seed)?;
    let suites = if cfg.validate.suites.is_empty() {
        default_suites(&inst)
    } else {
        cfg.validate.suites.clone()
    };
    let needs_s2 = suites.iter().any(|s| matches!(s, Suite::Theorem1 | Suite::DNonzero));
    let s2_hat = if needs_s2 {
        let s2 = schur_exact(&inst.sys)?.s2;
        Some(s2_hat_for(&cfg.validate.s2_hat, &s2, cfg.seed)?)
    } else {
        None
    };

    let mut outcomes = Vec::new();
    let mut text = String::new();
    for suite in suites {
        let outcome = match suite {
            Suite::Catalogue => {
                let checks = catalogue_checks();
                SuiteOutcome {
                    suite,
                    pass: checks.iter().all(|c| c.pass),
                    report: None,
                    checks,
                }
            }
            Suite::Perturbation => {
                let checks = perturbation_checks()?;
                SuiteOutcome {
                    suite,
                    pass: checks.iter().all(|c| c.pass),
                    report: None,
                    checks,
                }
            }
            Suite::Theorem1 | Suite::Bfbt | Suite::DNonzero => {
                let hat = s2_hat.as_ref();
                let report = match suite {
                    Suite::Theorem1 => classify_theorem1(&inst.sys, hat.expect("computed above"))?,
                    Suite::Bfbt => classify_bfbt_symmetric(&inst.sys)?,
                    _ => classify_d_nonzero_pair(&inst.sys, hat.expect("computed above"))?,
                };
                SuiteOutcome {
                    suite,
                    pass: report.pass,
                    report: Some(report),
                    checks: Vec::new(),
                }
            }
        };
        let name = serde_json::to_value(suite)?;
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(text, "[{verdict}] {}", name.as_str().unwrap_or("suite"));
        if let Some(r) = &outcome.report {
            text.push_str(&r.to_table());
        }
        for c in &outcome.checks {
            let _ = writeln!(text, "  {}: {} ({})", c.name, if c.pass { "ok" } else { "FAILED" }, c.detail);
        }
        outcomes.push(outcome);
    }
    let pass = outcomes.iter().all(|o| o.pass);
    let doc = json!({
        "instance": inst.manifest,
        "seed": cfg.seed,
        "pass": pass,
        "suites": outcomes,
    });
    Ok(RunOutput {
        pass,
        text,
        files: vec![("validate.json".into(), serde_json::to_string_pretty(&doc)? + "\n")],
    })
}

// --------------------------------------------------------------------- eig

/// Eigenvalues of the dense preconditioned operator as `re,im` rows,
/// sorted by real then imaginary part.
pub fn run_eig(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let inst = build_instance(&cfg.instance, cfg.seed)?;
    let prec = build_preconditioner(cfg, &inst)?;
    let t = preconditioned_matrix(&prec, &inst.sys.assemble_k())?;
    let spec = eig_general(&t)?;
    let mut csv = String::from("re,im\n");
    for z in spec.eigenvalues() {
        let _ = writeln!(csv, "{},{}", fmt_f64(z.re), fmt_f64(z.im));
    }
    let tol = spec.tolerance();
    let at_one = spec.count_near(Complex64::new(1.0, 0.0), tol);
    let min_re = spec.eigenvalues().iter().fold(f64::INFINITY, |m, z| m.min(z.re));
    let text = format!(
        "{} eigenvalues, {} clusters, {} at 1, min real part {:.6}, max |imag| {:.3e}\n",
        spec.len(),
        spec.clusters().len(),
        at_one,
        min_re,
        spec.max_abs_imag()
    );
    Ok(RunOutput {
        pass: true,
        text,
        files: vec![("eig.csv".into(), csv)],
    })
}

// ------------------------------------------------------------------- solve

#[derive(Serialize)]
struct SolveSummary<'a> {
    instance: &'a Manifest,
    preconditioner: PreconditionerSpec,
    solver: &'a SolverConfig,
    iterations: usize,
    restarts: usize,
    status: &'static str,
    final_relative_residual: f64,
    true_relative_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seconds: Option<f64>,
}

pub fn solve_instance(cfg: &ExperimentConfig, inst: &Instance) -> Result<(Vec<f64>, SolveReport)> {
    let prec = build_preconditioner(cfg, inst)?;
    let k = inst.sys.assemble_k();
    match cfg.solver.kind {
        SolverKind::Gmres => gmres_restarted(&k, &prec, &inst.rhs, &cfg.solver.gmres()),
        SolverKind::Minres => minres(&k, &prec as &dyn LinearOperator, &inst.rhs, &cfg.solver.minres()),
    }
}

/// One preconditioned Krylov solve; passes iff it converged.
pub fn run_solve(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let inst = build_instance(&cfg.instance, cfg.seed)?;
    let (x, report) = solve_instance(cfg, &inst)?;
    let max_error = inst
        .exact_solution
        .as_ref()
        .map(|e| x.iter().zip(e).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
    let summary = SolveSummary {
        instance: &inst.manifest,
        preconditioner: effective_preconditioner(cfg, inst.problem.is_some()),
        solver: &cfg.solver,
        iterations: report.iterations,
        restarts: report.restarts,
        status: report.status.short(),
        final_relative_residual: report.final_residual(),
        true_relative_residual: report.true_relative_residual,
        max_error,
        seconds: cfg.output.timings.then_some(report.wall_seconds),
    };
    let mut csv = String::from("iteration,relative_residual\n");
    for (i, r) in report.residual_history.iter().enumerate() {
        let _ = writeln!(csv, "{i},{}", fmt_f64(*r));
    }
    let text = format!(
        "{} iterations, status {}, relative residual {:.3e}{}\n",
        report.iterations,
        report.status.short(),
        report.true_relative_residual,
        max_error.map(|e| format!(", max error {e:.3e}")).unwrap_or_default()
    );
    Ok(RunOutput {
        pass: report.converged(),
        text,
        files: vec![
            ("solve.json".into(), serde_json::to_string_pretty(&summary)? + "\n"),
            ("residuals.csv".into(), csv),
        ],
    })
}

// -------------------------------------------------------------- export-mtx

/// Writes the configured instance in the Matrix Market directory layout.
pub fn run_export(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutput> {
    let inst = build_instance(&cfg.instance, cfg.seed)?;
    save_system_dir(&inst.to_bundle(), dir)?;
    let (n, m, p) = inst.sys.dims();
    Ok(RunOutput {
        pass: true,
        text: format!("wrote n={n}, m={m}, p={p} system to {}\n", dir.display()),
        files: Vec::new(),
    })
}

/// Dispatches on `cfg.mode`; `export-mtx` needs an output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg.mode {
        Mode::Validate => run_validate(cfg),
        Mode::Eig => run_eig(cfg),
        Mode::Solve => run_solve(cfg),
        Mode::Table => run_table(cfg).map(|t| t.into_output()),
        Mode::ExportMtx => {
            let dir = cfg
                .output
                .dir
                .as_ref()
                .ok_or_else(|| Error::Unsupported("export-mtx needs an output directory".into()))?;
            run_export(cfg, dir)
        }
    }
}
