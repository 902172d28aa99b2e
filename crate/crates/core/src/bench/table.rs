use std::fmt::Write as _;

use serde::Serialize;

use super::{build_instance, solve_instance, ExperimentConfig, InstanceSource, RunOutput};
use crate::error::{Error, Result};
use crate::stokes_darcy::RhsMode;

/// One Stokes-Darcy solve of the iteration-count table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableCell {
    pub n1: usize,
    pub kappa: f64,
    pub nu: f64,
    /// `None` when setup or the solve failed.
    pub iterations: Option<usize>,
    pub status: String,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct TableArtifact {
    pub cells: Vec<TableCell>,
    pub timings: bool,
}

impl TableArtifact {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n1,kappa,nu,iterations,seconds,status\n");
        for c in &self.cells {
            let its = c.iterations.map(|i| i.to_string()).unwrap_or_else(|| "-".into());
            let secs = if self.timings { format!("{:.4}", c.seconds) } else { "-".into() };
            let _ = writeln!(out, "{},{},{},{},{},{}", c.n1, c.kappa, c.nu, its, secs, c.status);
        }
        out
    }

    /// Aligned table; non-converged counts carry the status, e.g. `400 (maxit)`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:>6} {:>10} {:>10} {:>16}\n", "n1", "kappa", "nu", "iterations");
        for c in &self.cells {
            let its = match (c.iterations, c.status.as_str()) {
                (Some(i), "converged") => i.to_string(),
                (Some(i), s) => format!("{i} ({s})"),
                (None, s) => s.to_string(),
            };
            let _ = writeln!(out, "{:>6} {:>10} {:>10} {:>16}", c.n1, c.kappa, c.nu, its);
        }
        out
    }

    pub fn all_converged(&self) -> bool {
        self.cells.iter().all(|c| c.status == "converged")
    }

    pub fn into_output(self) -> RunOutput {
        RunOutput {
            pass: self.all_converged(),
            text: self.to_text(),
            files: vec![("table.csv".into(), self.to_csv())],
        }
    }
}

fn run_cell(cfg: &ExperimentConfig, n1: usize, kappa: f64, nu: f64, rhs_mode: RhsMode) -> TableCell {
    let src = InstanceSource::StokesDarcy {
        n1,
        kappa,
        nu,
        alpha: cfg.table.alpha,
        rhs_mode,
    };
    let outcome = build_instance(&src, cfg.seed).and_then(|inst| solve_instance(cfg, &inst));
    match outcome {
        Ok((_, report)) => TableCell {
            n1,
            kappa,
            nu,
            iterations: Some(report.iterations),
            status: report.status.short().into(),
            seconds: report.wall_seconds,
        },
        Err(_) => TableCell {
            n1,
            kappa,
            nu,
            iterations: None,
            status: "failed".into(),
            seconds: 0.0,
        },
    }
}

/// Preconditioned GMRES iteration counts over `table.n1 x table.kappa x
/// table.nu`, rows in that nesting order regardless of `jobs`.
pub fn run_table(cfg: &ExperimentConfig) -> Result<TableArtifact> {
    let t = &cfg.table;
    if t.n1.is_empty() || t.kappa.is_empty() || t.nu.is_empty() {
        return Err(Error::Unsupported("table needs at least one n1, kappa and nu".into()));
    }
    let rhs_mode = match &cfg.instance {
        InstanceSource::StokesDarcy { rhs_mode, .. } => *rhs_mode,
        _ => RhsMode::default(),
    };
    let grid: Vec<(usize, f64, f64)> = t
        .n1
        .iter()
        .flat_map(|&n1| t.kappa.iter().flat_map(move |&k| t.nu.iter().map(move |&nu| (n1, k, nu))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
    let cells = pool.install(|| {
        use rayon::prelude::*;
        grid.par_iter().map(|&(n1, k, nu)| run_cell(cfg, n1, k, nu, rhs_mode)).collect()
    });
    Ok(TableArtifact {
        cells,
        timings: cfg.output.timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.table.n1 = vec![8, 16];
        cfg.table.kappa = vec![1.0];
        cfg
    }

    #[test]
    fn small_table_converges_in_order() {
        let art = run_table(&small()).unwrap();
        assert_eq!(art.cells.iter().map(|c| c.n1).collect::<Vec<_>>(), vec![8, 16]);
        assert!(art.all_converged(), "{}", art.to_text());
        let csv = art.to_csv();
        assert!(csv.starts_with("n1,kappa,nu,iterations,seconds,status\n"));
        assert!(csv.lines().skip(1).all(|l| l.contains(",-,converged")));
    }

    #[test]
    fn parallel_matches_serial() {
        let mut cfg = small();
        let serial = run_table(&cfg).unwrap().to_csv();
        cfg.jobs = 2;
        assert_eq!(run_table(&cfg).unwrap().to_csv(), serial);
    }

    #[test]
    fn zero_tolerance_reports_maxit() {
        let mut cfg = small();
        cfg.solver.tol = 0.0;
        cfg.solver.maxit = 5;
        let art = run_table(&cfg).unwrap();
        assert!(art.cells.iter().all(|c| c.status != "converged"));
        assert!(!art.clone().into_output().pass);
    }

    #[test]
    fn invalid_cell_is_marked_failed() {
        let mut cfg = small();
        cfg.table.kappa = vec![-1.0];
        let art = run_table(&cfg).unwrap();
        assert!(art.cells.iter().all(|c| c.status == "failed"));
        assert!(art.to_text().contains("failed"));
    }
}
