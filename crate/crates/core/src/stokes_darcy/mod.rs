//! Coupled Stokes-Darcy flow on two stacked unit squares, discretized on a
//! staggered (marker-and-cell) grid, with the problem-specific Schur
//! complement approximations used by the practical preconditioner.

mod assemble;
mod grid;

pub use assemble::InterfaceTreatment;
pub use grid::{MacGrid, ManufacturedFields, PhysicalParams};

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::krylov::{FnOperator, LinearOperator};
use crate::saddle::{
    exact_solver, ichol_operator, s1_sparse, save_system_dir, DoubleSaddleSystem, Manifest, StructureHints,
    SystemBundle,
};
use crate::sparse::{BandedCholesky, CsrMatrix};

/// Scaling of the diagonal Darcy approximation `(tau / kappa) I`.
pub const TAU: f64 = 1.0 / 3.0;

/// Default drop tolerance of the incomplete Cholesky factor inside `S1~`.
pub const DEFAULT_DROP_TOL: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsMode {
    /// `rhs = K x_exact` with `x_exact` the fields sampled on the grid.
    #[default]
    Discrete,
    /// Sampled source terms, boundary values and interface defects.
    Continuum,
}

pub fn assemble_darcy(grid: &MacGrid, params: &PhysicalParams) -> CsrMatrix {
    assemble::darcy(grid, params, None).matrix(grid.n(), grid.n())
}

pub fn assemble_stokes(grid: &MacGrid, params: &PhysicalParams) -> CsrMatrix {
    assemble_stokes_with(grid, params, InterfaceTreatment::Coupled)
}

pub fn assemble_stokes_with(grid: &MacGrid, params: &PhysicalParams, treatment: InterfaceTreatment) -> CsrMatrix {
    assemble::stokes(grid, params, treatment, None).matrix(grid.m(), grid.m())
}

/// `m x n` coupling with `1/h` from each interface face to the Darcy cell below.
pub fn assemble_interface_b(grid: &MacGrid) -> CsrMatrix {
    assemble::interface_b(grid)
}

/// `p x m` negative divergence; its columns on the interface faces form
/// `I/h` over the bottom Stokes cells.
pub fn assemble_divergence_c(grid: &MacGrid) -> CsrMatrix {
    assemble::divergence(grid, None).matrix(grid.p(), grid.m())
}

#[derive(Clone, Debug)]
pub struct StokesDarcyProblem {
    pub grid: MacGrid,
    pub params: PhysicalParams,
    pub rhs_mode: RhsMode,
    pub sys: DoubleSaddleSystem,
    pub rhs: Vec<f64>,
    /// Darcy pressure, velocities, and the negated Stokes pressure sampled
    /// on the grid.
    pub exact_solution: Vec<f64>,
}

pub fn manufactured_problem(grid: &MacGrid, params: &PhysicalParams) -> Result<StokesDarcyProblem> {
    manufactured_problem_with(grid, params, RhsMode::Discrete)
}

pub fn manufactured_problem_with(grid: &MacGrid, params: &PhysicalParams, mode: RhsMode) -> Result<StokesDarcyProblem> {
    params.validate()?;
    let fields = ManufacturedFields::new(*params);
    let data = match mode {
        RhsMode::Discrete => None,
        RhsMode::Continuum => Some(fields),
    };
    let a = assemble::darcy(grid, params, data);
    let d = assemble::stokes(grid, params, InterfaceTreatment::Coupled, data);
    let c = assemble::divergence(grid, data);
    let sys = DoubleSaddleSystem::new(
        a.matrix(grid.n(), grid.n()),
        assemble::interface_b(grid),
        c.matrix(grid.p(), grid.m()),
        d.matrix(grid.m(), grid.m()),
    )?;

    let exact_solution = sample_exact(grid, &fields);
    let rhs = match mode {
        RhsMode::Discrete => sys.assemble_k().spmv(&exact_solution)?,
        RhsMode::Continuum => continuum_rhs(grid, &fields, &a.lift, &d.lift, &c.lift),
    };
    Ok(StokesDarcyProblem {
        grid: *grid,
        params: *params,
        rhs_mode: mode,
        sys,
        rhs,
        exact_solution,
    })
}

fn sample_exact(grid: &MacGrid, f: &ManufacturedFields) -> Vec<f64> {
    let n1 = grid.n1();
    let (n, m) = (grid.n(), grid.m());
    let mut x = vec![0.0; grid.total()];
    for j in 0..n1 {
        for i in 0..n1 {
            let (px, py) = grid.darcy_center(i, j);
            x[grid.darcy(i, j)] = f.darcy_pressure(px, py);
            let (vx, vy) = grid.v_position(i, j);
            x[n + grid.v_face(i, j)] = f.v(vx, vy);
            let (sx, sy) = grid.stokes_center(i, j);
            x[n + m + grid.stokes(i, j)] = -f.stokes_pressure(sx, sy);
            if i > 0 {
                let (ux, uy) = grid.u_position(i, j);
                x[n + grid.u_face(i, j)] = f.u(ux, uy);
            }
        }
    }
    x
}

fn continuum_rhs(grid: &MacGrid, f: &ManufacturedFields, lift_a: &[f64], lift_d: &[f64], lift_c: &[f64]) -> Vec<f64> {
    let n1 = grid.n1();
    let h = grid.h();
    let (n, m) = (grid.n(), grid.m());
    let mut rhs = vec![0.0; grid.total()];
    for j in 0..n1 {
        for i in 0..n1 {
            let r = grid.darcy(i, j);
            let (x, y) = grid.darcy_center(i, j);
            rhs[r] = f.darcy_source(x, y) - lift_a[r];
            if j + 1 == n1 {
                rhs[r] += f.mass_defect(x) / h;
            }

            let r = grid.v_face(i, j);
            let (x, y) = grid.v_position(i, j);
            rhs[n + r] = if j == 0 {
                f.normal_force_defect(x) / h
            } else {
                lift_d[r] - f.force_v(x, y)
            };
            if i > 0 {
                let r = grid.u_face(i, j);
                let (x, y) = grid.u_position(i, j);
                rhs[n + r] = lift_d[r] - f.force_u(x, y);
            }

            let r = grid.stokes(i, j);
            rhs[n + m + r] = -lift_c[r];
        }
    }
    rhs
}

impl StokesDarcyProblem {
    pub fn dims(&self) -> (usize, usize, usize) {
        self.sys.dims()
    }

    /// `max |x - x_exact|` over all unknowns.
    pub fn max_error(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.exact_solution).fold(0.0, |e, (a, b)| e.max((a - b).abs()))
    }

    pub fn manifest(&self) -> Manifest {
        let (n, m, p) = self.dims();
        Manifest {
            n,
            m,
            p,
            source: "stokes-darcy".into(),
            params: serde_json::json!({
                "n1": self.grid.n1(),
                "kappa": self.params.kappa,
                "nu": self.params.nu,
                "alpha": self.params.alpha,
                "h": self.grid.h(),
                "ordering": "darcy cells row-major; u faces then v faces, interface v faces first; stokes cells row-major; w = -p_s",
                "rhs_mode": self.rhs_mode,
            }),
            has_rhs: true,
            has_exact_solution: true,
        }
    }

    pub fn to_bundle(&self) -> SystemBundle {
        SystemBundle {
            system: self.sys.clone(),
            manifest: self.manifest(),
            rhs: Some(self.rhs.clone()),
            exact_solution: Some(self.exact_solution.clone()),
        }
    }

    /// Writes the system in the Matrix Market directory layout.
    pub fn export(&self, dir: &Path) -> Result<()> {
        save_system_dir(&self.to_bundle(), dir)
    }
}

impl StructureHints for StokesDarcyProblem {
    fn s1_ordering(&self) -> Option<Vec<usize>> {
        Some(self.grid.interleaved_velocity_ordering())
    }

    fn practical_s2_inverse(&self) -> Result<Arc<dyn LinearOperator>> {
        practical_s2_inverse(self)
    }
}

/// `S1~ = D + B (F F^T)^-1 B^T` for the incomplete Cholesky factor `F` of
/// `A`. The correction is a dense `n1 x n1` block on the interface faces.
pub fn practical_s1_matrix(problem: &StokesDarcyProblem, drop_tol: f64) -> Result<CsrMatrix> {
    let f = ichol_operator(problem.sys.a(), drop_tol)?;
    s1_sparse(&problem.sys, f.as_ref())
}

/// Direct solver for `S1~`.
pub fn practical_s1(problem: &StokesDarcyProblem, drop_tol: f64) -> Result<Arc<dyn LinearOperator>> {
    exact_solver(&practical_s1_matrix(problem, drop_tol)?, problem.s1_ordering())
}

/// `p x p` diagonal with `tau / (h^2 kappa)` on the bottom Stokes cells.
pub fn practical_b1(grid: &MacGrid, params: &PhysicalParams) -> CsrMatrix {
    let h = grid.h();
    let value = TAU / (h * h * params.kappa);
    let trip: Vec<_> = grid.bottom_stokes_cells().map(|r| (r, r, value)).collect();
    CsrMatrix::from_triplets(grid.p(), grid.p(), &trip).expect("bottom cells lie on the grid")
}

/// `x -> nu x + (C C^T)^-1 B1~ (C C^T)^-1 x`.
pub fn practical_s2_inverse(problem: &StokesDarcyProblem) -> Result<Arc<dyn LinearOperator>> {
    let c = problem.sys.c();
    let cct = c.matmul(&c.transpose())?;
    let factor = BandedCholesky::factor(&cct, cct.bandwidth())?;
    let b1 = practical_b1(&problem.grid, &problem.params);
    let nu = problem.params.nu;
    Ok(Arc::new(FnOperator::new(
        problem.grid.p(),
        "stokes-darcy-s2",
        move |x: &[f64], y: &mut [f64]| {
            let mut t = x.to_vec();
            factor.solve_in_place(&mut t);
            b1.spmv_into(&t, y);
            factor.solve_in_place(y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += nu * xi;
            }
        },
    )))
}
