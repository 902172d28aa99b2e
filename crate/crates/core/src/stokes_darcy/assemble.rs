//! Finite-difference stencils on the staggered grid.
//!
//! Each routine produces matrix entries and, when boundary data are
//! supplied, the per-row sum `coefficient * value` over eliminated boundary
//! and ghost values ("lift").

use serde::{Deserialize, Serialize};

use super::grid::{MacGrid, ManufacturedFields, PhysicalParams};
use crate::sparse::CsrMatrix;

/// Treatment of the velocity rows adjacent to `y = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceTreatment {
    /// Slip condition on `u`, normal force balance on the interface `v`.
    #[default]
    Coupled,
    /// Homogeneous Dirichlet ghosts, decoupling the Stokes operator.
    Dirichlet,
}

pub(crate) struct Stencil {
    pub trip: Vec<(usize, usize, f64)>,
    pub lift: Vec<f64>,
    data: Option<ManufacturedFields>,
}

impl Stencil {
    fn new(rows: usize, data: Option<ManufacturedFields>) -> Self {
        Self {
            trip: Vec::new(),
            lift: vec![0.0; rows],
            data,
        }
    }

    fn entry(&mut self, r: usize, c: usize, v: f64) {
        self.trip.push((r, c, v));
    }

    /// Known value `f(data)` with coefficient `coeff` in row `r`.
    fn known(&mut self, r: usize, coeff: f64, f: impl Fn(&ManufacturedFields) -> f64) {
        if let Some(d) = &self.data {
            self.lift[r] += coeff * f(d);
        }
    }

    pub fn matrix(&self, rows: usize, cols: usize) -> CsrMatrix {
        CsrMatrix::from_triplets(rows, cols, &self.trip).expect("stencil indices stay on the grid")
    }
}

/// `kappa / h^2` times the five-point Laplacian on the Darcy cells. Outer
/// sides use Dirichlet ghosts; the top side carries no flux term here, since
/// the interface flux enters through `B^T`.
pub(crate) fn darcy(grid: &MacGrid, params: &PhysicalParams, data: Option<ManufacturedFields>) -> Stencil {
    let n1 = grid.n1();
    let h = grid.h();
    let s = params.kappa / (h * h);
    let mut st = Stencil::new(grid.n(), data);
    for j in 0..n1 {
        for i in 0..n1 {
            let r = grid.darcy(i, j);
            let (x, y) = grid.darcy_center(i, j);
            let mut diag = 0.0;
            // left, right, bottom: neighbor or Dirichlet ghost at the side
            for (inside, ni, nj, bx, by) in [
                (i > 0, i.wrapping_sub(1), j, 0.0, y),
                (i + 1 < n1, i + 1, j, 1.0, y),
                (j > 0, i, j.wrapping_sub(1), x, -1.0),
            ] {
                if inside {
                    st.entry(r, grid.darcy(ni, nj), -s);
                    diag += s;
                } else {
                    diag += 2.0 * s;
                    st.known(r, -2.0 * s, |d| d.darcy_pressure(bx, by));
                }
            }
            if j + 1 < n1 {
                st.entry(r, grid.darcy(i, j + 1), -s);
                diag += s;
            }
            st.entry(r, r, diag);
        }
    }
    st
}

/// `-nu` times the vector Laplacian on the velocity faces, with interface
/// rows per `treatment`.
pub(crate) fn stokes(
    grid: &MacGrid,
    params: &PhysicalParams,
    treatment: InterfaceTreatment,
    data: Option<ManufacturedFields>,
) -> Stencil {
    let n1 = grid.n1();
    let h = grid.h();
    let s = params.nu / (h * h);
    let beta = params.slip();
    let mut st = Stencil::new(grid.m(), data);

    for j in 0..n1 {
        for i in 1..n1 {
            let r = grid.u_face(i, j);
            let (x, y) = grid.u_position(i, j);
            let mut diag = 4.0 * s;
            for (ni, bx) in [(i - 1, 0.0), (i + 1, 1.0)] {
                if (1..n1).contains(&ni) {
                    st.entry(r, grid.u_face(ni, j), -s);
                } else {
                    st.known(r, -s, |d| d.u(bx, y));
                }
            }
            if j + 1 < n1 {
                st.entry(r, grid.u_face(i, j + 1), -s);
            } else {
                diag += s;
                st.known(r, -2.0 * s, |d| d.u(x, 1.0));
            }
            if j > 0 {
                st.entry(r, grid.u_face(i, j - 1), -s);
            } else {
                match treatment {
                    InterfaceTreatment::Coupled => {
                        // ghost below y = 0 from the slip condition
                        let den = 2.0 * beta + h;
                        diag -= s * (2.0 * beta - h) / den;
                        let cv = s * 2.0 * beta / den;
                        st.entry(r, grid.v_face(i, 0), -cv);
                        st.entry(r, grid.v_face(i - 1, 0), cv);
                        st.known(r, -s * 2.0 * h / den, |d| d.slip_defect(x));
                    }
                    InterfaceTreatment::Dirichlet => {
                        diag += s;
                        st.known(r, -2.0 * s, |d| d.u(x, 0.0));
                    }
                }
            }
            st.entry(r, r, diag);
        }
    }

    for j in 0..n1 {
        for i in 0..n1 {
            let r = grid.v_face(i, j);
            let (x, y) = grid.v_position(i, j);
            if j == 0 && treatment == InterfaceTreatment::Coupled {
                // normal force balance, one-sided in y
                st.entry(r, r, 2.0 * s);
                st.entry(r, grid.v_face(i, 1), -2.0 * s);
                continue;
            }
            let mut diag = 4.0 * s;
            for (inside, ni, bx) in [(i > 0, i.wrapping_sub(1), 0.0), (i + 1 < n1, i + 1, 1.0)] {
                if inside {
                    st.entry(r, grid.v_face(ni, j), -s);
                } else {
                    diag += s;
                    st.known(r, -2.0 * s, |d| d.v(bx, y));
                }
            }
            if j + 1 < n1 {
                st.entry(r, grid.v_face(i, j + 1), -s);
            } else {
                st.known(r, -s, |d| d.v(x, 1.0));
            }
            if j > 0 {
                st.entry(r, grid.v_face(i, j - 1), -s);
            } else {
                st.known(r, -s, |d| d.v(x, -h));
            }
            st.entry(r, r, diag);
        }
    }
    st
}

/// `1/h` between each interface `v` face and the Darcy cell below it.
pub(crate) fn interface_b(grid: &MacGrid) -> CsrMatrix {
    let n1 = grid.n1();
    let inv_h = 1.0 / grid.h();
    let trip: Vec<_> = (0..n1).map(|i| (grid.v_face(i, 0), grid.darcy(i, n1 - 1), inv_h)).collect();
    CsrMatrix::from_triplets(grid.m(), grid.n(), &trip).expect("interface indices stay on the grid")
}

/// Negative discrete divergence on the Stokes cells.
pub(crate) fn divergence(grid: &MacGrid, data: Option<ManufacturedFields>) -> Stencil {
    let n1 = grid.n1();
    let inv_h = 1.0 / grid.h();
    let mut st = Stencil::new(grid.p(), data);
    for j in 0..n1 {
        for i in 0..n1 {
            let r = grid.stokes(i, j);
            let (x, y) = grid.stokes_center(i, j);
            if i > 0 {
                st.entry(r, grid.u_face(i, j), inv_h);
            } else {
                st.known(r, inv_h, |d| d.u(0.0, y));
            }
            if i + 1 < n1 {
                st.entry(r, grid.u_face(i + 1, j), -inv_h);
            } else {
                st.known(r, -inv_h, |d| d.u(1.0, y));
            }
            st.entry(r, grid.v_face(i, j), inv_h);
            if j + 1 < n1 {
                st.entry(r, grid.v_face(i, j + 1), -inv_h);
            } else {
                st.known(r, -inv_h, |d| d.v(x, 1.0));
            }
        }
    }
    st
}
