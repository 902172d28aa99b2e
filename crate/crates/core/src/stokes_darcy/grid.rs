use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Staggered grid on the Darcy square `[0,1] x [-1,0]` stacked under the
/// Stokes square `[0,1] x [0,1]`, `n1` cells per direction in each.
///
/// Unknown numbering (row-major, bottom row first):
/// * Darcy pressure at cell centers, `j * n1 + i`;
/// * Stokes `u` on interior vertical faces `x = i h`, `i = 1..n1`, then `v`
///   on horizontal faces `y = j h`, `j = 0..n1`, with the interface row
///   `j = 0` first;
/// * Stokes pressure at cell centers, `j * n1 + i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacGrid {
    n1: usize,
}

impl MacGrid {
    pub fn new(n1: usize) -> Result<Self> {
        if n1 < 2 {
            return Err(Error::PreconditionViolation(format!("the MAC grid needs n1 >= 2, got {n1}")));
        }
        Ok(Self { n1 })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n1 as f64
    }

    /// Number of Darcy pressures, `n1^2`.
    pub fn n(&self) -> usize {
        self.n1 * self.n1
    }

    /// Number of Stokes velocities, `2 n1^2 - n1`.
    pub fn m(&self) -> usize {
        self.num_u() + self.n1 * self.n1
    }

    /// Number of Stokes pressures, `n1^2`.
    pub fn p(&self) -> usize {
        self.n1 * self.n1
    }

    pub fn total(&self) -> usize {
        self.n() + self.m() + self.p()
    }

    pub fn num_u(&self) -> usize {
        self.n1 * (self.n1 - 1)
    }

    pub fn darcy(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n1 && j < self.n1);
        j * self.n1 + i
    }

    /// `u` face at `x = i h`, `1 <= i < n1`.
    pub fn u_face(&self, i: usize, j: usize) -> usize {
        debug_assert!((1..self.n1).contains(&i) && j < self.n1);
        j * (self.n1 - 1) + (i - 1)
    }

    /// `v` face at `y = j h`, `j < n1`.
    pub fn v_face(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n1 && j < self.n1);
        self.num_u() + j * self.n1 + i
    }

    pub fn stokes(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n1 && j < self.n1);
        j * self.n1 + i
    }

    /// Velocity indices of the `v` faces on `y = 0`.
    pub fn interface_faces(&self) -> Range<usize> {
        self.num_u()..self.num_u() + self.n1
    }

    /// Darcy indices of the top cell row.
    pub fn top_darcy_cells(&self) -> Range<usize> {
        self.n() - self.n1..self.n()
    }

    /// Stokes indices of the bottom cell row.
    pub fn bottom_stokes_cells(&self) -> Range<usize> {
        0..self.n1
    }

    pub fn darcy_center(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        ((i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h)
    }

    pub fn u_position(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        (i as f64 * h, (j as f64 + 0.5) * h)
    }

    pub fn v_position(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        ((i as f64 + 0.5) * h, j as f64 * h)
    }

    pub fn stokes_center(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    /// Velocity permutation (`perm[new] = old`) listing, for each grid row
    /// `j`, its `u` faces and then its `v` faces.
    pub fn interleaved_velocity_ordering(&self) -> Vec<usize> {
        let n1 = self.n1;
        let mut perm = Vec::with_capacity(self.m());
        for j in 0..n1 {
            perm.extend((1..n1).map(|i| self.u_face(i, j)));
            perm.extend((0..n1).map(|i| self.v_face(i, j)));
        }
        perm
    }
}

/// Hydraulic constant, viscosity and slip coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub kappa: f64,
    pub nu: f64,
    pub alpha: f64,
}

impl PhysicalParams {
    /// Slip coefficient equal to the viscosity.
    pub fn new(kappa: f64, nu: f64) -> Self {
        Self { kappa, nu, alpha: nu }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.kappa) && ok(self.nu) && ok(self.alpha)) {
            return Err(Error::PreconditionViolation(format!(
                "kappa, nu and alpha must be positive, got {}, {}, {}",
                self.kappa, self.nu, self.alpha
            )));
        }
        Ok(())
    }

    /// `nu / alpha`, the slip length in the interface condition.
    pub fn slip(&self) -> f64 {
        self.nu / self.alpha
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::new(1.0, 1.0)
    }
}

/// Fields `u = eta'(y) cos x`, `v = eta(y) sin x`, `p_d = 0`,
/// `p_s = e^y sin x` with
/// `eta(y) = -kappa - y / (2 nu) + (-alpha / (4 nu^2) + kappa / 2) y^2`.
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedFields {
    params: PhysicalParams,
}

impl ManufacturedFields {
    pub fn new(params: PhysicalParams) -> Self {
        Self { params }
    }

    fn quad(&self) -> f64 {
        let PhysicalParams { kappa, nu, alpha } = self.params;
        -alpha / (4.0 * nu * nu) + kappa / 2.0
    }

    pub fn eta(&self, y: f64) -> f64 {
        let PhysicalParams { kappa, nu, .. } = self.params;
        -kappa - y / (2.0 * nu) + self.quad() * y * y
    }

    pub fn eta_prime(&self, y: f64) -> f64 {
        -1.0 / (2.0 * self.params.nu) + 2.0 * self.quad() * y
    }

    pub fn eta_second(&self) -> f64 {
        2.0 * self.quad()
    }

    pub fn u(&self, x: f64, y: f64) -> f64 {
        self.eta_prime(y) * x.cos()
    }

    pub fn v(&self, x: f64, y: f64) -> f64 {
        self.eta(y) * x.sin()
    }

    pub fn darcy_pressure(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }

    pub fn stokes_pressure(&self, x: f64, y: f64) -> f64 {
        y.exp() * x.sin()
    }

    /// `x` component of `-nu lap u + grad p_s`.
    pub fn force_u(&self, x: f64, y: f64) -> f64 {
        (self.params.nu * self.eta_prime(y) + y.exp()) * x.cos()
    }

    /// `y` component of `-nu lap u + grad p_s`.
    pub fn force_v(&self, x: f64, y: f64) -> f64 {
        (self.params.nu * (self.eta(y) - self.eta_second()) + y.exp()) * x.sin()
    }

    /// `-div(kappa grad p_d)`.
    pub fn darcy_source(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }

    /// `v + kappa dp_d/dy` on `y = 0`, zero when mass is conserved.
    pub fn mass_defect(&self, x: f64) -> f64 {
        self.v(x, 0.0)
    }

    /// `p_d - p_s + 2 nu dv/dy` on `y = 0`, zero when normal forces balance.
    pub fn normal_force_defect(&self, x: f64) -> f64 {
        self.darcy_pressure(x, 0.0) - self.stokes_pressure(x, 0.0) + 2.0 * self.params.nu * self.eta_prime(0.0) * x.sin()
    }

    /// `u - (nu / alpha)(du/dy + dv/dx)` on `y = 0`.
    pub fn slip_defect(&self, x: f64) -> f64 {
        let du_dy = self.eta_second() * x.cos();
        let dv_dx = self.eta(0.0) * x.cos();
        self.u(x, 0.0) - self.params.slip() * (du_dy + dv_dx)
    }
}
