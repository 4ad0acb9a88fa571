//! Model parameters and the solver-agnostic trajectory format.

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid};
use crate::forcing::BoundaryData;
use num_complex::Complex64 as C64;

/// `i∂t u + ½∂x²u = λ|u|^{p−1}u` on `x > 0` with `u + α∂x u = h` at `x = 0`.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub lambda: C64,
    pub power: f64,
    pub alpha: f64,
    pub u0: ComplexField,
}

/// Corner compatibility regimes. Theorems 2 and 4 assume `u₀(0) = 0`;
/// Theorem 7 assumes `∂x u₀(0) = h(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Compatibility {
    ZeroTrace,
    ZeroSlope,
}

impl ModelParams {
    pub fn new(lambda: C64, power: f64, alpha: f64, u0: ComplexField) -> Result<Self> {
        if !(power >= 2.0) {
            return Err(Error::Config(format!("power p must be at least 2, got {power}")));
        }
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::Config(format!("Robin coefficient must be finite and nonzero, got {alpha}")));
        }
        u0.expect(crate::field::Repr::Physical)?;
        let scale = u0.linf_norm().max(1e-300);
        if u0.trace.norm() > 1e-8 * scale.max(1.0) {
            return Err(Error::Config(format!("initial datum must vanish at x = 0, got |u₀(0)| = {:.3e}", u0.trace.norm())));
        }
        Ok(ModelParams { lambda, power, alpha, u0 })
    }

    pub fn grid(&self) -> Grid {
        self.u0.grid
    }

    /// `λ|u|^{p−1}u` at one point.
    pub fn source_at(&self, u: C64) -> C64 {
        let m = u.norm();
        if m == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let k = if self.power == 3.0 { m * m } else { m.powf(self.power - 1.0) };
        self.lambda * k * u
    }

    /// λ real and p = 3.
    pub fn theorem4_regime(&self) -> bool {
        self.lambda.im == 0.0 && self.power == 3.0
    }

    /// Size of the corner mismatch for the chosen regime. The slope uses a
    /// one-sided second-order difference.
    pub fn compatibility_defect(&self, h: &BoundaryData, regime: Compatibility) -> f64 {
        let g = self.u0.grid;
        let v = &self.u0.values;
        match regime {
            Compatibility::ZeroTrace => self.u0.trace.norm().max(h.h(0.0).norm()),
            Compatibility::ZeroSlope => {
                let slope = (-3.0 * self.u0.trace + 4.0 * v[0] - v[1]) / (2.0 * g.dx());
                slope.norm().max(h.h(0.0).norm())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub u: ComplexField,
    pub w: ComplexField,
    pub z: ComplexField,
    /// Sine coefficients of `Bw` as carried by a spectral solver.
    pub coefficients: Option<Vec<C64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Stopped early; the trajectory ends at the last healthy snapshot.
    Aborted { t: f64, reason: String },
}

/// Snapshots of `u = w + z`. Solvers that do not split (the finite-difference
/// oracle) store the full solution in `w` and zero in `z`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub solver: String,
    pub params: ModelParams,
    pub boundary: BoundaryData,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
    pub status: RunStatus,
    /// Largest fraction of mass found in the last 10% of the box.
    pub max_tail_fraction: f64,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn new(solver: &str, params: ModelParams, boundary: BoundaryData, dt: f64) -> Self {
        Trajectory {
            solver: solver.into(),
            params,
            boundary,
            dt,
            snapshots: Vec::new(),
            status: RunStatus::Completed,
            max_tail_fraction: 0.0,
            warnings: Vec::new(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.params.grid()
    }

    pub fn push(&mut self, t: f64, w: ComplexField, z: ComplexField) {
        let mut u = w.add(&z);
        u.time = t;
        self.max_tail_fraction = self.max_tail_fraction.max(u.tail_mass_fraction());
        self.snapshots.push(Snapshot { t, u, w, z, coefficients: None });
    }

    pub fn push_spectral(&mut self, t: f64, w: ComplexField, z: ComplexField, coefficients: Vec<C64>) {
        self.push(t, w, z);
        self.snapshots.last_mut().unwrap().coefficients = Some(coefficients);
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// Truncation monitor: more than 10% of the mass reached the far end.
    pub fn truncation_contaminated(&self) -> bool {
        self.max_tail_fraction > 0.1
    }

    /// `max_i ‖u_i − (w_i + z_i)‖∞`.
    pub fn splitting_error(&self) -> f64 {
        self.snapshots.iter().map(|s| s.u.sub(&s.w.add(&s.z)).linf_norm()).fold(0.0, f64::max)
    }

    /// Index of the snapshot closest to `t`.
    pub fn nearest(&self, t: f64) -> Option<usize> {
        (0..self.snapshots.len()).min_by(|&a, &b| (self.snapshots[a].t - t).abs().total_cmp(&(self.snapshots[b].t - t).abs()))
    }
}
