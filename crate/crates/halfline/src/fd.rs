//! Crank–Nicolson reference solver on `x_j = j·dx`, `j = 0..N`, with
//! `u_{N+1} = 0`. The Robin condition enters through a ghost node,
//! `u_{−1} = u_1 + (2dx/α)(u_0 − h)`, so row 0 of the Laplacian reads
//! `[(2dx/α − 2)u_0 + 2u_1]/dx² − 2h/(α·dx)`.
//!
//! Shares nothing with the transform-based path on purpose.

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid};
use crate::forcing::BoundaryData;
use crate::trajectory::{ModelParams, Trajectory};
use num_complex::Complex64 as C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const MIDPOINT_ITERATIONS: usize = 50;

#[derive(Clone, Debug)]
pub struct FdConfig {
    pub params: ModelParams,
    pub boundary: BoundaryData,
    pub dt: f64,
    /// Implicitness, ½ for Crank–Nicolson.
    pub theta: f64,
}

impl FdConfig {
    pub fn new(params: ModelParams, boundary: BoundaryData, dt: f64) -> Result<Self> {
        let cfg = FdConfig { params, boundary, dt, theta: 0.5 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta must lie in [1/2, 1], got {}", self.theta)));
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        self.params.grid()
    }

    pub fn dx(&self) -> f64 {
        self.grid().dx()
    }

    pub fn length(&self) -> f64 {
        self.grid().length
    }

    pub fn n(&self) -> usize {
        self.grid().n
    }
}

/// Tridiagonal operator on `j = 0..N`: `lo[j]·u_{j−1} + di[j]·u_j + up[j]·u_{j+1}`.
struct Tri {
    lo: Vec<f64>,
    di: Vec<f64>,
    up: Vec<f64>,
}

impl Tri {
    fn laplacian(m: usize, dx: f64, alpha: f64) -> Tri {
        let q = 1.0 / (dx * dx);
        let mut t = Tri { lo: vec![q; m], di: vec![-2.0 * q; m], up: vec![q; m] };
        t.lo[0] = 0.0;
        t.up[m - 1] = 0.0;
        t.di[0] = (2.0 * dx / alpha - 2.0) * q;
        t.up[0] = 2.0 * q;
        t
    }

    fn apply(&self, u: &[C64]) -> Vec<C64> {
        let m = u.len();
        (0..m)
            .map(|j| {
                let mut s = self.di[j] * u[j];
                if j > 0 {
                    s += self.lo[j] * u[j - 1];
                }
                if j + 1 < m {
                    s += self.up[j] * u[j + 1];
                }
                s
            })
            .collect()
    }
}

/// Thomas algorithm for `(a·I + b·T) x = r` with complex `a, b`.
fn solve_shifted(t: &Tri, a: C64, b: C64, r: &[C64]) -> Result<Vec<C64>> {
    let m = r.len();
    let mut cp = vec![C64::new(0.0, 0.0); m];
    let mut dp = vec![C64::new(0.0, 0.0); m];
    let mut piv = a + b * t.di[0];
    if piv.norm() < 1e-300 {
        return Err(Error::Numerical("zero pivot in tridiagonal solve at row 0".into()));
    }
    cp[0] = b * t.up[0] / piv;
    dp[0] = r[0] / piv;
    for j in 1..m {
        let l = b * t.lo[j];
        piv = a + b * t.di[j] - l * cp[j - 1];
        if piv.norm() < 1e-300 {
            return Err(Error::Numerical(format!("zero pivot in tridiagonal solve at row {j}")));
        }
        cp[j] = b * t.up[j] / piv;
        dp[j] = (r[j] - l * dp[j - 1]) / piv;
    }
    let mut x = dp;
    for j in (0..m - 1).rev() {
        let next = x[j + 1];
        x[j] -= cp[j] * next;
    }
    Ok(x)
}

fn to_field(g: Grid, t: f64, u: &[C64]) -> ComplexField {
    ComplexField { grid: g, values: u[1..].to_vec(), trace: u[0], time: t, repr: crate::field::Repr::Physical }
}

/// Theta-scheme trajectory on `[0, T]` with the source taken at the step
/// midpoint, snapshots every `stride` steps.
pub fn crank_nicolson_robin(cfg: &FdConfig, t_end: f64, stride: usize) -> Result<Trajectory> {
    cfg.validate()?;
    let steps = (t_end / cfg.dt).round();
    if !(t_end > 0.0) || (steps * cfg.dt - t_end).abs() > 1e-9 * t_end {
        return Err(Error::Config(format!("T = {t_end} must be a positive multiple of dt = {}", cfg.dt)));
    }
    let steps = steps as usize;
    let stride = stride.max(1);
    let g = cfg.grid();
    let (dx, dt, th) = (g.dx(), cfg.dt, cfg.theta);
    let alpha = cfg.params.alpha;
    let m = g.n + 1;
    let lap = Tri::laplacian(m, dx, alpha);
    let h = &cfg.boundary;
    // the ghost node's h contribution to row 0
    let bc = |t: f64| -2.0 / (alpha * dx) * h.h(t);

    let mut u: Vec<C64> = std::iter::once(cfg.params.u0.trace).chain(cfg.params.u0.values.iter().copied()).collect();
    let mut traj = Trajectory::new("crank-nicolson", cfg.params.clone(), h.clone(), dt);
    traj.push(0.0, to_field(g, 0.0, &u), ComplexField::zeros(g, 0.0));
    let nonlinear = cfg.params.lambda != C64::new(0.0, 0.0);
    let src = |v: &[C64]| -> Vec<C64> { v.iter().map(|&x| cfg.params.source_at(x)).collect() };

    // (i/dt + θ/2·A) u⁺ = (i/dt − (1−θ)/2·A) u − ½(θ b⁺ + (1−θ) b) + f
    let (lhs_a, lhs_b) = (I / dt, C64::new(0.5 * th, 0.0));
    for n in 0..steps {
        let t = n as f64 * dt;
        let au = lap.apply(&u);
        let mut base: Vec<C64> = u.iter().zip(&au).map(|(&v, &a)| I / dt * v - 0.5 * (1.0 - th) * a).collect();
        base[0] -= 0.5 * (th * bc(t + dt) + (1.0 - th) * bc(t));
        let next = if nonlinear {
            // source at the midpoint, iterated to a fixed point so that real
            // couplings conserve the discrete mass
            let mut prev = u.clone();
            let mut it = 0;
            loop {
                let mid: Vec<C64> = u.iter().zip(&prev).map(|(a, b)| 0.5 * (a + b)).collect();
                let f1 = src(&mid);
                let r: Vec<C64> = base.iter().zip(&f1).map(|(b, f)| b + f).collect();
                let cand = solve_shifted(&lap, lhs_a, lhs_b, &r)?;
                let change = cand.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                let scale = cand.iter().map(|a| a.norm()).fold(0.0, f64::max);
                prev = cand;
                it += 1;
                if change <= 1e-14 * scale.max(1e-300) {
                    break;
                }
                if it == MIDPOINT_ITERATIONS {
                    return Err(Error::Numerical(format!("midpoint iteration stalled at t = {t} (last change {change:.3e})")));
                }
            }
            prev
        } else {
            solve_shifted(&lap, lhs_a, lhs_b, &base)?
        };
        u = next;
        if (n + 1) % stride == 0 || n + 1 == steps {
            let t1 = (n + 1) as f64 * dt;
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite values at t = {t1}")));
            }
            traj.push(t1, to_field(g, t1, &u), ComplexField::zeros(g, t1));
        }
    }
    Ok(traj)
}

/// `|u(t,0) + α∂x u(t,0) − h(t)|` per snapshot, with the one-sided
/// second-order slope `(−3u_0 + 4u_1 − u_2)/(2dx)`.
pub fn robin_residual(traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
    let g = traj.grid();
    if g.n < 2 {
        return Err(Error::Usage("need at least two nodes next to the wall".into()));
    }
    let alpha = traj.params.alpha;
    Ok(traj
        .snapshots
        .iter()
        .map(|s| {
            let u = &s.u;
            let slope = (-3.0 * u.trace + 4.0 * u.values[0] - u.values[1]) / (2.0 * g.dx());
            (s.t, (u.trace + alpha * slope - traj.boundary.h(s.t)).norm())
        })
        .collect())
}
