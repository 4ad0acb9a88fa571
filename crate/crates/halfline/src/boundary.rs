//! The boundary-driven linear solution `z`: `i z_t + ½ z_xx = 0`, `z(0) = 0`,
//! `Bz(t,0) = h(t)`, written as `z = B⁻¹v` where `v` solves the Dirichlet
//! problem `v(t,0) = h(t)`.
//!
//! Two independent routes to `v`:
//! * [`z_exact`]: the similarity integral
//!   `v(t,x) = (2/√(2iπ)) ∫_{x/√t}^∞ e^{iy²/2} h(t − x²/y²) dy`, per node;
//! * [`z_spectral`]: per-wavenumber time convolution
//!   `v̂(p,t) = (i/2)√(2/π)·p ∫₀ᵗ e^{−ip²τ/2} h(t−τ) dτ`, with the slowly
//!   decaying part carried by a two-term sinh lift so the remainder series
//!   converges fast.
//!
//! Also: the boundary traces, the whole-line kernel
//! `I(s,x) = ∫ e^{ipx} e^{−ip²s/2} p/(1+iαp) dp` with its stationary-phase
//! split, and `x·z` through the integrated-by-parts moment formula.

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid, Repr};
use crate::forcing::BoundaryData;
use crate::quad::{integrate, integrate_panels, Tol};
use crate::spectral::{self, apply_b_inverse_with, cosine_synthesis, lift_mus, robin_synthesis, robin_synthesis_derivative, Jets, Lift, OperatorParams};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn require_positive(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be positive, got {t}")))
    }
}

// ---------------------------------------------------------------------------
// Filon quadrature for ∫ e^{−iω(t−s)} q(s) ds

/// Weights for `∫₀^Δ e^{−iω(Δ−s)} q(s) ds ≈ Δ·(w₀q(0) + w₁q(Δ/2) + w₂q(Δ))`
/// (quadratic interpolation of `q`, exact oscillatory moments), `θ = ωΔ`.
pub fn filon_weights(theta: f64) -> [C64; 3] {
    let c = C64::new(0.0, -theta);
    // E_j = ∫₀¹ v^j e^{cv} dv
    let (e0, e1, e2) = if theta.abs() < 0.5 {
        let mut e = [ZERO; 3];
        let mut term = C64::new(1.0, 0.0);
        for n in 0..40 {
            for (j, ej) in e.iter_mut().enumerate() {
                *ej += term / (n + j + 1) as f64;
            }
            term = term * c / (n + 1) as f64;
            if term.norm() < 1e-18 {
                break;
            }
        }
        (e[0], e[1], e[2])
    } else {
        let ec = c.exp();
        let e0 = (ec - 1.0) / c;
        let e1 = (ec - e0) / c;
        let e2 = (ec - 2.0 * e1) / c;
        (e0, e1, e2)
    };
    let m0 = e0;
    let m1 = e0 - e1;
    let m2 = e0 - 2.0 * e1 + e2;
    [m0 - 3.0 * m1 + 2.0 * m2, 4.0 * m1 - 4.0 * m2, -m1 + 2.0 * m2]
}

/// Running `Q_m(ω_k, t) = ∫₀ᵗ e^{−iω_k(t−s)} q_m(s) ds` for several sources.
#[derive(Clone, Debug)]
pub struct FilonAccumulator {
    omegas: Vec<f64>,
    dt: f64,
    decay: Vec<C64>,
    weights: Vec<[C64; 3]>,
    pub acc: Vec<Vec<C64>>,
}

impl FilonAccumulator {
    pub fn new(omegas: Vec<f64>, sources: usize) -> Self {
        let n = omegas.len();
        FilonAccumulator { omegas, dt: f64::NAN, decay: vec![], weights: vec![], acc: vec![vec![ZERO; n]; sources] }
    }

    /// Advance by `dt` given each source at the start, midpoint and end.
    pub fn step(&mut self, dt: f64, q: &[[C64; 3]]) {
        if dt != self.dt {
            self.dt = dt;
            self.decay = self.omegas.iter().map(|&w| C64::from_polar(1.0, -w * dt)).collect();
            self.weights = self.omegas.iter().map(|&w| filon_weights(w * dt)).collect();
        }
        for (acc, qm) in self.acc.iter_mut().zip(q) {
            for k in 0..acc.len() {
                let w = &self.weights[k];
                acc[k] = acc[k] * self.decay[k] + dt * (w[0] * qm[0] + w[1] * qm[1] + w[2] * qm[2]);
            }
        }
    }
}

/// `∫₀ᵗ e^{−iω(t−s)} q(s) ds` for each `ω`, with uniform Filon steps halved
/// until two successive results agree to `rel_tol`.
pub fn filon_transform<F: Fn(f64) -> C64>(q: F, t: f64, omegas: &[f64], rel_tol: f64) -> Result<Vec<C64>> {
    let sweep = |n: usize| {
        let dt = t / n as f64;
        let mut acc = FilonAccumulator::new(omegas.to_vec(), 1);
        let mut q0 = q(0.0);
        for i in 0..n {
            let s = i as f64 * dt;
            let q1 = q(s + dt);
            acc.step(dt, &[[q0, q(s + 0.5 * dt), q1]]);
            q0 = q1;
        }
        acc.acc.pop().unwrap()
    };
    let mut n = ((t / 0.02).ceil() as usize).max(16);
    let mut prev = sweep(n);
    let mut last_diff = f64::INFINITY;
    loop {
        n *= 2;
        let next = sweep(n);
        let scale = next.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        let diff = next.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if diff <= rel_tol * scale || scale == 1e-300 {
            return Ok(next);
        }
        if settled_at_roundoff(diff, last_diff, rel_tol * scale) {
            return Ok(next);
        }
        if n > 1 << 22 {
            return Err(Error::Numerical(format!("Filon time quadrature did not settle: diff {diff:.3e}, scale {scale:.3e}, steps {n}")));
        }
        last_diff = diff;
        prev = next;
    }
}

/// Step halving has stopped paying off: the difference no longer shrinks and
/// is within a thousandfold of the target, i.e. accumulated roundoff.
fn settled_at_roundoff(diff: f64, last_diff: f64, target: f64) -> bool {
    diff > 0.5 * last_diff && diff <= 1e3 * target
}

// ---------------------------------------------------------------------------
// spectral route

/// Two-term time-dependent lift `Σ a_m(t) g_{μ_m}(x)` matching `v(t,0) = h`
/// and `v_xx(t,0) = −2i h'`.
#[derive(Clone, Debug)]
struct TimeLift {
    mus: [f64; 2],
}

impl TimeLift {
    fn new(alpha: f64) -> Self {
        let m = lift_mus(2, Some(alpha));
        TimeLift { mus: [m[0], m[1]] }
    }

    /// Amplitudes and their time derivatives.
    fn amps(&self, j: [C64; 3]) -> ([C64; 2], [C64; 2]) {
        let (sa, sb) = (self.mus[0].powi(2), self.mus[1].powi(2));
        let b = (-2.0 * I * j[1] - sa * j[0]) / (sb - sa);
        let db = (-2.0 * I * j[2] - sa * j[1]) / (sb - sa);
        ([j[0] - b, b], [j[1] - db, db])
    }

    /// Source of the remainder equation: `q_m = i a_m' + ½ μ_m² a_m`.
    fn sources(&self, j: [C64; 3]) -> [C64; 2] {
        let (a, da) = self.amps(j);
        [I * da[0] + 0.5 * self.mus[0].powi(2) * a[0], I * da[1] + 0.5 * self.mus[1].powi(2) * a[1]]
    }

    fn lift(&self, length: f64, j: [C64; 3]) -> Lift {
        Lift { length, mus: self.mus.to_vec(), amps: self.amps(j).0.to_vec() }
    }
}

/// Incremental evaluation of `z(t)` on a grid, advanced in time with Filon
/// steps. The solver keeps one of these alongside the `w` modes.
#[derive(Clone, Debug)]
pub struct ZStepper {
    h: BoundaryData,
    grid: Grid,
    alpha: f64,
    lift: TimeLift,
    ghat: [Vec<f64>; 2],
    omegas: Vec<f64>,
    filon: FilonAccumulator,
    rhat0: Vec<C64>,
    t: f64,
}

impl ZStepper {
    pub fn new(h: &BoundaryData, grid: Grid, op: OperatorParams) -> Self {
        let lift = TimeLift::new(op.alpha);
        let c = (2.0 / PI).sqrt();
        let ghat = lift.mus.map(|mu| (1..=grid.n).map(|k| c * grid.p(k) / (grid.p(k).powi(2) + mu * mu)).collect::<Vec<_>>());
        let omegas: Vec<f64> = (1..=grid.n).map(|k| 0.5 * grid.p(k).powi(2)).collect();
        let (a0, _) = lift.amps(h.jet(0.0));
        let rhat0 = (0..grid.n).map(|k| -(a0[0] * ghat[0][k] + a0[1] * ghat[1][k])).collect();
        ZStepper { h: h.clone(), grid, alpha: op.alpha, lift, ghat, filon: FilonAccumulator::new(omegas.clone(), 2), omegas, rhat0, t: 0.0 }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn advance(&mut self, dt: f64) {
        let t = self.t;
        let s0 = self.lift.sources(self.h.jet(t));
        let s1 = self.lift.sources(self.h.jet(t + 0.5 * dt));
        let s2 = self.lift.sources(self.h.jet(t + dt));
        self.filon.step(dt, &[[s0[0], s1[0], s2[0]], [s0[1], s1[1], s2[1]]]);
        self.t += dt;
    }

    /// Sine coefficients of the remainder `v − lift`.
    pub fn remainder_coefficients(&self) -> Vec<C64> {
        (0..self.grid.n)
            .map(|k| {
                C64::from_polar(1.0, -self.omegas[k] * self.t) * self.rhat0[k]
                    + I * (self.ghat[0][k] * self.filon.acc[0][k] + self.ghat[1][k] * self.filon.acc[1][k])
            })
            .collect()
    }

    /// Continuum sine coefficients of `v = Bz`.
    pub fn v_coefficients(&self) -> Vec<C64> {
        let (a, _) = self.lift.amps(self.h.jet(self.t));
        self.remainder_coefficients().into_iter().enumerate().map(|(k, r)| r + a[0] * self.ghat[0][k] + a[1] * self.ghat[1][k]).collect()
    }

    pub fn lift_at_time(&self) -> Lift {
        self.lift.lift(self.grid.length, self.h.jet(self.t))
    }

    pub fn field(&self) -> ComplexField {
        let g = self.grid;
        let lift = self.lift_at_time();
        let (mut vals, mut tr) = robin_synthesis(&self.remainder_coefficients(), &g, self.alpha);
        for (j, v) in vals.iter_mut().enumerate() {
            *v += lift.binv(self.alpha, g.x(j + 1));
        }
        tr += lift.binv(self.alpha, 0.0);
        ComplexField { grid: g, values: vals, trace: tr, time: self.t, repr: Repr::Physical }
    }

    pub fn derivative_field(&self) -> ComplexField {
        let g = self.grid;
        let lift = self.lift_at_time();
        let (mut vals, mut tr) = robin_synthesis_derivative(&self.remainder_coefficients(), &g, self.alpha);
        for (j, v) in vals.iter_mut().enumerate() {
            *v += lift.binv_deriv(self.alpha, g.x(j + 1));
        }
        tr += lift.binv_deriv(self.alpha, 0.0);
        ComplexField { grid: g, values: vals, trace: tr, time: self.t, repr: Repr::Physical }
    }
}

/// `z(t)` from the spectral time-convolution route, with uniform Filon steps
/// halved until the coefficients settle.
pub fn z_spectral(h: &BoundaryData, t: f64, g: Grid, op: OperatorParams) -> Result<ComplexField> {
    require_positive(t)?;
    if h.is_zero() {
        return Ok(ComplexField::zeros(g, t));
    }
    let run = |n: usize| {
        let mut z = ZStepper::new(h, g, op);
        let dt = t / n as f64;
        for _ in 0..n {
            z.advance(dt);
        }
        z
    };
    let mut n = ((t / 0.01).ceil() as usize).max(32);
    let mut prev = run(n).v_coefficients();
    let mut last_diff = f64::INFINITY;
    loop {
        n *= 2;
        let z = run(n);
        let next = z.v_coefficients();
        let scale = next.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = next.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if diff <= 1e-11 * scale || settled_at_roundoff(diff, last_diff, 1e-11 * scale) {
            let mut f = z.field();
            f.time = t;
            return Ok(f);
        }
        if n > 1 << 22 {
            return Err(Error::Numerical(format!("z_spectral time stepping did not settle (diff {diff:.3e})")));
        }
        last_diff = diff;
        prev = next;
    }
}

// ---------------------------------------------------------------------------
// similarity-integral route

const Y_TAIL: f64 = 32.0;
const S_BREAKS: [f64; 16] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0];

/// `∫_Y^∞ e^{iy²/2} q(y) dy` by three terms of repeated integration by parts,
/// `q(y) = h(t − x²/y²)`.
fn fresnel_tail(h: &BoundaryData, t: f64, x: f64, y: f64) -> C64 {
    // at y = x/√t rounding can push s below zero and lose the corner jet
    let s = (t - x * x / (y * y)).max(0.0);
    let [q0, h1, h2] = h.jet(s);
    let s1 = 2.0 * x * x / y.powi(3);
    let s2 = -6.0 * x * x / y.powi(4);
    let q1 = h1 * s1;
    let q2 = h2 * s1 * s1 + h1 * s2;
    let l1 = -I * q1 / y + I * q0 / (y * y);
    let l2 = -q2 / (y * y) + 3.0 * q1 / y.powi(3) - 3.0 * q0 / y.powi(4);
    -C64::from_polar(1.0, 0.5 * y * y) / (I * y) * (q0 - l1 + l2)
}

fn h_scale(h: &BoundaryData, t: f64) -> f64 {
    (0..=64).map(|i| h.h(t * i as f64 / 64.0).norm()).fold(0.0, f64::max)
}

/// Dirichlet solution `v(t,x)` with `v(t,0) = h(t)` and zero initial data.
pub fn dirichlet_solution_at(h: &BoundaryData, t: f64, x: f64, tol: Tol) -> Result<C64> {
    require_positive(t)?;
    if x <= 0.0 {
        return Ok(h.h(t));
    }
    let pref = 2.0 / (2.0 * PI * I).sqrt();
    let a = x / t.sqrt();
    if a >= Y_TAIL {
        return Ok(pref * fresnel_tail(h, t, x, a));
    }
    let mut breaks: Vec<f64> = (0..).map(|m| (a * a + PI * m as f64).sqrt()).take_while(|&y| y < Y_TAIL).collect();
    breaks.extend(S_BREAKS.iter().filter(|&&s| s < t).map(|&s| x / (t - s).sqrt()).filter(|&y| y > a && y < Y_TAIL));
    breaks.push(Y_TAIL);
    breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
    breaks.dedup_by(|p, q| (*p - *q).abs() < 1e-12);
    let mut f = |y: f64| C64::from_polar(1.0, 0.5 * y * y) * h.h(t - x * x / (y * y));
    let r = integrate_panels(&mut f, &breaks, tol);
    if !r.converged {
        return Err(Error::Numerical(format!("similarity integral at x = {x}, t = {t}: error estimate {:.3e} after {} intervals", r.error, r.intervals)));
    }
    Ok(pref * (r.value + fresnel_tail(h, t, x, Y_TAIL)))
}

/// `z(t)` from the similarity integral evaluated at every node, then `B⁻¹`
/// with the exact boundary jets of `v`.
pub fn z_exact(h: &BoundaryData, t: f64, g: Grid, op: OperatorParams) -> Result<ComplexField> {
    require_positive(t)?;
    if h.is_zero() {
        return Ok(ComplexField::zeros(g, t));
    }
    let v = dirichlet_field(h, t, g)?;
    apply_b_inverse_with(&v, op, Jets::new(h.dirichlet_jets(t).to_vec()))
}

/// The Dirichlet solution `v = Bz` sampled on the grid.
pub fn dirichlet_field(h: &BoundaryData, t: f64, g: Grid) -> Result<ComplexField> {
    require_positive(t)?;
    let scale = h_scale(h, t).max(1e-300);
    let tol = Tol { abs: 1e-13 * scale, rel: 1e-11, max_intervals: 20_000 };
    let values: Result<Vec<C64>> = (1..=g.n).into_par_iter().map(|j| dirichlet_solution_at(h, t, g.x(j), tol)).collect();
    Ok(ComplexField { grid: g, values: values?, trace: h.h(t), time: t, repr: Repr::Physical })
}

// ---------------------------------------------------------------------------
// traces

/// `E(c) = ∫₀^∞ e^{−y} e^{icy²} dy`, on the rotated ray `y = r e^{iπ/4}`.
pub fn damped_fresnel(c: f64) -> C64 {
    let w = C64::from_polar(1.0, PI / 4.0);
    let r_max = if c > 1e-12 { (-(0.5f64.sqrt()) + (0.5 + 4.0 * c * 45.0).sqrt()) / (2.0 * c) } else { 45.0 * 2f64.sqrt() };
    let r = integrate(|r| (-c * r * r - w * r).exp(), 0.0, r_max, Tol::new(1e-16, 1e-14));
    w * r.value
}

/// `∫₀^∞ e^{−ip²τ/2} p²/(1+α²p²) dp`
fn k_even(tau: f64, alpha: f64) -> C64 {
    (PI / (2.0 * I * tau)).sqrt() * (1.0 - damped_fresnel(alpha * alpha / (2.0 * tau))) / (alpha * alpha)
}

/// `∫₀^∞ e^{−ip²τ/2} /(1+α²p²) dp`
fn k_flat(tau: f64, alpha: f64) -> C64 {
    (PI / (2.0 * I * tau)).sqrt() * damped_fresnel(alpha * alpha / (2.0 * tau))
}

/// `∫₀ᵗ f(t−τ) k(τ) dτ` with `τ = σ²` to absorb the `τ^{−1/2}` endpoint.
fn sigma_convolve<F: Fn(f64) -> C64, K: Fn(f64) -> C64>(f: F, k: K, t: f64) -> Result<C64> {
    let st = t.sqrt();
    let mut breaks: Vec<f64> = (0..=32).map(|i| st * i as f64 / 32.0).collect();
    breaks.extend(S_BREAKS.iter().filter(|&&s| s < t).map(|&s| (t - s).sqrt()));
    breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
    breaks.dedup_by(|p, q| (*p - *q).abs() < 1e-12);
    let mut g = |sig: f64| {
        if sig == 0.0 {
            // k(σ²)·2σ has a finite limit; nudge off the endpoint
            let s = 1e-300f64.max(1e-12 * st);
            return f(t - s * s) * k(s * s) * 2.0 * s;
        }
        f(t - sig * sig) * k(sig * sig) * 2.0 * sig
    };
    let r = integrate_panels(&mut g, &breaks, Tol { abs: 1e-14, rel: 1e-11, max_intervals: 4000 });
    if !r.converged {
        return Err(Error::Numerical(format!("trace convolution at t = {t}: error {:.3e}", r.error)));
    }
    Ok(r.value)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Traces {
    pub z: C64,
    pub dx: C64,
    pub dt: C64,
}

/// `(z(t,0), ∂x z(t,0), ∂t z(t,0))` from half-line convolution kernels:
/// `z = −(iα/π)∫h(t−τ)k₀(τ)dτ`, `∂t z = −(iα/π)∫h'(t−τ)k₀(τ)dτ`,
/// `∂x z = (1/|α| + 1/α)h − (2/π)∫h'(t−τ)k₁(τ)dτ`, where
/// `k₀ = ∫₀^∞ e^{−ip²τ/2} p²/(1+α²p²) dp` and `k₁` has `1/(1+α²p²)`.
pub fn z_traces(h: &BoundaryData, t: f64, op: OperatorParams) -> Result<Traces> {
    require_positive(t)?;
    if h.is_zero() {
        return Ok(Traces { z: ZERO, dx: ZERO, dt: ZERO });
    }
    let a = op.alpha;
    let c = -I * a / PI;
    let z = c * sigma_convolve(|s| h.h(s), |tau| k_even(tau, a), t)?;
    let dt = c * sigma_convolve(|s| h.dh(s), |tau| k_even(tau, a), t)?;
    let dx = h.h(t) * (1.0 / a.abs() + 1.0 / a) - 2.0 / PI * sigma_convolve(|s| h.dh(s), |tau| k_flat(tau, a), t)?;
    Ok(Traces { z, dx, dt })
}

// ---------------------------------------------------------------------------
// whole-line kernel

/// `I(s,x) = ∫_R e^{ipx} e^{−ip²s/2} p/(1+iαp) dp` split into its
/// stationary-phase leading term and the remainder `I₁`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSplit {
    pub s: f64,
    pub x: f64,
    pub leading: C64,
    pub remainder: C64,
}

impl KernelSplit {
    pub fn full(&self) -> C64 {
        self.leading + self.remainder
    }
}

fn kernel_amp(p: C64, alpha: f64) -> C64 {
    p / (1.0 + I * alpha * p)
}

/// `√(2π/(is))·e^{ix²/2s}·F(x/s)` with `F(p) = p/(1+iαp)`.
pub fn kernel_leading(s: f64, x: f64, alpha: f64) -> C64 {
    (2.0 * PI / (I * s)).sqrt() * C64::from_polar(1.0, x * x / (2.0 * s)) * kernel_amp(C64::new(x / s, 0.0), alpha)
}

/// Full kernel split. The remainder is `e^{ix²/2s}∫e^{−isq²/2}[F(x/s+q) − F(x/s)]dq`
/// taken along a descent line `q = r e^{iθ}`, `θ ∈ (−π/2, 0)`, plus the pole
/// of `F` at `p = i/α` when the rotation from the real axis sweeps across it.
/// `θ` is picked to keep the line away from the pole.
pub fn kernel_i(s: f64, x: f64, alpha: f64) -> Result<KernelSplit> {
    require_positive(s)?;
    if alpha == 0.0 {
        return Err(Error::Config("kernel needs α ≠ 0".into()));
    }
    let ps = x / s;
    let f0 = kernel_amp(C64::new(ps, 0.0), alpha);
    let qp = I / alpha - ps;
    let th = [-0.25 * PI, -0.125 * PI, -0.375 * PI]
        .into_iter()
        .max_by(|a, b| {
            let da = (qp * C64::from_polar(1.0, -a)).im.abs();
            let db = (qp * C64::from_polar(1.0, -b)).im.abs();
            da.total_cmp(&db)
        })
        .unwrap();
    let w = C64::from_polar(1.0, th);
    // |e^{−isq²/2}| = e^{−s r² sin(−2θ)/2}
    let damp = 0.5 * s * (-2.0 * th).sin();
    let r_max = (45.0 / damp).sqrt();
    let mut g = |r: f64| (-I * 0.5 * s * (w * w) * r * r).exp() * (kernel_amp(ps + w * r, alpha) - f0);
    let q = integrate_panels(&mut g, &[-r_max, -0.5 * r_max, 0.0, 0.5 * r_max, r_max], Tol::new(1e-15, 1e-13));
    if !q.converged {
        return Err(Error::Numerical(format!("kernel quadrature at s = {s}, x = {x}: error {:.3e}", q.error)));
    }
    let phase = C64::from_polar(1.0, x * x / (2.0 * s));
    let mut rem = phase * w * q.value;
    let arg = qp.arg();
    let res = (-x / alpha).exp() * C64::from_polar(1.0, s / (2.0 * alpha * alpha)) / (alpha * alpha);
    if arg > PI + th && arg < PI {
        rem += 2.0 * PI * I * res;
    } else if arg < 0.0 && arg > th {
        rem -= 2.0 * PI * I * res;
    }
    Ok(KernelSplit { s, x, leading: kernel_leading(s, x, alpha), remainder: rem })
}

// ---------------------------------------------------------------------------
// weighted moment

/// `x·z(t,x)` from `x z = (i/2π)∫_R e^{ipx}[K_h/(1+iαp)² − 2K_g/(1+iαp)] dp`,
/// `K_h(p) = ∫₀ᵗ e^{−ip²τ/2} h(t−τ) dτ`, `K_g` the same with
/// `h(t−τ) − τh'(t−τ)`. Folded to `p > 0` and summed on the grid wavenumbers.
pub fn weighted_moment_xz(h: &BoundaryData, t: f64, g: Grid, op: OperatorParams) -> Result<ComplexField> {
    require_positive(t)?;
    if h.is_zero() {
        return Ok(ComplexField::zeros(g, t));
    }
    let a = op.alpha;
    let omegas: Vec<f64> = (0..=g.n + 1).map(|k| 0.5 * (k as f64 * g.dp()).powi(2)).collect();
    let kh = filon_transform(|s| h.h(s), t, &omegas, 1e-12)?;
    let kg = filon_transform(|s| h.h(s) - (t - s) * h.dh(s), t, &omegas, 1e-12)?;
    // The sine part decays like 4i·h(t)/(αp³). That tail is taken out with
    // κ·x·e^{−μx}, whose coefficients are κ·2μp/(μ²+p²)², and added back exactly.
    let mu = 1.0;
    let kappa = 2.0 * I * h.h(t) / (a * mu);
    let mut cos_c = vec![ZERO; g.n + 2];
    let mut sin_c = vec![ZERO; g.n];
    for k in 0..=g.n + 1 {
        let p = k as f64 * g.dp();
        let d = 1.0 + a * a * p * p;
        cos_c[k] = kh[k] * (1.0 - a * a * p * p) / (d * d) - 2.0 * kg[k] / d;
        if (1..=g.n).contains(&k) {
            let tail = kappa * 2.0 * mu * p / (mu * mu + p * p).powi(2);
            sin_c[k - 1] = kh[k] * 2.0 * a * p / (d * d) - 2.0 * kg[k] * a * p / d - tail;
        }
    }
    // cosine_synthesis/sine_synthesis carry √(2/π)·dp; we need (i/π)·dp
    let c = I / PI / (2.0 / PI).sqrt();
    let cv = cosine_synthesis(&cos_c, &g);
    let sv = spectral::sine_synthesis(&sin_c, &g);
    let values = (1..=g.n)
        .map(|j| {
            let x = g.x(j);
            c * (cv[j] + sv[j - 1]) + 0.5 * I * kappa * x * (-mu * x).exp()
        })
        .collect();
    Ok(ComplexField { grid: g, values, trace: c * cv[0], time: t, repr: Repr::Physical })
}
