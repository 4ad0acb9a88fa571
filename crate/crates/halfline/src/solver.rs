//! Duhamel solver for `u = w + z`: `z` carries the boundary forcing (see
//! [`crate::boundary`]), `w` solves the Robin problem with zero boundary data
//! and source `f = λ|u|^{p−1}u`.
//!
//! `w` is stored by the sine coefficients of `W = Bw`, which solves a
//! Dirichlet problem, so free evolution is the phase `e^{−iωt}`, `ω = p²/2`.
//! One step is `Ŵ ← e^{−iωΔ}Ŵ − iΔ·e^{−iωΔ/2}·(Bf)^` with `f` evaluated on
//! the midpoint state, found by fixed-point sweeps.

use crate::boundary::ZStepper;
use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid, Repr};
use crate::forcing::BoundaryData;
use crate::spectral::{apply_b, robin_synthesis, robin_synthesis_derivative, sine_coefficients, OperatorParams};
use crate::trajectory::{ModelParams, RunStatus, Trajectory};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Pointwise `λ|u|^{p−1}u`, trace included.
pub fn nonlinearity(u: &ComplexField, params: &ModelParams) -> ComplexField {
    let mut f = u.clone();
    for v in f.values.iter_mut() {
        *v = params.source_at(*v);
    }
    f.trace = params.source_at(u.trace);
    f
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Picard,
    SteppedDuhamel,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub method: Method,
    pub t_end: f64,
    pub dt: f64,
    /// Steps between stored snapshots.
    pub stride: usize,
    /// `C` in the window length `(Cρ + 1)^{−4/3}`.
    pub window_c: f64,
    pub max_window_steps: usize,
    pub sub_iterations: usize,
    pub tol: f64,
    pub picard_max: usize,
    /// Abort once `‖u‖∞` exceeds this multiple of the data size.
    pub blowup_factor: f64,
}

impl SolverOptions {
    pub fn new(method: Method, t_end: f64, dt: f64) -> Self {
        SolverOptions {
            method,
            t_end,
            dt,
            stride: 1,
            window_c: 1.0,
            max_window_steps: 400,
            sub_iterations: 5,
            tol: 1e-11,
            picard_max: 40,
            blowup_factor: 1e6,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return Err(Error::Config(format!("need T > 0 and dt > 0, got T = {}, dt = {}", self.t_end, self.dt)));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::Config(format!("T = {} is not a multiple of dt = {}", self.t_end, self.dt)));
        }
        if n > 1e7 {
            return Err(Error::Config(format!("{n} steps exceed the 1e7 step guard")));
        }
        Ok(n as usize)
    }
}

/// Coefficient-space machinery shared by all drivers.
#[derive(Clone, Debug)]
struct Engine {
    grid: Grid,
    op: OperatorParams,
    omega: Vec<f64>,
}

impl Engine {
    fn new(params: &ModelParams) -> Result<Self> {
        let grid = params.grid();
        let op = OperatorParams::new(params.alpha)?;
        let omega = (1..=grid.n).map(|k| 0.5 * grid.p(k).powi(2)).collect();
        Ok(Engine { grid, op, omega })
    }

    fn phase(&self, c: &[C64], t: f64) -> Vec<C64> {
        c.iter().zip(&self.omega).map(|(&c, &w)| c * C64::from_polar(1.0, -w * t)).collect()
    }

    /// `Δ·e^{−iωΔ/2}`: the implicit midpoint rule in the interaction picture,
    /// which keeps `Im⟨w, f⟩ = 0` exactly and so conserves mass for real λ.
    fn weights(&self, dt: f64) -> Vec<C64> {
        self.omega.iter().map(|&w| C64::from_polar(dt, -0.5 * w * dt)).collect()
    }

    fn synth(&self, c: &[C64], t: f64) -> ComplexField {
        let (values, trace) = robin_synthesis(c, &self.grid, self.op.alpha);
        ComplexField { grid: self.grid, values, trace, time: t, repr: Repr::Physical }
    }

    fn synth_dx(&self, c: &[C64], t: f64) -> ComplexField {
        let (values, trace) = robin_synthesis_derivative(c, &self.grid, self.op.alpha);
        ComplexField { grid: self.grid, values, trace, time: t, repr: Repr::Physical }
    }

    /// Sine coefficients of `Bf`.
    fn analyze(&self, f: &ComplexField) -> Result<Vec<C64>> {
        sine_coefficients(&apply_b(f, self.op)?)
    }

    /// `(e^{−iωΔ/2}a + e^{iωΔ/2}b)/2`: the free flow of both ends to the midpoint.
    fn midpoint(&self, a: &[C64], b: &[C64], dt: f64) -> Vec<C64> {
        a.iter()
            .zip(b)
            .zip(&self.omega)
            .map(|((&a, &b), &w)| {
                let e = C64::from_polar(1.0, -0.5 * w * dt);
                0.5 * (a * e + b * e.conj())
            })
            .collect()
    }

    /// `e^{−iωΔ}c − iφF`.
    fn step(&self, c: &[C64], src: &[C64], phi: &[C64], dt: f64) -> Vec<C64> {
        c.iter()
            .zip(src)
            .zip(phi)
            .zip(&self.omega)
            .map(|(((&c, &s), &p), &w)| c * C64::from_polar(1.0, -w * dt) - I * p * s)
            .collect()
    }
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Duhamel solution `w(t) = U(t)u₀ − i∫₀ᵗ U(t−τ)f(τ)dτ` of the Robin problem
/// with zero boundary data and a prescribed source, midpoint in `τ`.
pub fn duhamel_solve_w<F>(params: &ModelParams, source: F, t_end: f64, dt: f64, stride: usize) -> Result<Trajectory>
where
    F: Fn(f64) -> ComplexField,
{
    let opts = SolverOptions::new(Method::SteppedDuhamel, t_end, dt).with_stride(stride);
    let steps = opts.steps()?;
    let e = Engine::new(params)?;
    let phi = e.weights(dt);
    let g = e.grid;
    let mut traj = Trajectory::new("duhamel-w", params.clone(), BoundaryData::zero(), dt);
    let mut c = e.analyze(&params.u0)?;
    traj.push_spectral(0.0, params.u0.clone(), ComplexField::zeros(g, 0.0), c.clone());
    for n in 0..steps {
        let t = n as f64 * dt;
        let f = source(t + 0.5 * dt);
        c = e.step(&c, &e.analyze(&f)?, &phi, dt);
        let t1 = (n + 1) as f64 * dt;
        if (n + 1) % opts.stride == 0 || n + 1 == steps {
            traj.push_spectral(t1, e.synth(&c, t1), ComplexField::zeros(g, t1), c.clone());
        }
    }
    Ok(traj)
}

/// `z` at the midpoints and ends of `m` steps from the stepper's current time.
fn z_fields(zs: &mut ZStepper, m: usize, dt: f64) -> (Vec<ComplexField>, Vec<ComplexField>) {
    let (mut mid, mut end) = (Vec::with_capacity(m), Vec::with_capacity(m));
    for _ in 0..m {
        zs.advance(0.5 * dt);
        mid.push(zs.field());
        zs.advance(0.5 * dt);
        end.push(zs.field());
    }
    (mid, end)
}

/// Scale against which blow-up is judged.
fn data_scale(params: &ModelParams, h: &BoundaryData, t_end: f64) -> f64 {
    let hs = (0..=200).map(|i| h.h(t_end * i as f64 / 200.0).norm()).fold(0.0, f64::max);
    params.u0.linf_norm().max(hs).max(1e-12)
}

/// `(Cρ + 1)^{−4/3}` with `ρ = ‖u‖₂ + ‖∂x u‖₂`.
fn local_time(c: f64, rho: f64) -> f64 {
    (c * rho + 1.0).powf(-4.0 / 3.0)
}

/// Picard diagnostics: `diffs[n]` is `‖u^{(n+2)} − u^{(n+1)}‖_X` over the run.
#[derive(Clone, Debug)]
pub struct PicardRun {
    pub trajectory: Trajectory,
    pub diffs: Vec<f64>,
    pub iterations: usize,
}

impl PicardRun {
    /// `diffs[n+1]/diffs[n]`.
    pub fn ratios(&self) -> Vec<f64> {
        self.diffs.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect()
    }
}

/// `sup_t ‖X(t)‖_X`, `‖X‖_X² = ‖X‖₂² + ‖∂x X‖₂² + ‖JX‖₂² + ‖∂x² X‖₂² + ‖∂t X‖₂²`,
/// for a coefficient-space history at step spacing `dt`.
fn x_norm_history(e: &Engine, hist: &[Vec<C64>], dt: f64) -> f64 {
    let p2: Vec<f64> = (1..=e.grid.n).map(|k| -e.grid.p(k).powi(2)).collect();
    let mut sup: f64 = 0.0;
    for (k, c) in hist.iter().enumerate() {
        let t = k as f64 * dt;
        let x = e.synth(c, t);
        let dx = e.synth_dx(c, t);
        let cxx: Vec<C64> = c.iter().zip(&p2).map(|(c, p)| c * p).collect();
        let dxx = e.synth(&cxx, t);
        let j = x.map(|xx, v| xx * v).add(&dx.scale(I * t));
        let dtn = if hist.len() < 2 {
            0.0
        } else {
            let (a, b, h) = if k == 0 {
                (&hist[1], &hist[0], dt)
            } else if k + 1 == hist.len() {
                (&hist[k], &hist[k - 1], dt)
            } else {
                (&hist[k + 1], &hist[k - 1], 2.0 * dt)
            };
            let d: Vec<C64> = a.iter().zip(b).map(|(a, b)| (a - b) / h).collect();
            e.synth(&d, t).l2_norm()
        };
        let s = x.l2_norm_sq() + dx.l2_norm_sq() + j.l2_norm_sq() + dxx.l2_norm_sq() + dtn * dtn;
        sup = sup.max(s.sqrt());
    }
    sup
}

/// Global Picard iteration on `[0, T]`: `u^{(1)}` solves the linear problem
/// with zero source, `u^{(n+1)} = w^{(n+1)} + z` with source `f(u^{(n)})`.
/// `z` is computed once.
pub fn picard_iterate(params: &ModelParams, h: &BoundaryData, opts: &SolverOptions) -> Result<PicardRun> {
    let steps = opts.steps()?;
    if steps > 20_000 {
        return Err(Error::Config(format!("Picard keeps the whole history; {steps} steps is too many (use stepped-duhamel)")));
    }
    let e = Engine::new(params)?;
    let dt = opts.dt;
    let phi = e.weights(dt);
    let mut zs = ZStepper::new(h, e.grid, e.op);
    let (zmid, zend) = z_fields(&mut zs, steps, dt);

    let mut warnings = Vec::new();
    let rho = params.u0.l2_norm() + crate::spectral::derivative(&params.u0)?.l2_norm();
    let t_loc = local_time(opts.window_c, rho);
    if opts.t_end > t_loc {
        warnings.push(format!("T = {} exceeds the local existence scale (Cρ+1)^(-4/3) = {t_loc:.3} with C = {}", opts.t_end, opts.window_c));
    }

    let c0 = e.analyze(&params.u0)?;
    let mut hist: Vec<Vec<C64>> = (0..=steps).map(|k| e.phase(&c0, k as f64 * dt)).collect();
    let mut diffs = Vec::new();
    let mut converged = false;
    let mut iterations = 1;
    let zero_source = params.lambda == C64::new(0.0, 0.0);
    while iterations < opts.picard_max && !zero_source {
        let mut next = Vec::with_capacity(steps + 1);
        next.push(c0.clone());
        for k in 0..steps {
            let mut u = e.synth(&e.midpoint(&hist[k], &hist[k + 1], dt), (k as f64 + 0.5) * dt);
            u = u.add(&zmid[k]);
            let src = e.analyze(&nonlinearity(&u, params))?;
            let c = e.step(&next[k], &src, &phi, dt);
            next.push(c);
        }
        let dh: Vec<Vec<C64>> = next.iter().zip(&hist).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
        let d = x_norm_history(&e, &dh, dt);
        let scale = x_norm_history(&e, &next, dt).max(1e-300);
        hist = next;
        iterations += 1;
        diffs.push(d);
        if d <= opts.tol * scale {
            converged = true;
            break;
        }
    }
    if zero_source {
        converged = true;
    }
    if !converged {
        return Err(Error::NotConverged { what: "Picard iteration".into(), history: diffs });
    }

    let mut traj = Trajectory::new("picard", params.clone(), h.clone(), dt);
    traj.warnings = warnings;
    traj.push_spectral(0.0, params.u0.clone(), ComplexField::zeros(e.grid, 0.0), hist[0].clone());
    for k in 1..=steps {
        if k % opts.stride == 0 || k == steps {
            let t = k as f64 * dt;
            traj.push_spectral(t, e.synth(&hist[k], t), zend[k - 1].clone(), hist[k].clone());
        }
    }
    Ok(PicardRun { trajectory: traj, diffs, iterations })
}

/// Window-by-window integration. Each window of `m` steps is relaxed with
/// up to `sub_iterations` sweeps starting from a predictor pass; a window
/// that does not settle is halved.
fn stepped_duhamel(params: &ModelParams, h: &BoundaryData, opts: &SolverOptions) -> Result<Trajectory> {
    let steps = opts.steps()?;
    let e = Engine::new(params)?;
    let dt = opts.dt;
    let phi = e.weights(dt);
    let g = e.grid;
    let mut traj = Trajectory::new("stepped-duhamel", params.clone(), h.clone(), dt);
    let scale = data_scale(params, h, opts.t_end);
    let nonlinear = params.lambda != C64::new(0.0, 0.0);

    let mut zs = ZStepper::new(h, g, e.op);
    let mut c = e.analyze(&params.u0)?;
    traj.push_spectral(0.0, params.u0.clone(), ComplexField::zeros(g, 0.0), c.clone());
    let mut n = 0usize;
    let mut halvings = 0usize;
    while n < steps {
        let w_now = e.synth(&c, n as f64 * dt);
        let z_now = zs.field();
        let u_now = w_now.add(&z_now);
        let rho = u_now.l2_norm() + e.synth_dx(&c, 0.0).add(&zs.derivative_field()).l2_norm();
        let mut m = ((local_time(opts.window_c, rho) / dt).floor() as usize).clamp(1, opts.max_window_steps).min(steps - n);

        let (mut cs, zend) = loop {
            let mut zw = zs.clone();
            let (zmid, zend) = z_fields(&mut zw, m, dt);
            let src = |cm: &[C64], k: usize| -> Result<Vec<C64>> {
                if !nonlinear {
                    return Ok(vec![C64::new(0.0, 0.0); g.n]);
                }
                let u = e.synth(cm, 0.0).add(&zmid[k]);
                e.analyze(&nonlinearity(&u, params))
            };
            // predictor: midpoint state from the left end only
            let mut cs = vec![c.clone()];
            for k in 0..m {
                let s = src(&e.phase(&cs[k], 0.5 * dt), k)?;
                let next = e.step(&cs[k], &s, &phi, dt);
                cs.push(next);
            }
            let mut settled = !nonlinear;
            let (mut change, mut size) = (0.0f64, 0.0f64);
            for _ in 0..opts.sub_iterations {
                if settled {
                    break;
                }
                change = 0.0;
                size = 0.0;
                for k in 0..m {
                    let s = src(&e.midpoint(&cs[k], &cs[k + 1], dt), k)?;
                    let next = e.step(&cs[k], &s, &phi, dt);
                    change = change.max(max_diff(&next, &cs[k + 1]));
                    size = size.max(max_abs(&next));
                    cs[k + 1] = next;
                }
                settled = change <= opts.tol * size.max(1e-300);
            }
            if settled || m == 1 {
                if !settled {
                    let t = n as f64 * dt;
                    if !(change <= 1e-6 * size) {
                        traj.status = RunStatus::Aborted { t, reason: format!("midpoint sweeps diverge at t = {t:.4} (relative change {:.1e}); dt is too large for this amplitude", change / size) };
                        return Ok(traj);
                    }
                    traj.warnings.push(format!("single-step window at t = {t:.4} settled only to {:.1e}", change / size));
                }
                zs = zw;
                break (cs, zend);
            }
            m /= 2;
            halvings += 1;
        };

        for k in 1..=m {
            let step = n + k;
            let t = step as f64 * dt;
            if step % opts.stride == 0 || step == steps {
                let w = e.synth(&cs[k], t);
                let mut z = zend[k - 1].clone();
                z.time = t;
                let u_sup = w.add(&z).linf_norm();
                if !u_sup.is_finite() || u_sup > opts.blowup_factor * scale {
                    traj.status = RunStatus::Aborted { t, reason: format!("‖u‖∞ = {u_sup:.3e} exceeds {:.0e} × data size", opts.blowup_factor) };
                    return Ok(traj);
                }
                traj.push_spectral(t, w, z, cs[k].clone());
            }
        }
        c = cs.pop().unwrap();
        n += m;
    }
    if halvings > 0 {
        traj.warnings.push(format!("{halvings} window halvings"));
    }
    Ok(traj)
}

/// Full trajectory `u = w + z` on `[0, T]`.
pub fn solve(params: &ModelParams, h: &BoundaryData, opts: &SolverOptions) -> Result<Trajectory> {
    match opts.method {
        Method::Picard => Ok(picard_iterate(params, h, opts)?.trajectory),
        Method::SteppedDuhamel => stepped_duhamel(params, h, opts),
    }
}
