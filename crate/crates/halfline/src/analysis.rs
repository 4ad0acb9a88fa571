//! Norms, decay fits, scattering-profile extraction and the self-similar
//! boundary profile Λ.

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::forcing::BoundaryData;
use crate::quad::{integrate, Tol};
use crate::spectral::{apply_b, apply_j, derivative, it_inv_sqrt, second_derivative, sine_coefficients, OperatorParams};
use crate::boundary::FilonAccumulator;
use crate::trajectory::Trajectory;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

// ---------------------------------------------------------------------------
// norms

/// Weights of the function space used for `p > 3` with boundary decay `β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandWeights {
    pub beta: f64,
    pub power: f64,
    pub eps: f64,
}

impl BandWeights {
    /// `⟨t⟩^{3/4−β}`, `(log⟨t⟩)²` or 1.
    pub fn phi(&self, t: f64) -> f64 {
        let b = bracket(t);
        if self.beta < 0.75 {
            b.powf(0.75 - self.beta)
        } else if self.beta == 0.75 {
            b.ln().powi(2)
        } else {
            1.0
        }
    }

    /// `⟨t⟩^{3/4−β}`, `log⟨t⟩` or 1; never exceeds `phi`.
    pub fn psi(&self, t: f64) -> f64 {
        let b = bracket(t);
        if self.beta < 0.75 {
            b.powf(0.75 - self.beta)
        } else if self.beta == 0.75 {
            b.ln()
        } else {
            1.0
        }
    }

    /// `ε^{2(p−1)/3}` at the band edge `β = ½ + 1/(p−1)`, zero inside.
    pub fn gamma1(&self) -> f64 {
        let edge = 0.5 + 1.0 / (self.power - 1.0);
        if (self.beta - edge).abs() < 1e-12 {
            self.eps.powf(2.0 * (self.power - 1.0) / 3.0)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub t: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "Linf")]
    pub linf: f64,
    pub dx_norm: f64,
    pub x_norm: f64,
    /// `‖u‖₂ + ‖∂x u‖₂`
    #[serde(rename = "H10")]
    pub h10: f64,
    /// `‖u‖₂ + ‖x u‖₂`
    #[serde(rename = "H01")]
    pub h01: f64,
    #[serde(rename = "Jnorm")]
    pub jnorm: f64,
    /// `‖∂x² u‖₂`
    #[serde(rename = "H20")]
    pub h20: f64,
    pub dt_norm: Option<f64>,
    /// `(⟨t⟩^{−2γ}‖u‖_X² + ⟨t⟩^{−1/2+2γ}‖Ju‖₂² + ⟨t⟩‖u‖∞²)^{1/2}` with
    /// `‖u‖_X² = ‖u‖₂² + ‖∂x u‖₂² + ‖∂x² u‖₂² + ‖∂t u‖₂²` (the last term
    /// only when `dt_norm` is known).
    #[serde(rename = "Xnorm")]
    pub xnorm: f64,
    pub gamma: f64,
    pub phi: Option<f64>,
    pub psi: Option<f64>,
    pub gamma1: Option<f64>,
    /// `⟨t⟩^{−γ₁}φ(t)^{−1}(‖u‖_{H^{2,0}} + ‖∂t u‖₂)`
    pub y_norm: Option<f64>,
}

impl NormReport {
    /// `‖u‖∞² ≤ (2/t)‖Ju‖₂‖u‖₂` and `‖u‖∞² ≤ 2‖∂x u‖₂‖u‖₂`, up to `slack`.
    pub fn lemma11_holds(&self, slack: f64) -> bool {
        let a = self.linf * self.linf;
        let b1 = 2.0 * self.dx_norm * self.l2;
        let ok_dx = a <= b1 * (1.0 + slack) + slack * a;
        if self.t > 0.0 {
            let b2 = 2.0 / self.t * self.jnorm * self.l2;
            ok_dx && a <= b2 * (1.0 + slack) + slack * a
        } else {
            ok_dx
        }
    }
}

/// Norms of one field at time `t`; `dt_field` is `∂t u` if known. Spatial
/// derivatives are spectral, integrals use fourth-order end-corrected
/// trapezoid weights.
pub fn compute_norms(u: &ComplexField, t: f64, dt_field: Option<&ComplexField>, gamma: f64, band: Option<BandWeights>) -> Result<NormReport> {
    u.expect(crate::field::Repr::Physical)?;
    let l2 = u.mass().sqrt();
    let linf = u.linf_norm();
    let dx_norm = derivative(u)?.mass().sqrt();
    let x_norm = u.map(|x, v| v * x).mass().sqrt();
    let jnorm = apply_j(u, t)?.mass().sqrt();
    let h20 = second_derivative(u)?.mass().sqrt();
    let dt_norm = dt_field.map(|f| f.mass().sqrt());
    let b = bracket(t);
    let dtn = dt_norm.unwrap_or(0.0);
    let x_sq = l2 * l2 + dx_norm * dx_norm + h20 * h20 + dtn * dtn;
    let xnorm = (b.powf(-2.0 * gamma) * x_sq + b.powf(-0.5 + 2.0 * gamma) * jnorm * jnorm + b * linf * linf).sqrt();
    let (phi, psi, gamma1, y_norm) = match band {
        Some(w) => {
            let h2 = (l2 * l2 + dx_norm * dx_norm + h20 * h20).sqrt();
            let y = b.powf(-w.gamma1()) / w.phi(t) * (h2 + dtn);
            (Some(w.phi(t)), Some(w.psi(t)), Some(w.gamma1()), Some(y))
        }
        None => (None, None, None, None),
    };
    Ok(NormReport { t, l2, linf, dx_norm, x_norm, h10: l2 + dx_norm, h01: l2 + x_norm, jnorm, h20, dt_norm, xnorm, gamma, phi, psi, gamma1, y_norm })
}

/// `∂t u` at every snapshot: centred differences inside, one-sided
/// second-order stencils at both ends (non-uniform spacing allowed).
pub fn time_derivatives(traj: &Trajectory) -> Vec<Option<ComplexField>> {
    let s = &traj.snapshots;
    let n = s.len();
    if n < 3 {
        return vec![None; n];
    }
    let combo = |k: usize, idx: [usize; 3]| -> ComplexField {
        let (t0, t1, t2) = (s[idx[0]].t, s[idx[1]].t, s[idx[2]].t);
        let t = s[k].t;
        // derivative of the quadratic through the three points, at t
        let w0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
        let w1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
        let w2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
        s[idx[0]].u.scale(C64::new(w0, 0.0)).add(&s[idx[1]].u.scale(C64::new(w1, 0.0))).add(&s[idx[2]].u.scale(C64::new(w2, 0.0)))
    };
    (0..n)
        .map(|k| {
            let idx = if k == 0 {
                [0, 1, 2]
            } else if k == n - 1 {
                [n - 3, n - 2, n - 1]
            } else {
                [k - 1, k, k + 1]
            };
            Some(combo(k, idx))
        })
        .collect()
}

/// One report per snapshot, `∂t u` from [`time_derivatives`].
pub fn norm_series(traj: &Trajectory, gamma: f64, band: Option<BandWeights>) -> Result<Vec<NormReport>> {
    let dts = time_derivatives(traj);
    traj.snapshots.iter().zip(&dts).map(|(s, d)| compute_norms(&s.u, s.t, d.as_ref(), gamma, band)).collect()
}

/// `sup_{t ≤ T}` of the pointwise `Xnorm`, as a running maximum.
pub fn running_x_norm(reports: &[NormReport]) -> Vec<f64> {
    let mut m: f64 = 0.0;
    reports.iter().map(|r| {
        m = m.max(r.xnorm);
        m
    }).collect()
}

/// `γ = ε^{1/3}`, the smallest weight allowed by the small-data theorem.
pub fn default_gamma(eps: f64) -> f64 {
    eps.abs().cbrt()
}

// ---------------------------------------------------------------------------
// decay fits

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    /// `log v ≈ intercept + exponent·log t`
    pub intercept: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub residual_rms: f64,
    /// Two standard errors of the slope.
    pub half_width: f64,
}

/// Least squares on `(log t, log v)` over samples with `t` in `window`.
pub fn fit_decay_exponent(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Config(format!("fit window [{lo}, {hi}] must satisfy 0 < t_min < t_max")));
    }
    let pts: Vec<(f64, f64)> = series.iter().filter(|(t, _)| *t >= lo && *t <= hi).copied().collect();
    if pts.len() < 10 {
        return Err(Error::Config(format!("fit window [{lo}, {hi}] holds {} samples, need at least 10", pts.len())));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!("non-positive value {v} at t = {t} in fit window")));
    }
    let n = pts.len() as f64;
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let se = (ss / (n - 2.0) / sxx).sqrt();
    Ok(DecayFit {
        exponent: slope,
        intercept,
        t_min: pts.first().unwrap().0,
        t_max: pts.last().unwrap().0,
        samples: pts.len(),
        residual_rms: (ss / n).sqrt(),
        half_width: 2.0 * se,
    })
}

// ---------------------------------------------------------------------------
// scattering profile

/// Interaction-picture data on the wavenumber grid `ξ_k = p_k ≤ ξ_max`:
/// `φ = F_s B U(−t) w`, `F_s B U(−t) z = A + B(t)`, and the modified profile
/// `Ψ = (φ + A)·exp(iλ∫₁ᵗ τ⁻¹|φ + A|² dτ)`.
#[derive(Clone, Debug)]
pub struct ScatterState {
    pub xi: Vec<f64>,
    pub times: Vec<f64>,
    pub a: Vec<C64>,
    /// `b[i][k] = B(t_i, ξ_k)`
    pub b: Vec<Vec<C64>>,
    pub phi: Vec<Vec<C64>>,
    pub psi: Vec<Vec<C64>>,
    /// `∫₁^{t_i} τ⁻¹|φ + A|² dτ`, zero for `t_i ≤ 1`.
    pub phase: Vec<Vec<f64>>,
    pub psi_plus: Vec<C64>,
    /// `Φ₊ = ∫₁^{t_max} τ⁻¹|φ + A|² dτ − |Ψ₊|² log t_max`
    pub phi_plus: Vec<f64>,
    pub lambda: C64,
    pub alpha: f64,
    pub form: AsymptoticForm,
}

fn sup_abs(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

impl ScatterState {
    /// `(t_i, sup_ξ |B(t_i, ξ)|)`.
    pub fn b_sup_series(&self) -> Vec<(f64, f64)> {
        self.times.iter().zip(&self.b).map(|(&t, b)| (t, sup_abs(b))).collect()
    }

    fn at(&self, t: f64) -> usize {
        (0..self.times.len()).min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs())).unwrap()
    }

    /// `‖Ψ(2s) − Ψ(s)‖∞` at the snapshots nearest `s` and `2s`.
    pub fn cauchy_increments(&self, ss: &[f64]) -> Vec<(f64, f64)> {
        ss.iter()
            .map(|&s| {
                let (i, j) = (self.at(s), self.at(2.0 * s));
                let d = self.psi[j].iter().zip(&self.psi[i]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                (s, d)
            })
            .collect()
    }

    /// `‖Ψ(t_max) − Ψ(t_max/2)‖∞`, the error bar on `Ψ₊`.
    pub fn psi_plus_error(&self) -> f64 {
        let t = *self.times.last().unwrap();
        self.cauchy_increments(&[0.5 * t])[0].1
    }

    /// `max_i ‖Ψ(t_i) − Ψ(t_0)‖∞`.
    pub fn psi_variation(&self) -> f64 {
        self.psi.iter().map(|p| p.iter().zip(&self.psi[0]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
    }

    /// Relative phase rate at `ξ`: 1, or `1/(1 + α²ξ²)` for the Robin form.
    pub fn rate(&self, xi: f64) -> f64 {
        match self.form {
            AsymptoticForm::Stated => 1.0,
            AsymptoticForm::Robin => 1.0 / (1.0 + self.alpha * self.alpha * xi * xi),
        }
    }

    /// Piecewise-linear `(Ψ₊, Φ₊)` at `ξ`, tied to zero at `ξ = 0` and zero
    /// beyond the grid.
    pub fn limit_at(&self, xi: f64) -> (C64, f64) {
        let n = self.xi.len();
        if n == 0 || xi > self.xi[n - 1] || xi < 0.0 {
            return (C64::new(0.0, 0.0), 0.0);
        }
        if xi <= self.xi[0] {
            let s = xi / self.xi[0];
            return (self.psi_plus[0] * s, self.phi_plus[0]);
        }
        let k = self.xi.partition_point(|&x| x < xi).min(n - 1).max(1);
        let s = (xi - self.xi[k - 1]) / (self.xi[k] - self.xi[k - 1]);
        (self.psi_plus[k - 1] * (1.0 - s) + self.psi_plus[k] * s, self.phi_plus[k - 1] * (1.0 - s) + self.phi_plus[k] * s)
    }
}

/// `∫₀^{T} e^{iωτ}h(τ)dτ` for each `ω`, recorded at every `marks[i]`, plus
/// the value continued to infinity by three integrations by parts beyond a
/// far cut where `ω·T ≥ 60` for the smallest `ω`. Steps grow with `τ`.
fn boundary_moments(h: &BoundaryData, omegas: &[f64], marks: &[f64]) -> (Vec<Vec<C64>>, Vec<C64>) {
    let w_min = omegas.iter().copied().fold(f64::INFINITY, f64::min).max(1e-12);
    let t_last = marks.last().copied().unwrap_or(0.0);
    let far = (60.0 / w_min).max(2.0 * t_last).max(50.0).min(1e8);
    let mut breaks: Vec<f64> = marks.iter().copied().filter(|&t| t > 0.0).collect();
    // geometric pieces so the step can keep growing with τ
    let mut b = breaks.last().copied().unwrap_or(0.0).max(10.0);
    while b * 1.5 < far {
        b *= 1.5;
        breaks.push(b);
    }
    breaks.push(far);
    breaks.dedup();
    let mut acc = FilonAccumulator::new(omegas.to_vec(), 1);
    let mut recorded = Vec::with_capacity(marks.len());
    let rotate = |acc: &FilonAccumulator, t: f64| -> Vec<C64> { acc.acc[0].iter().zip(omegas).map(|(q, &w)| q * C64::from_polar(1.0, w * t)).collect() };
    let mut t = 0.0;
    let mut mi = 0;
    while mi < marks.len() && marks[mi] <= 0.0 {
        recorded.push(vec![C64::new(0.0, 0.0); omegas.len()]);
        mi += 1;
    }
    for &b in &breaks {
        let span = b - t;
        if span <= 0.0 {
            continue;
        }
        let local = 0.02 * (t / 10.0).max(1.0);
        let n = (span / local).ceil().max(1.0) as usize;
        let d = span / n as f64;
        for i in 0..n {
            let s = t + i as f64 * d;
            acc.step(d, &[[h.h(s), h.h(s + 0.5 * d), h.h(s + d)]]);
        }
        t = b;
        while mi < marks.len() && (marks[mi] - t).abs() <= 1e-9 * t.max(1.0) {
            recorded.push(rotate(&acc, t));
            mi += 1;
        }
    }
    let jet = h.jet(far);
    let total: Vec<C64> = rotate(&acc, far)
        .into_iter()
        .zip(omegas)
        .map(|(i0, &w)| {
            let iw = I * w;
            let e = C64::from_polar(1.0, w * far);
            i0 - e * (jet[0] / iw - jet[1] / (iw * iw) + jet[2] / (iw * iw * iw))
        })
        .collect();
    (recorded, total)
}

/// `A(ξ) = (iξ/√(2π))∫₀^∞ e^{iξ²τ/2}h(τ)dτ`, the limit of `F_s B U(−t) z(t)`.
pub fn boundary_profile(h: &BoundaryData, xi: &[f64]) -> Vec<C64> {
    let omegas: Vec<f64> = xi.iter().map(|x| 0.5 * x * x).collect();
    let (_, total) = boundary_moments(h, &omegas, &[]);
    xi.iter().zip(total).map(|(&x, v)| I * x / (2.0 * PI).sqrt() * v).collect()
}

/// How the large-time profile is read off the interaction picture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsymptoticForm {
    /// Phase rate `λ/t` and `u ≈ −i M D_t Ψ₊`.
    Stated,
    /// `B⁻¹` acting on `e^{ix²/2t}f(x/t)` is `f/(1 + iαξ)` to leading order,
    /// so the phase rate is `λ/(t(1 + α²ξ²))` and `u ≈ −i M D_t Ψ₊/(1 + iαξ)`.
    Robin,
}

#[derive(Clone, Copy, Debug)]
pub struct ScatterOptions {
    pub xi_max: f64,
    pub min_horizon: f64,
    pub form: AsymptoticForm,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        ScatterOptions { xi_max: 4.0, min_horizon: 20.0, form: AsymptoticForm::Robin }
    }
}

pub fn extract_scattering_profile(traj: &Trajectory, opts: ScatterOptions) -> Result<ScatterState> {
    let params = &traj.params;
    if params.power != 3.0 {
        return Err(Error::Config(format!("scattering extraction is for the cubic case, got p = {}", params.power)));
    }
    let t_max = traj.last().map(|s| s.t).unwrap_or(0.0);
    if t_max < opts.min_horizon {
        return Err(Error::Config(format!("trajectory ends at t = {t_max}, scattering needs t ≥ {}", opts.min_horizon)));
    }
    let g = traj.grid();
    let op = OperatorParams::new(params.alpha)?;
    let kmax = (1..=g.n).take_while(|&k| g.p(k) <= opts.xi_max).count();
    if kmax == 0 {
        return Err(Error::Config(format!("ξ_max = {} is below the first wavenumber {}", opts.xi_max, g.p(1))));
    }
    let xi: Vec<f64> = (1..=kmax).map(|k| g.p(k)).collect();
    let omegas: Vec<f64> = xi.iter().map(|x| 0.5 * x * x).collect();
    let times = traj.times();
    let (partial, total) = boundary_moments(&traj.boundary, &omegas, &times);
    let c = I / (2.0 * PI).sqrt();
    let a: Vec<C64> = xi.iter().zip(&total).map(|(&x, v)| c * x * v).collect();
    let b: Vec<Vec<C64>> = partial.iter().map(|p| xi.iter().zip(p).zip(&total).map(|((&x, pi), tot)| -c * x * (tot - pi)).collect()).collect();

    let mut phi = Vec::with_capacity(times.len());
    for s in &traj.snapshots {
        let coef = match &s.coefficients {
            Some(c) => c.clone(),
            None => sine_coefficients(&apply_b(&s.w, op)?)?,
        };
        phi.push((0..kmax).map(|k| coef[k] * C64::from_polar(1.0, omegas[k] * s.t)).collect::<Vec<_>>());
    }
    let lambda = params.lambda;
    let rate: Vec<f64> = xi.iter().map(|&x| match opts.form {
        AsymptoticForm::Stated => 1.0,
        AsymptoticForm::Robin => 1.0 / (1.0 + params.alpha * params.alpha * x * x),
    }).collect();
    let mut phase = Vec::with_capacity(times.len());
    let mut acc = vec![0.0; kmax];
    let mut prev: Option<(f64, Vec<f64>)> = None;
    for (i, &t) in times.iter().enumerate() {
        let m: Vec<f64> = phi[i].iter().zip(&a).zip(&rate).map(|((p, a), r)| r * (p + a).norm_sqr()).collect();
        if t >= 1.0 {
            if let Some((tp, mp)) = &prev {
                let lo = tp.max(1.0);
                for k in 0..kmax {
                    // trapezoid in log τ
                    acc[k] += 0.5 * (m[k] + mp[k]) * (t / lo).ln();
                }
            }
            prev = Some((t, m));
        }
        phase.push(acc.clone());
    }
    let psi: Vec<Vec<C64>> = (0..times.len())
        .map(|i| (0..kmax).map(|k| (phi[i][k] + a[k]) * (I * lambda * phase[i][k]).exp()).collect())
        .collect();
    let psi_plus = psi.last().unwrap().clone();
    let lt = t_max.ln();
    let phi_plus = phase.last().unwrap().iter().zip(&psi_plus).zip(&rate).map(|((ph, p), r)| ph - r * p.norm_sqr() * lt).collect();
    Ok(ScatterState { xi, times, a, b, phi, psi, phase, psi_plus, phi_plus, lambda, alpha: params.alpha, form: opts.form })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSample {
    pub t: f64,
    pub residual: f64,
    pub modulus_residual: f64,
    pub sup_u: f64,
}

/// Distance between `u(t)` and `−i·e^{ix²/2t}(it)^{−1/2}Ψ₊(x/t)e^{−iλ(κ|Ψ₊|² log t + Φ₊)}`
/// (divided by `1 + iαx/t` in the Robin form, with `κ` the phase rate) for
/// every snapshot with `t ≥ 1`. `modulus_residual` compares the moduli
/// where `|Ψ₊|` exceeds a tenth of its maximum.
pub fn asymptotic_residual(traj: &Trajectory, sc: &ScatterState) -> Vec<AsymptoticSample> {
    let g = traj.grid();
    let cut = 0.1 * sup_abs(&sc.psi_plus);
    traj.snapshots
        .iter()
        .filter(|s| s.t >= 1.0)
        .map(|s| {
            let t = s.t;
            let pref = -I * it_inv_sqrt(t);
            let (mut res, mut modres): (f64, f64) = (0.0, 0.0);
            for j in 1..=g.n {
                let x = g.x(j);
                let xi = x / t;
                let (p, ph) = sc.limit_at(xi);
                let mut ansatz = pref * C64::from_polar(1.0, x * x / (2.0 * t)) * p * (-I * sc.lambda * (sc.rate(xi) * p.norm_sqr() * t.ln() + ph)).exp();
                if sc.form == AsymptoticForm::Robin {
                    ansatz /= 1.0 + I * sc.alpha * xi;
                }
                let u = s.u.values[j - 1];
                res = res.max((u - ansatz).norm());
                if p.norm() > cut {
                    modres = modres.max((u.norm() - ansatz.norm()).abs());
                }
            }
            AsymptoticSample { t, residual: res, modulus_residual: modres, sup_u: s.u.linf_norm() }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// self-similar boundary profile

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaVariant {
    /// `(1/(i√(2iπ)))∫₀¹ e^{iξ²/2(1−y)} y^{−β}(1−y)^{−1/2} dy`, with `u ≈ A t^{1/2−β}Λ(x/√t)`.
    Statement,
    /// The same with the extra factor `ξ/(2(1−y) − iαξ)`.
    ClosingDisplay,
    /// `(ξ/√(2πi))∫₀¹ e^{iξ²/2(1−y)} y^{−β}(1−y)^{−3/2} dy`, the similarity
    /// limit of the Dirichlet boundary kernel, with `u ≈ A t^{−β}Λ(x/√t)`.
    Similarity,
}

impl LambdaVariant {
    pub const ALL: [LambdaVariant; 3] = [LambdaVariant::Statement, LambdaVariant::ClosingDisplay, LambdaVariant::Similarity];

    /// `s` in `u(t, ξ√t) ≈ A t^{s}Λ(ξ)`.
    pub fn time_exponent(&self, beta: f64) -> f64 {
        match self {
            LambdaVariant::Similarity => -beta,
            _ => 0.5 - beta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaValue {
    pub value: C64,
    pub error: f64,
    pub variant: LambdaVariant,
}

pub fn lambda_profile(xi: f64, beta: f64, alpha: f64, variant: LambdaVariant) -> Result<LambdaValue> {
    lambda_profile_tol(xi, beta, alpha, variant, 1e-11)
}

/// Λ with relative quadrature tolerance `rel`. The integral is split at
/// `y = ½`: the left piece uses `y = σ^{1/(1−β)}`, the right piece
/// `s = 1/(1−y)` followed by the rotation `s = 2 + ir` onto the decaying
/// direction of `e^{iξ²s/2}`.
pub fn lambda_profile_tol(xi: f64, beta: f64, alpha: f64, variant: LambdaVariant, rel: f64) -> Result<LambdaValue> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("β must lie in (0, 1), got {beta}")));
    }
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(Error::Domain(format!("ξ must be finite and non-negative, got {xi}")));
    }
    match variant {
        LambdaVariant::ClosingDisplay if xi == 0.0 => return Ok(LambdaValue { value: C64::new(0.0, 0.0), error: 0.0, variant }),
        LambdaVariant::Similarity if xi == 0.0 => return Ok(LambdaValue { value: C64::new(1.0, 0.0), error: 0.0, variant }),
        _ => {}
    }
    let x2 = xi * xi;
    // everything except y^{−β}, as a function of w = 1 − y
    let amp = |w: C64| -> C64 {
        let base = (I * x2 / (2.0 * w)).exp();
        match variant {
            LambdaVariant::Statement => base * w.powf(-0.5),
            LambdaVariant::ClosingDisplay => base * w.powf(-0.5) * xi / (2.0 * w - I * alpha * xi),
            LambdaVariant::Similarity => base * w.powf(-1.5) * xi,
        }
    };
    let tol = Tol { abs: 1e-14, rel, max_intervals: 4000 };
    let q = 1.0 / (1.0 - beta);
    // y = σ^q turns y^{−β}dy into q·dσ
    let left = integrate(|sg: f64| q * amp(C64::new(1.0 - sg.powf(q), 0.0)), 0.0, 0.5f64.powf(1.0 - beta), tol);
    // s = 1/(1−y) ∈ [2, ∞), dy = ds/s², then s = 2 + ir, r = c·ρ/(1−ρ)
    let c = if xi > 0.0 { (2.0 / x2).max(1.0) } else { 1.0 };
    let right = integrate(
        |rho: f64| {
            if rho >= 1.0 {
                return C64::new(0.0, 0.0);
            }
            let r = c * rho / (1.0 - rho);
            let jac = c / ((1.0 - rho) * (1.0 - rho));
            let w = C64::new(2.0, r).inv();
            (1.0 - w).powf(-beta) * amp(w) * w * w * I * jac
        },
        0.0,
        1.0,
        tol,
    );
    let pref = match variant {
        LambdaVariant::Similarity => (2.0 * PI * I).sqrt().inv(),
        _ => (I * (2.0 * I * PI).sqrt()).inv(),
    };
    Ok(LambdaValue { value: pref * (left.value + right.value), error: pref.norm() * (left.error + right.error), variant })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub t: f64,
    /// `sup_ξ |t^{−s}u(t, ξ√t)/A − Λ(ξ)|`
    pub sup_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCheck {
    pub variant: LambdaVariant,
    pub beta: f64,
    pub amplitude: f64,
    pub exponent: f64,
    pub xi: Vec<f64>,
    pub lambda: Vec<C64>,
    pub samples: Vec<ProfileSample>,
    /// Whether `β` lies in the band `(½ + 1/(p−1), 1)`.
    pub in_band: bool,
}

impl ProfileCheck {
    pub fn final_diff(&self) -> f64 {
        self.samples.last().map(|s| s.sup_diff).unwrap_or(f64::NAN)
    }
}

/// Compare `u(t, ξ√t)` with `A t^{s}Λ(ξ)` for every snapshot with `t ≥ 1`.
/// `A` and `β` come from the forcing, which must be of the profile family.
/// With `A = 0` the comparison is against zero.
pub fn theorem8_profile_check(traj: &Trajectory, variant: LambdaVariant, xi: &[f64]) -> Result<ProfileCheck> {
    let h = &traj.boundary;
    let beta = match (h.family, h.beta) {
        (crate::forcing::Family::Theorem8Profile, Some(b)) => b,
        _ => return Err(Error::Config(format!("profile check needs theorem8-profile forcing, got {}", h.label))),
    };
    let amp = h.amplitude;
    let p = traj.params.power;
    let in_band = beta > 0.5 + 1.0 / (p - 1.0) && beta < 1.0;
    let lambda: Vec<C64> = xi.iter().map(|&x| lambda_profile(x, beta, traj.params.alpha, variant).map(|v| v.value)).collect::<Result<_>>()?;
    let s = variant.time_exponent(beta);
    let mut samples = Vec::new();
    for snap in traj.snapshots.iter().filter(|sn| sn.t >= 1.0) {
        let t = snap.t;
        let ys: Vec<f64> = xi.iter().map(|x| x * t.sqrt()).collect();
        let u = crate::spectral::interpolate(&snap.u, &ys)?;
        let sup_diff = if amp == 0.0 {
            sup_abs(&u)
        } else {
            u.iter().zip(&lambda).map(|(v, l)| (v * t.powf(-s) / amp - l).norm()).fold(0.0, f64::max)
        };
        samples.push(ProfileSample { t, sup_diff });
    }
    Ok(ProfileCheck { variant, beta, amplitude: amp, exponent: s, xi: xi.to_vec(), lambda, samples, in_band })
}

/// Run the profile check for every variant on a linear control trajectory
/// and pick the one whose difference shrinks fastest (most negative fitted
/// exponent over `window`). A variant that does not match the simulated `z`
/// leaves a difference of order `sup|Λ|` that does not decay at all.
pub fn select_lambda_variant(control: &Trajectory, xi: &[f64], window: (f64, f64)) -> Result<(LambdaVariant, Vec<(ProfileCheck, DecayFit)>)> {
    let mut out = Vec::new();
    for v in LambdaVariant::ALL {
        let c = theorem8_profile_check(control, v, xi)?;
        let fit = fit_decay_exponent(&c.samples.iter().map(|s| (s.t, s.sup_diff)).collect::<Vec<_>>(), window)?;
        out.push((c, fit));
    }
    let best = out.iter().min_by(|a, b| a.1.exponent.total_cmp(&b.1.exponent)).map(|(c, _)| c.variant).unwrap();
    Ok((best, out))
}
