//! Sine/cosine transforms on the truncated half-line, the boundary operator
//! `B = 1 + α∂x` and its inverse, the free groups `U_D(t)` and `U(t)`, the
//! phase/dilation factors of the factorization `U_D = −i·M·D_t·F_s·M`, and
//! the vector field `J = x + it∂x`.
//!
//! Conventions: `(F_s f)(p) = √(2/π)∫ sin(px) f(x) dx`, discretized as a
//! DST-I with trapezoid weights, so `F_s∘F_s = 1` exactly. The free
//! multiplier for `i u_t + ½u_xx = 0` is `e^{−ip²t/2}`.
//!
//! Fields with a nonzero boundary value are handled by subtracting a
//! "lift": a combination of `g_μ(x) = sinh(μ(L−x))/sinh(μL)` whose sine
//! transform `√(2/π)·p/(p²+μ²)` is exact on the grid wavenumbers. Matching
//! the even derivatives at `x = 0` leaves a remainder whose odd extension is
//! smooth, so its DST converges spectrally.

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid, Repr};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

const I: C64 = C64 { re: 0.0, im: 1.0 };

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

/// Unnormalized DST-I: `S_k = Σ_{j=1}^{n} v_j sin(πjk/(n+1))`, `k = 1..n`.
pub fn dst1(v: &[C64]) -> Vec<C64> {
    let n = v.len();
    let m = 2 * (n + 1);
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for (j, &x) in v.iter().enumerate() {
        buf[j + 1] = x;
        buf[m - j - 1] = -x;
    }
    plan(m).process(&mut buf);
    buf[1..=n].iter().map(|&a| 0.5 * I * a).collect()
}

/// Unnormalized DST-I used as a pure sine-series synthesis.
fn sine_sum(coeffs: &[C64]) -> Vec<C64> {
    dst1(coeffs)
}

/// Unnormalized DCT-I on `n+2` points with halved end weights:
/// `C_k = Σ_{j=0}^{n+1} w_j v_j cos(πjk/(n+1))`.
pub fn dct1(v: &[C64]) -> Vec<C64> {
    let np2 = v.len();
    let n = np2 - 2;
    let m = 2 * (n + 1);
    let mut buf = vec![C64::new(0.0, 0.0); m];
    buf[..np2].copy_from_slice(v);
    for j in 1..=n {
        buf[m - j] = v[j];
    }
    plan(m).process(&mut buf);
    buf[..np2].iter().map(|&a| 0.5 * a).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub alpha: f64,
}

impl OperatorParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::Config(format!("Robin coefficient must be finite and nonzero, got {alpha}")));
        }
        Ok(OperatorParams { alpha })
    }
}

fn norm_x(g: &Grid) -> f64 {
    (2.0 / PI).sqrt() * g.dx()
}

fn norm_p(g: &Grid) -> f64 {
    (2.0 / PI).sqrt() * g.dp()
}

/// Sine coefficients of a pure sine series sampled at the nodes.
pub fn sine_analysis(values: &[C64], g: &Grid) -> Vec<C64> {
    let c = norm_x(g);
    sine_sum(values).into_iter().map(|v| v * c).collect()
}

/// Values at the interior nodes of `√(2/π)·dp·Σ c_k sin(p_k x)`.
pub fn sine_synthesis(coeffs: &[C64], g: &Grid) -> Vec<C64> {
    let c = norm_p(g);
    sine_sum(coeffs).into_iter().map(|v| v * c).collect()
}

/// Values at `x_0..x_{n+1}` of `√(2/π)·dp·Σ' a_k cos(p_k x)` for `k = 0..n+1`
/// (trapezoid weights on the end modes).
pub fn cosine_synthesis(coeffs: &[C64], g: &Grid) -> Vec<C64> {
    let c = norm_p(g);
    dct1(coeffs).into_iter().map(|v| v * c).collect()
}

// ---------------------------------------------------------------------------
// boundary lifts

/// Even derivatives of a field at `x = 0`: `f(0)`, `f''(0)`, `f''''(0)`, ...
#[derive(Clone, Debug, PartialEq)]
pub struct Jets {
    pub d: Vec<C64>,
}

impl Jets {
    pub fn trace_only(d0: C64) -> Self {
        Jets { d: vec![d0] }
    }
    pub fn new(d: Vec<C64>) -> Self {
        assert!(!d.is_empty() && d.len() <= 6);
        Jets { d }
    }
}

/// Finite-difference weights (Fornberg) for derivatives `0..=m` at `z`.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len() - 1;
    let mut c = vec![vec![0.0; n + 1]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..=n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

const JET_STENCIL: usize = 13;
const JET_ORDERS: usize = 4;

/// Estimate `f''(0)`, `f''''(0)`, `f⁽⁶⁾(0)` from the trace and the first nodes.
pub fn estimate_jets(f: &ComplexField) -> Jets {
    let g = f.grid;
    let m = JET_STENCIL.min(g.n + 1);
    let xs: Vec<f64> = (0..m).map(|j| j as f64 * g.dx()).collect();
    let w = fd_weights(0.0, &xs, 2 * (JET_ORDERS - 1));
    let val = |j: usize| if j == 0 { f.trace } else { f.values[j - 1] };
    let mut d = vec![f.trace];
    for k in 1..JET_ORDERS {
        d.push((0..m).map(|j| val(j) * w[2 * k][j]).sum());
    }
    Jets { d }
}

const MU_CANDIDATES: [f64; 10] = [0.5, 1.0, 2.0, 3.0, 0.75, 1.5, 4.0, 0.35, 2.5, 5.0];

/// Decay rates for an `order`-term lift; `alpha` excludes rates where `B`
/// nearly annihilates `e^{±μx}`.
pub fn lift_mus(order: usize, alpha: Option<f64>) -> Vec<f64> {
    MU_CANDIDATES
        .iter()
        .copied()
        .filter(|&mu| alpha.map_or(true, |a| (1.0 - a * a * mu * mu).abs() >= 0.25))
        .take(order)
        .collect()
}

/// Combination of sinh profiles matching prescribed boundary jets.
#[derive(Clone, Debug)]
pub struct Lift {
    pub length: f64,
    pub mus: Vec<f64>,
    pub amps: Vec<C64>,
}

impl Lift {
    pub fn new(jets: &Jets, length: f64, alpha: Option<f64>) -> Lift {
        let order = jets.d.len();
        let mus = lift_mus(order, alpha);
        let s: Vec<f64> = mus.iter().map(|m| m * m).collect();
        // Σ_m a_m s_m^k = d_k: pair the data with the Lagrange basis in s
        let amps = (0..order)
            .map(|m| {
                let mut poly = vec![1.0];
                let mut den = 1.0;
                for (q, &sq) in s.iter().enumerate() {
                    if q == m {
                        continue;
                    }
                    let mut next = vec![0.0; poly.len() + 1];
                    for (k, &c) in poly.iter().enumerate() {
                        next[k + 1] += c;
                        next[k] -= c * sq;
                    }
                    poly = next;
                    den *= s[m] - sq;
                }
                poly.iter().zip(&jets.d).map(|(&c, &d)| d * c).sum::<C64>() / den
            })
            .collect();
        Lift { length, mus, amps }
    }

    pub fn is_zero(&self) -> bool {
        self.amps.iter().all(|a| a.norm() == 0.0)
    }

    fn ex(&self, mu: f64, x: f64) -> (f64, f64) {
        // (sinh(μ(L−x)), cosh(μ(L−x))) / sinh(μL), evaluated without overflow
        let l = self.length;
        let d = 1.0 - (-2.0 * mu * l).exp();
        let a = (-mu * x).exp();
        let b = (-mu * (2.0 * l - x)).exp();
        ((a - b) / d, (a + b) / d)
    }

    pub fn value(&self, x: f64) -> C64 {
        self.mus.iter().zip(&self.amps).map(|(&mu, &a)| a * self.ex(mu, x).0).sum()
    }

    pub fn deriv(&self, x: f64) -> C64 {
        self.mus.iter().zip(&self.amps).map(|(&mu, &a)| a * (-mu * self.ex(mu, x).1)).sum()
    }

    pub fn second_deriv(&self, x: f64) -> C64 {
        self.mus.iter().zip(&self.amps).map(|(&mu, &a)| a * (mu * mu * self.ex(mu, x).0)).sum()
    }

    /// Continuum-normalized sine transform at `p`.
    pub fn hat(&self, p: f64) -> C64 {
        let c = (2.0 / PI).sqrt();
        self.mus.iter().zip(&self.amps).map(|(&mu, &a)| a * (c * p / (p * p + mu * mu))).sum()
    }

    /// Particular solution `u` of `u + α u' = lift`.
    pub fn binv(&self, alpha: f64, x: f64) -> C64 {
        self.mus
            .iter()
            .zip(&self.amps)
            .map(|(&mu, &a)| {
                let (s, c) = self.ex(mu, x);
                a * ((s + alpha * mu * c) / (1.0 - alpha * alpha * mu * mu))
            })
            .sum()
    }

    pub fn binv_deriv(&self, alpha: f64, x: f64) -> C64 {
        self.mus
            .iter()
            .zip(&self.amps)
            .map(|(&mu, &a)| {
                let (s, c) = self.ex(mu, x);
                a * (-mu * (c + alpha * mu * s) / (1.0 - alpha * alpha * mu * mu))
            })
            .sum()
    }
}

/// A field split as `lift + r` with `r(0) = 0` and `r` stored by its sine
/// coefficients.
#[derive(Clone, Debug)]
pub struct Lifted {
    pub lift: Lift,
    pub rhat: Vec<C64>,
}

impl Lifted {
    pub fn new(f: &ComplexField, jets: Jets, alpha: Option<f64>) -> Lifted {
        let g = f.grid;
        let lift = Lift::new(&jets, g.length, alpha);
        let r: Vec<C64> = if lift.is_zero() {
            f.values.clone()
        } else {
            f.values.iter().enumerate().map(|(j, &v)| v - lift.value(g.x(j + 1))).collect()
        };
        Lifted { lift, rhat: sine_analysis(&r, &g) }
    }

    /// Continuum-accurate sine coefficients of the whole field.
    pub fn coefficients(&self, g: &Grid) -> Vec<C64> {
        self.rhat.iter().enumerate().map(|(k, &r)| r + self.lift.hat(g.p(k + 1))).collect()
    }
}

fn check_physical(f: &ComplexField) -> Result<()> {
    f.expect(Repr::Physical)
}

/// Sine coefficients of a physical field, boundary value handled by a lift
/// with estimated jets.
pub fn sine_coefficients(f: &ComplexField) -> Result<Vec<C64>> {
    check_physical(f)?;
    Ok(Lifted::new(f, estimate_jets(f), None).coefficients(&f.grid))
}

/// Same with caller-supplied jets.
pub fn sine_coefficients_with(f: &ComplexField, jets: Jets) -> Result<Vec<C64>> {
    check_physical(f)?;
    Ok(Lifted::new(f, jets, None).coefficients(&f.grid))
}

// ---------------------------------------------------------------------------
// transforms

/// `F_s` in the symmetric convention. Physical → sine spectrum uses the
/// trapezoid rule on the nodes (the boundary value drops out since
/// `sin(0) = 0`); sine spectrum → physical is the inverse series. The map
/// is an involution on the sample vectors.
pub fn fourier_sine(f: &ComplexField) -> Result<ComplexField> {
    let g = f.grid;
    match f.repr {
        Repr::Physical => {
            check_physical(f)?;
            Ok(ComplexField { grid: g, values: sine_analysis(&f.values, &g), trace: C64::new(0.0, 0.0), time: f.time, repr: Repr::SineSpectral })
        }
        Repr::SineSpectral => {
            f.expect(Repr::SineSpectral)?;
            Ok(ComplexField { grid: g, values: sine_synthesis(&f.values, &g), trace: C64::new(0.0, 0.0), time: f.time, repr: Repr::Physical })
        }
        Repr::CosineSpectral => Err(Error::Usage("fourier_sine cannot take a cosine spectrum".into())),
    }
}

/// `F_c` companion: DCT-I on `[f(0), f_1..f_n, 0]`, giving `n+2` modes
/// `p_0..p_{n+1}`. Trapezoid weights on both sides make it unitary and
/// involutive.
pub fn fourier_cosine(f: &ComplexField) -> Result<ComplexField> {
    let g = f.grid;
    match f.repr {
        Repr::Physical => {
            check_physical(f)?;
            let c = norm_x(&g);
            let values = dct1(&f.with_ends()).into_iter().map(|v| v * c).collect();
            Ok(ComplexField { grid: g, values, trace: C64::new(0.0, 0.0), time: f.time, repr: Repr::CosineSpectral })
        }
        Repr::CosineSpectral => {
            f.expect(Repr::CosineSpectral)?;
            let v = cosine_synthesis(&f.values, &g);
            Ok(ComplexField { grid: g, values: v[1..=g.n].to_vec(), trace: v[0], time: f.time, repr: Repr::Physical })
        }
        Repr::SineSpectral => Err(Error::Usage("fourier_cosine cannot take a sine spectrum".into())),
    }
}

/// Spectral `∂x` of a physical field (lift with estimated jets, remainder
/// differentiated term by term as a cosine series).
pub fn derivative(f: &ComplexField) -> Result<ComplexField> {
    check_physical(f)?;
    derivative_with(f, estimate_jets(f))
}

pub fn derivative_with(f: &ComplexField, jets: Jets) -> Result<ComplexField> {
    check_physical(f)?;
    let g = f.grid;
    let lf = Lifted::new(f, jets, None);
    let mut a = vec![C64::new(0.0, 0.0); g.n + 2];
    for k in 1..=g.n {
        a[k] = lf.rhat[k - 1] * g.p(k);
    }
    let d = cosine_synthesis(&a, &g);
    let values = (1..=g.n).map(|j| d[j] + lf.lift.deriv(g.x(j))).collect();
    Ok(ComplexField { grid: g, values, trace: d[0] + lf.lift.deriv(0.0), time: f.time, repr: Repr::Physical })
}

/// Spectral `∂x²`; the lift matches `f''(0)` so the remainder is a clean
/// sine series.
pub fn second_derivative(f: &ComplexField) -> Result<ComplexField> {
    check_physical(f)?;
    let g = f.grid;
    let jets = estimate_jets(f);
    let lf = Lifted::new(f, jets, None);
    let s: Vec<C64> = (1..=g.n).map(|k| -lf.rhat[k - 1] * g.p(k).powi(2)).collect();
    let d = sine_synthesis(&s, &g);
    let values = (1..=g.n).map(|j| d[j - 1] + lf.lift.second_deriv(g.x(j))).collect();
    Ok(ComplexField { grid: g, values, trace: lf.lift.second_deriv(0.0), time: f.time, repr: Repr::Physical })
}

pub fn apply_b(f: &ComplexField, op: OperatorParams) -> Result<ComplexField> {
    let d = derivative(f)?;
    Ok(f.add(&d.scale(C64::new(op.alpha, 0.0))))
}

/// `Σ_k c_k φ_k(x)` with `φ_k = B⁻¹ sin(p_k x) = (sin p_k x − α p_k cos p_k x)/(1 + α²p_k²)`,
/// continuum-normalized (`√(2/π)·dp` prefactor). Returns values at the
/// interior nodes and the boundary value.
pub fn robin_synthesis(c: &[C64], g: &Grid, alpha: f64) -> (Vec<C64>, C64) {
    let n = g.n;
    let mut s = vec![C64::new(0.0, 0.0); n];
    let mut a = vec![C64::new(0.0, 0.0); n + 2];
    for k in 1..=n {
        let p = g.p(k);
        let w = c[k - 1] / (1.0 + alpha * alpha * p * p);
        s[k - 1] = w;
        a[k] = -alpha * p * w;
    }
    let sv = sine_synthesis(&s, g);
    let cv = cosine_synthesis(&a, g);
    ((0..n).map(|j| sv[j] + cv[j + 1]).collect(), cv[0])
}

/// `Σ_k c_k φ_k'(x)`.
pub fn robin_synthesis_derivative(c: &[C64], g: &Grid, alpha: f64) -> (Vec<C64>, C64) {
    let n = g.n;
    let mut s = vec![C64::new(0.0, 0.0); n];
    let mut a = vec![C64::new(0.0, 0.0); n + 2];
    for k in 1..=n {
        let p = g.p(k);
        let w = c[k - 1] * p / (1.0 + alpha * alpha * p * p);
        a[k] = w;
        s[k - 1] = alpha * p * w;
    }
    let sv = sine_synthesis(&s, g);
    let cv = cosine_synthesis(&a, g);
    ((0..n).map(|j| sv[j] + cv[j + 1]).collect(), cv[0])
}

/// Squared L² norm of a Robin series, exact for the continuum functions.
pub fn robin_mass(c: &[C64], g: &Grid, alpha: f64) -> f64 {
    g.dp() * (1..=g.n).map(|k| c[k - 1].norm_sqr() / (1.0 + alpha * alpha * g.p(k).powi(2))).sum::<f64>()
}

/// `B⁻¹` through the multiplier `1/(1 + iαp)` in mixed sine/cosine form,
/// with the boundary value lifted out using estimated jets.
pub fn apply_b_inverse(v: &ComplexField, op: OperatorParams) -> Result<ComplexField> {
    check_physical(v)?;
    apply_b_inverse_with(v, op, estimate_jets(v))
}

pub fn apply_b_inverse_with(v: &ComplexField, op: OperatorParams, jets: Jets) -> Result<ComplexField> {
    check_physical(v)?;
    let g = v.grid;
    let lf = Lifted::new(v, jets, Some(op.alpha));
    let (mut vals, mut tr) = robin_synthesis(&lf.rhat, &g, op.alpha);
    if !lf.lift.is_zero() {
        for (j, x) in vals.iter_mut().enumerate() {
            *x += lf.lift.binv(op.alpha, g.x(j + 1));
        }
        tr += lf.lift.binv(op.alpha, 0.0);
    }
    Ok(ComplexField { grid: g, values: vals, trace: tr, time: v.time, repr: Repr::Physical })
}

fn free_multiplier(g: &Grid, k: usize, t: f64) -> C64 {
    C64::from_polar(1.0, -0.5 * g.p(k).powi(2) * t)
}

/// `U(t) = B⁻¹ F_s e^{−ip²t/2} F_s B`.
pub fn free_evolution_robin(f: &ComplexField, t: f64, op: OperatorParams) -> Result<ComplexField> {
    check_physical(f)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let g = f.grid;
    let v = apply_b(f, op)?;
    let c: Vec<C64> = sine_coefficients(&v)?.into_iter().enumerate().map(|(k, c)| c * free_multiplier(&g, k + 1, t)).collect();
    let (values, trace) = robin_synthesis(&c, &g, op.alpha);
    Ok(ComplexField { grid: g, values, trace, time: f.time + t, repr: Repr::Physical })
}

/// `U_D(t) = F_s e^{−ip²t/2} F_s` (Dirichlet group, method of images).
pub fn free_evolution_dirichlet(f: &ComplexField, t: f64) -> Result<ComplexField> {
    check_physical(f)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let g = f.grid;
    let c: Vec<C64> = sine_coefficients(f)?.into_iter().enumerate().map(|(k, c)| c * free_multiplier(&g, k + 1, t)).collect();
    Ok(ComplexField { grid: g, values: sine_synthesis(&c, &g), trace: C64::new(0.0, 0.0), time: f.time + t, repr: Repr::Physical })
}

/// `J f = x f + i t ∂x f`; at `t = 0` plain multiplication by `x`.
pub fn apply_j(f: &ComplexField, t: f64) -> Result<ComplexField> {
    check_physical(f)?;
    let xf = f.map(|x, v| v * x);
    if t == 0.0 {
        return Ok(xf);
    }
    let d = derivative(f)?;
    Ok(xf.add(&d.scale(I * t)))
}

/// `M(t) f = e^{ix²/2t} f`.
pub fn multiply_m(f: &ComplexField, t: f64) -> Result<ComplexField> {
    check_physical(f)?;
    if t == 0.0 {
        return Err(Error::Domain("M(t) is undefined at t = 0".into()));
    }
    Ok(f.map(|x, v| v * C64::from_polar(1.0, x * x / (2.0 * t))))
}

/// `(it)^{−1/2}` on the principal branch.
pub fn it_inv_sqrt(t: f64) -> C64 {
    (I * t).sqrt().inv()
}

/// Evaluate a physical field between nodes by its lifted sine series;
/// zero beyond `L`.
pub fn interpolate(f: &ComplexField, ys: &[f64]) -> Result<Vec<C64>> {
    check_physical(f)?;
    let g = f.grid;
    let lf = Lifted::new(f, estimate_jets(f), None);
    let c = norm_p(&g);
    Ok(ys
        .par_iter()
        .map(|&y| {
            if y >= g.length || y < 0.0 {
                return C64::new(0.0, 0.0);
            }
            let mut s = C64::new(0.0, 0.0);
            for k in 1..=g.n {
                s += lf.rhat[k - 1] * (g.p(k) * y).sin();
            }
            s * c + lf.lift.value(y)
        })
        .collect())
}

/// `D_t f(x) = (it)^{−1/2} f(x/t)`, resampled by band-limited
/// interpolation. L²-unitary for fields supported in `[0, tL]`.
pub fn dilation(f: &ComplexField, t: f64) -> Result<ComplexField> {
    if t <= 0.0 {
        return Err(Error::Domain(format!("dilation needs t > 0, got {t}")));
    }
    let g = f.grid;
    let mut ys: Vec<f64> = vec![0.0];
    ys.extend((1..=g.n).map(|j| g.x(j) / t));
    let v = interpolate(f, &ys)?;
    let c = it_inv_sqrt(t);
    Ok(ComplexField { grid: g, values: v[1..].iter().map(|&x| x * c).collect(), trace: v[0] * c, time: f.time, repr: Repr::Physical })
}

/// Sine transform of the node samples evaluated at arbitrary `ξ`
/// (trapezoid sum, i.e. the band-limited interpolant of the DST).
pub fn sine_transform_at(f: &ComplexField, xis: &[f64]) -> Vec<C64> {
    let g = f.grid;
    let c = norm_x(&g);
    xis.par_iter()
        .map(|&xi| {
            let mut s = C64::new(0.0, 0.0);
            for j in 1..=g.n {
                s += f.values[j - 1] * (xi * g.x(j)).sin();
            }
            s * c
        })
        .collect()
}

/// `U(t) f` assembled as `B⁻¹ (−i) M D_t F_s M B f`. The dilation and the
/// off-grid sine transform are fused: `F_s[MBf]` is evaluated directly at
/// `ξ = x/t`.
pub fn mdtfm_factorization(f: &ComplexField, t: f64, op: OperatorParams) -> Result<ComplexField> {
    check_physical(f)?;
    if t <= 0.0 {
        return Err(Error::Domain(format!("factorization needs t > 0, got {t}")));
    }
    let g = f.grid;
    let v = apply_b(f, op)?;
    let mv = multiply_m(&v, t)?;
    let xis: Vec<f64> = (1..=g.n).map(|j| g.x(j) / t).collect();
    let fs = sine_transform_at(&mv, &xis);
    let c = -I * it_inv_sqrt(t);
    let values: Vec<C64> = (1..=g.n).map(|j| fs[j - 1] * c * C64::from_polar(1.0, g.x(j).powi(2) / (2.0 * t))).collect();
    let ud = ComplexField { grid: g, values, trace: C64::new(0.0, 0.0), time: f.time + t, repr: Repr::Physical };
    apply_b_inverse_with(&ud, op, Jets::trace_only(C64::new(0.0, 0.0)))
}
