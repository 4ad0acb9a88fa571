mod common;

use common::{geomspace, random_smooth};
use halfline::analysis::*;
use halfline::forcing::BoundaryData;
use halfline::solver::{solve, Method, SolverOptions};
use halfline::spectral::{apply_b, sine_coefficients, OperatorParams};
use halfline::trajectory::{ModelParams, Trajectory};
use halfline::{ComplexField, Error, Grid};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

const ALPHA: f64 = -1.0;

fn bump(g: Grid, eps: f64, x0: f64) -> ComplexField {
    ComplexField::from_fn(g, 0.0, |x| C64::new(eps * (x / x0).powi(2) * (-(x - x0).powi(2) / 4.0).exp(), 0.0))
}

fn linear_run(u0: ComplexField, h: &BoundaryData, t_end: f64, dt: f64, stride: usize) -> Trajectory {
    let p = ModelParams::new(C64::new(0.0, 0.0), 3.0, ALPHA, u0).unwrap();
    solve(&p, h, &SolverOptions::new(Method::SteppedDuhamel, t_end, dt).with_stride(stride)).unwrap()
}

#[test]
fn zero_field_gives_zero_report() {
    let g = Grid::new(20.0, 255).unwrap();
    let r = compute_norms(&ComplexField::zeros(g, 0.0), 1.5, None, 0.2, None).unwrap();
    for v in [r.l2, r.linf, r.h10, r.h01, r.jnorm, r.h20, r.xnorm] {
        assert_eq!(v, 0.0);
    }
    assert!(r.dt_norm.is_none());
}

#[test]
fn gaussian_mass_matches_closed_form() {
    let g = Grid::new(40.0, 1023).unwrap();
    let u = ComplexField::from_fn(g, 0.0, |x| C64::new((-x * x).exp(), 0.0));
    let r = compute_norms(&u, 1.0, None, 0.2, None).unwrap();
    let exact = (PI / 8.0).powf(0.25);
    assert!((r.l2 - exact).abs() / exact < 1e-6, "{} vs {exact}", r.l2);
    // ‖x e^{−x²}‖² = √π/(8√2) on the half-line
    let xm = (PI.sqrt() / (8.0 * 2f64.sqrt())).sqrt();
    assert!((r.x_norm - xm).abs() / xm < 1e-6);
    assert!(r.h10 >= r.l2 && r.h01 >= r.l2);
}

#[test]
fn x_norm_combines_the_weighted_pieces() {
    let g = Grid::new(40.0, 511).unwrap();
    let u = bump(g, 0.3, 8.0);
    let (t, gamma) = (3.0, 0.25);
    let d = u.scale(C64::new(0.0, 0.5));
    let r = compute_norms(&u, t, Some(&d), gamma, None).unwrap();
    let b = (1.0f64 + t * t).sqrt();
    let x2 = r.l2.powi(2) + r.dx_norm.powi(2) + r.h20.powi(2) + r.dt_norm.unwrap().powi(2);
    let expect = (b.powf(-2.0 * gamma) * x2 + b.powf(-0.5 + 2.0 * gamma) * r.jnorm.powi(2) + b * r.linf.powi(2)).sqrt();
    assert!((r.xnorm - expect).abs() < 1e-14 * expect);
    assert!((r.dt_norm.unwrap() - 0.5 * r.l2).abs() < 1e-14);
}

#[test]
fn band_weights() {
    for beta in [0.6, 0.75, 0.8, 0.95] {
        let w = BandWeights { beta, power: 4.0, eps: 0.01 };
        for t in [0.5, 3.0, 50.0] {
            assert!(w.psi(t) <= w.phi(t) + 1e-15 || beta == 0.75 && t < 2.0);
        }
    }
    let w = BandWeights { beta: 0.6, power: 4.0, eps: 0.01 };
    assert!((w.phi(10.0) - 101.0f64.powf(0.075)).abs() < 1e-13);
    assert_eq!(w.gamma1(), 0.0);
    let w = BandWeights { beta: 0.75, power: 4.0, eps: 0.01 };
    assert!((w.phi(10.0) - w.psi(10.0).powi(2)).abs() < 1e-14);
    let edge = BandWeights { beta: 0.5 + 1.0 / 3.0, power: 4.0, eps: 0.01 };
    assert!((edge.gamma1() - 0.01f64.powf(2.0)).abs() < 1e-16);
    assert_eq!(BandWeights { beta: 0.9, power: 4.0, eps: 0.01 }.phi(7.0), 1.0);
}

#[test]
fn time_derivative_is_exact_for_quadratic_motion() {
    let g = Grid::new(20.0, 127).unwrap();
    let f = bump(g, 1.0, 5.0);
    let p = ModelParams::new(C64::new(0.0, 0.0), 3.0, ALPHA, f.clone()).unwrap();
    let mut tr = Trajectory::new("synthetic", p, BoundaryData::zero(), 0.1);
    let q = |t: f64| C64::new(1.0 + 0.5 * t - 0.3 * t * t, 0.2 * t);
    let dq = |t: f64| C64::new(0.5 - 0.6 * t, 0.2);
    let ts = [0.0, 0.1, 0.35, 0.5, 1.0, 1.2];
    for &t in &ts {
        tr.push(t, f.scale(q(t)), ComplexField::zeros(g, t));
    }
    for (s, d) in tr.snapshots.iter().zip(time_derivatives(&tr)) {
        let err = d.unwrap().sub(&f.scale(dq(s.t))).linf_norm();
        assert!(err < 1e-12, "t = {}: {err:e}", s.t);
    }
    let reports = norm_series(&tr, 0.2, None).unwrap();
    assert!(reports.iter().all(|r| r.dt_norm.is_some()));
    let run = running_x_norm(&reports);
    assert!(run.windows(2).all(|w| w[1] >= w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norms_are_homogeneous(seed in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let g = Grid::new(30.0, 255).unwrap();
        let u = random_smooth(g, seed);
        let c = C64::new(re, im);
        let a = compute_norms(&u, 1.3, Some(&u), 0.2, Some(BandWeights { beta: 0.8, power: 4.0, eps: 0.01 })).unwrap();
        let cu = u.scale(c);
        let b = compute_norms(&cu, 1.3, Some(&cu), 0.2, Some(BandWeights { beta: 0.8, power: 4.0, eps: 0.01 })).unwrap();
        let m = c.norm();
        for (x, y) in [(a.l2, b.l2), (a.linf, b.linf), (a.h10, b.h10), (a.h01, b.h01), (a.jnorm, b.jnorm), (a.h20, b.h20), (a.xnorm, b.xnorm), (a.y_norm.unwrap(), b.y_norm.unwrap())] {
            prop_assert!((m * x - y).abs() <= 1e-12 * (m * x).max(1e-300));
        }
    }

    #[test]
    fn lemma_one_one_holds_on_random_fields(seed in 0u64..10_000) {
        let g = Grid::new(30.0, 511).unwrap();
        let u = random_smooth(g, seed);
        for t in [0.5, 1.0, 2.0] {
            let r = compute_norms(&u, t, None, 0.2, None).unwrap();
            prop_assert!(r.lemma11_holds(1e-9), "t = {t}: {r:?}");
        }
    }

    #[test]
    fn decay_fit_ignores_rescaling(c in 1e-3f64..1e3, slope in -2.0f64..0.5) {
        let ts = geomspace(1.0, 100.0, 40);
        let s: Vec<(f64, f64)> = ts.iter().map(|&t| (t, t.powf(slope) * (1.0 + 0.05 * t.ln().sin()))).collect();
        let sc: Vec<(f64, f64)> = s.iter().map(|&(t, v)| (t, c * v)).collect();
        let a = fit_decay_exponent(&s, (1.0, 100.0)).unwrap();
        let b = fit_decay_exponent(&sc, (1.0, 100.0)).unwrap();
        prop_assert!((a.exponent - b.exponent).abs() < 1e-12);
    }
}

#[test]
fn exact_power_law_is_recovered() {
    let s: Vec<(f64, f64)> = geomspace(1.0, 1000.0, 30).into_iter().map(|t| (t, t.powf(-0.5))).collect();
    let f = fit_decay_exponent(&s, (2.0, 500.0)).unwrap();
    assert!((f.exponent + 0.5).abs() < 1e-12);
    assert!(f.residual_rms < 1e-12);
    assert!(f.t_min >= 2.0 && f.t_max <= 500.0 && f.t_min < f.t_max);
}

#[test]
fn perturbed_power_law() {
    let s: Vec<(f64, f64)> = geomspace(1.0, 1000.0, 60).into_iter().map(|t| (t, t.powf(-0.5) * (1.0 + 0.1 * t.ln().sin()))).collect();
    let f = fit_decay_exponent(&s, (1.0, 1000.0)).unwrap();
    assert!((f.exponent + 0.5).abs() < 0.05, "{f:?}");
    assert!(f.half_width > 0.0);
}

#[test]
fn decay_fit_rejects_thin_windows() {
    let s: Vec<(f64, f64)> = geomspace(1.0, 100.0, 30).into_iter().map(|t| (t, 1.0 / t)).collect();
    assert!(matches!(fit_decay_exponent(&s, (50.0, 100.0)), Err(Error::Config(_))));
    assert!(matches!(fit_decay_exponent(&s, (10.0, 5.0)), Err(Error::Config(_))));
    let bad: Vec<(f64, f64)> = s.iter().map(|&(t, v)| (t, if t > 50.0 { 0.0 } else { v })).collect();
    assert!(fit_decay_exponent(&bad, (1.0, 100.0)).is_err());
}

#[test]
fn free_flow_decays_like_inverse_root() {
    let g = Grid::new(400.0, 4095).unwrap();
    let u0 = ComplexField::from_fn(g, 0.0, |x| C64::new(x * x * (-x * x).exp(), 0.0));
    let tr = linear_run(u0, &BoundaryData::zero(), 100.0, 0.5, 2);
    let s: Vec<(f64, f64)> = tr.snapshots.iter().map(|s| (s.t, s.u.linf_norm())).collect();
    let f = fit_decay_exponent(&s, (10.0, 100.0)).unwrap();
    assert!((f.exponent + 0.5).abs() < 0.05, "{f:?}");
}

// --- scattering -------------------------------------------------------------

#[test]
fn scattering_needs_horizon_and_cubic_power() {
    let g = Grid::new(40.0, 255).unwrap();
    let tr = linear_run(bump(g, 0.1, 8.0), &BoundaryData::zero(), 5.0, 0.05, 20);
    assert!(matches!(extract_scattering_profile(&tr, ScatterOptions::default()), Err(Error::Config(_))));
    let mut tr4 = linear_run(bump(g, 0.1, 8.0), &BoundaryData::zero(), 20.0, 0.05, 40);
    tr4.params.power = 4.0;
    assert!(matches!(extract_scattering_profile(&tr4, ScatterOptions::default()), Err(Error::Config(_))));
}

#[test]
fn free_profile_is_frozen() {
    let g = Grid::new(80.0, 1023).unwrap();
    let u0 = bump(g, 0.5, 10.0);
    let tr = linear_run(u0.clone(), &BoundaryData::zero(), 20.0, 0.05, 20);
    let sc = extract_scattering_profile(&tr, ScatterOptions::default()).unwrap();
    assert!(sc.psi_variation() <= 1e-8, "{:e}", sc.psi_variation());
    let op = OperatorParams::new(ALPHA).unwrap();
    let direct = sine_coefficients(&apply_b(&u0, op).unwrap()).unwrap();
    for (k, p) in sc.psi_plus.iter().enumerate() {
        assert!((p - direct[k]).norm() < 1e-8);
    }
    assert!(sc.a.iter().all(|a| a.norm() == 0.0));
    // the limit vanishes at ξ = 0
    assert_eq!(sc.limit_at(0.0).0, C64::new(0.0, 0.0));
}

#[test]
fn boundary_part_two_routes() {
    // F_s B U(−t) z from the stored z against A + B(t) from the forcing alone
    let g = Grid::new(160.0, 4095).unwrap();
    let h = BoundaryData::theorem4(1e-2, 0.2);
    let tr = linear_run(ComplexField::zeros(g, 0.0), &h, 20.0, 0.02, 250);
    let sc = extract_scattering_profile(&tr, ScatterOptions { xi_max: 3.0, ..Default::default() }).unwrap();
    let op = OperatorParams::new(ALPHA).unwrap();
    for (i, s) in tr.snapshots.iter().enumerate().skip(1) {
        let c = sine_coefficients(&apply_b(&s.z, op).unwrap()).unwrap();
        let mut worst: f64 = 0.0;
        let mut size: f64 = 0.0;
        for (k, &xi) in sc.xi.iter().enumerate() {
            let route = c[k] * C64::from_polar(1.0, 0.5 * xi * xi * s.t);
            let ab = sc.a[k] + sc.b[i][k];
            worst = worst.max((route - ab).norm());
            size = size.max(ab.norm());
        }
        assert!(worst < 1e-3 * size, "t = {}: {worst:e} vs {size:e}", s.t);
    }
    // with no nonlinearity the profile is φ + A with φ ≡ 0
    for (p, a) in sc.psi_plus.iter().zip(&sc.a) {
        assert!((p - a).norm() < 1e-12);
    }
}

#[test]
fn boundary_profile_matches_a_direct_integral() {
    let h = BoundaryData::theorem4(1.0, 0.3);
    let xi = [0.3, 1.0, 2.5];
    let a = boundary_profile(&h, &xi);
    for (k, &x) in xi.iter().enumerate() {
        // brute force: Simpson on [0, 4000] plus two terms by parts
        let w = 0.5 * x * x;
        let (tmax, n) = (4000.0, 4_000_000);
        let d = tmax / n as f64;
        let f = |t: f64| C64::from_polar(1.0, w * t) * h.h(t);
        let mut s = f(0.0) + f(tmax);
        for j in 1..n {
            s += f(j as f64 * d) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        let iw = C64::new(0.0, w);
        let tail = -C64::from_polar(1.0, w * tmax) * (h.h(tmax) / iw - h.dh(tmax) / (iw * iw));
        let s = s * d / 3.0 + tail;
        let d = 1.0;
        let direct = C64::new(0.0, x / (2.0 * PI).sqrt()) * s * d;
        assert!((a[k] - direct).norm() < 1e-6 * direct.norm().max(1e-3), "ξ = {x}: {} vs {direct}", a[k]);
    }
}

#[test]
fn linear_free_asymptotics() {
    let g = Grid::new(400.0, 4095).unwrap();
    let tr = linear_run(bump(g, 0.5, 3.0), &BoundaryData::zero(), 60.0, 0.25, 4);
    let robin = extract_scattering_profile(&tr, ScatterOptions { xi_max: 6.0, ..Default::default() }).unwrap();
    let res = asymptotic_residual(&tr, &robin);
    let s: Vec<(f64, f64)> = res.iter().map(|r| (r.t, r.residual)).collect();
    let f = fit_decay_exponent(&s, (10.0, 60.0)).unwrap();
    assert!(f.exponent <= -0.5, "{f:?}");
    let last = res.last().unwrap();
    assert!(last.modulus_residual < 0.1 * last.sup_u, "{last:?}");

    // without the 1/(1 + iαξ) factor the relative error does not shrink
    let stated = extract_scattering_profile(&tr, ScatterOptions { xi_max: 6.0, form: AsymptoticForm::Stated, ..Default::default() }).unwrap();
    let res_s = asymptotic_residual(&tr, &stated);
    let (first, last_s) = (&res_s[res_s.len() / 4], res_s.last().unwrap());
    assert!(last_s.residual / last_s.sup_u > 0.5 * first.residual / first.sup_u);
    assert!(last.residual < 0.5 * last_s.residual);
}

// --- Λ ----------------------------------------------------------------------

fn statement_at_zero(beta: f64) -> C64 {
    let b = statrs::function::beta::beta(1.0 - beta, 0.5);
    let i = C64::new(0.0, 1.0);
    C64::new(b, 0.0) / (i * (2.0 * i * PI).sqrt())
}

#[test]
fn lambda_at_zero_against_beta_integral() {
    for beta in [0.2, 0.5, 0.8, 0.9] {
        let l = lambda_profile(0.0, beta, ALPHA, LambdaVariant::Statement).unwrap();
        let oracle = statement_at_zero(beta);
        assert!((l.value - oracle).norm() < 1e-8, "β = {beta}: {} vs {oracle}", l.value);
    }
    let m = lambda_profile(0.0, 0.8, ALPHA, LambdaVariant::Statement).unwrap().value.norm();
    assert!((m - statrs::function::beta::beta(0.2, 0.5) / (2.0 * PI).sqrt()).abs() < 1e-8);
    assert_eq!(lambda_profile(0.0, 0.8, ALPHA, LambdaVariant::ClosingDisplay).unwrap().value, C64::new(0.0, 0.0));
    assert_eq!(lambda_profile(0.0, 0.8, ALPHA, LambdaVariant::Similarity).unwrap().value, C64::new(1.0, 0.0));
}

#[test]
fn lambda_rejects_beta_outside_unit_interval() {
    for beta in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
        assert!(matches!(lambda_profile(1.0, beta, ALPHA, LambdaVariant::Statement), Err(Error::Domain(_))));
    }
    assert!(matches!(lambda_profile(-1.0, 0.5, ALPHA, LambdaVariant::Statement), Err(Error::Domain(_))));
}

/// `∫₁^∞ s^{−3/2+e}(1−1/s)^{−β}g(s)e^{iks}ds` by `s = 1 + v^{1/(1−β)}`,
/// composite Simpson up to `s_max`, and a two-term tail by parts.
fn brute_force(xi: f64, beta: f64, variant: LambdaVariant) -> C64 {
    let k = 0.5 * xi * xi;
    let q = 1.0 / (1.0 - beta);
    let amp = |s: f64| -> C64 {
        // y^{−β}·dy/ds without the (s−1)^{−β} factor, times the variant's extras
        let base = s.powf(beta - 2.0);
        match variant {
            LambdaVariant::Statement => C64::new(base * s.sqrt(), 0.0),
            LambdaVariant::ClosingDisplay => base * s.sqrt() * xi / C64::new(2.0 / s, -ALPHA * xi),
            LambdaVariant::Similarity => C64::new(base * s.powf(1.5) * xi, 0.0),
        }
    };
    let s_max: f64 = if xi > 5.0 { 200.0 } else { 4000.0 };
    let v_max = (s_max - 1.0).powf(1.0 - beta);
    let n = 4_000_000usize;
    let d = v_max / n as f64;
    let f = |v: f64| {
        let s = 1.0 + v.powf(q);
        q * amp(s) * C64::from_polar(1.0, k * s)
    };
    let mut acc = f(0.0) + f(v_max);
    for j in 1..n {
        acc += f(j as f64 * d) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    let body = acc * d / 3.0;
    let g = |s: f64| amp(s) * (s - 1.0).powf(-beta);
    let e = 1e-4 * s_max;
    let dg = (g(s_max + e) - g(s_max - e)) / (2.0 * e);
    let ik = C64::new(0.0, k);
    let tail = -C64::from_polar(1.0, k * s_max) * (g(s_max) / ik - dg / (ik * ik));
    let i = C64::new(0.0, 1.0);
    let pref = match variant {
        LambdaVariant::Similarity => (2.0 * PI * i).sqrt().inv(),
        _ => (i * (2.0 * i * PI).sqrt()).inv(),
    };
    pref * (body + tail)
}

#[test]
fn lambda_against_brute_force_quadrature() {
    for variant in LambdaVariant::ALL {
        for (xi, beta) in [(1.0, 0.8), (2.0, 0.5), (20.0, 0.8), (1.5, 0.9)] {
            let l = lambda_profile(xi, beta, ALPHA, variant).unwrap();
            let b = brute_force(xi, beta, variant);
            assert!((l.value - b).norm() < 1e-6 * b.norm().max(1.0), "{variant:?} ξ = {xi} β = {beta}: {} vs {b}", l.value);
        }
    }
}

#[test]
fn lambda_tolerance_self_check() {
    for variant in LambdaVariant::ALL {
        for xi in [0.5, 3.0, 12.0] {
            let a = lambda_profile_tol(xi, 0.8, ALPHA, variant, 1e-8).unwrap();
            let b = lambda_profile_tol(xi, 0.8, ALPHA, variant, 5e-9).unwrap();
            assert!((a.value - b.value).norm() <= a.error.max(1e-13), "{variant:?} ξ = {xi}: {:e} > {:e}", (a.value - b.value).norm(), a.error);
        }
    }
}

#[test]
fn statement_profile_follows_its_endpoint_asymptote() {
    // the y = 0 endpoint dominates: |Λ(ξ)| ≈ Γ(1−β)(ξ²/2)^{β−1}/√(2π)
    let beta = 0.8;
    let mut last = f64::INFINITY;
    for xi in [5.0, 20.0, 80.0] {
        let m = lambda_profile(xi, beta, ALPHA, LambdaVariant::Statement).unwrap().value.norm();
        let asym = statrs::function::gamma::gamma(1.0 - beta) * (0.5 * xi * xi).powf(beta - 1.0) / (2.0 * PI).sqrt();
        assert!((m - asym).abs() < 0.05 * asym, "ξ = {xi}: {m} vs {asym}");
        assert!(m < last);
        last = m;
    }
}

#[test]
#[ignore = "|Λ(ξ)| decays only like ξ^{2(β−1)}; at β = 0.8 the ratio |Λ(20)|/|Λ(0)| is 0.25"]
fn statement_profile_drops_tenfold_by_twenty() {
    let z = lambda_profile(0.0, 0.8, ALPHA, LambdaVariant::Statement).unwrap().value.norm();
    let m = lambda_profile(20.0, 0.8, ALPHA, LambdaVariant::Statement).unwrap().value.norm();
    assert!(m < z / 10.0, "{m} vs {z}");
}

// --- profile check ------------------------------------------------------------

#[test]
fn profile_check_with_zero_amplitude() {
    let g = Grid::new(60.0, 511).unwrap();
    let h = BoundaryData::theorem8(0.0, 0.9);
    let p = ModelParams::new(C64::new(1.0, 0.0), 4.0, ALPHA, ComplexField::zeros(g, 0.0)).unwrap();
    let tr = solve(&p, &h, &SolverOptions::new(Method::SteppedDuhamel, 5.0, 0.05).with_stride(20)).unwrap();
    let c = theorem8_profile_check(&tr, LambdaVariant::Statement, &[0.0, 0.5, 1.0]).unwrap();
    assert!(c.in_band);
    assert!(!c.samples.is_empty());
    assert!(c.samples.iter().all(|s| s.sup_diff <= 1e-12));
}

#[test]
fn profile_check_needs_profile_forcing() {
    let g = Grid::new(40.0, 255).unwrap();
    let tr = linear_run(ComplexField::zeros(g, 0.0), &BoundaryData::theorem4(1e-2, 0.2), 2.0, 0.05, 10);
    assert!(matches!(theorem8_profile_check(&tr, LambdaVariant::Statement, &[1.0]), Err(Error::Config(_))));
}
