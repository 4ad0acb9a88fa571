#![allow(dead_code)]

use halfline::{ComplexField, Grid};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sum of a few Gaussian bumps with random complex amplitudes, supported
/// well inside `(0, L)`.
pub fn random_bumps(g: Grid, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = g.length;
    let bumps: Vec<(f64, f64, C64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.25 * l..0.45 * l),
                rng.random_range(0.8..1.6),
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                rng.random_range(-2.0..2.0),
            )
        })
        .collect();
    ComplexField::from_fn(g, 0.0, |x| {
        bumps
            .iter()
            .map(|&(c, w, a, k)| a * (-(x - c).powi(2) / (2.0 * w * w)).exp() * C64::from_polar(1.0, k * x))
            .sum()
    })
}

/// Random smooth field that need not vanish at the boundary.
pub fn random_smooth(g: Grid, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let b = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let w = rng.random_range(0.7..2.0);
    let bumps = random_bumps(g, seed ^ 0x5eed);
    bumps.add(&ComplexField::from_fn(g, 0.0, |x| (a + b * x) * (-(x * x) / (2.0 * w * w)).exp()))
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Least-squares slope of `log y` against `log t`.
pub fn log_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `n` points geometrically spaced on `[a, b]`.
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}
