//! Boundary forcing `h(t)` with analytic first and second derivatives.
//!
//! All families vanish for `t < 0` and satisfy `h(0) = 0`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Theorem4Class,
    Theorem7Class,
    Theorem8Profile,
    Custom,
}

type Jet3 = Arc<dyn Fn(f64) -> [C64; 3] + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Zero,
    /// `amp·t²·(1+t²)^{−a}`
    Onset { amp: f64, a: f64 },
    /// `amp·t/(1+t)^{β+1} + rem·t/(1+t²)^{1+γ/2}`
    Profile { amp: f64, beta: f64, rem: f64, gamma: f64 },
    /// `amp·(1−e^{−t})·e^{iωt}`
    Probe { amp: f64, omega: f64 },
    Closure(Jet3),
}

#[derive(Clone)]
pub struct BoundaryData {
    pub family: Family,
    pub label: String,
    /// ε or A
    pub amplitude: f64,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    shape: Shape,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData")
            .field("family", &self.family)
            .field("label", &self.label)
            .field("amplitude", &self.amplitude)
            .field("beta", &self.beta)
            .field("gamma", &self.gamma)
            .finish()
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `t²(1+t²)^{−a}` and its first two derivatives.
fn onset(a: f64, t: f64) -> [f64; 3] {
    let u = 1.0 + t * t;
    let p = 2.0 * t + (2.0 - 2.0 * a) * t.powi(3);
    let dp = 2.0 + 3.0 * (2.0 - 2.0 * a) * t * t;
    [
        t * t * u.powf(-a),
        u.powf(-a - 1.0) * p,
        u.powf(-a - 1.0) * dp - 2.0 * (a + 1.0) * t * u.powf(-a - 2.0) * p,
    ]
}

/// `t(1+t)^{−c}` and derivatives.
fn rational(c: f64, t: f64) -> [f64; 3] {
    let u = 1.0 + t;
    let p = 1.0 + (1.0 - c) * t;
    [
        t * u.powf(-c),
        u.powf(-c - 1.0) * p,
        (1.0 - c) * u.powf(-c - 1.0) - (c + 1.0) * u.powf(-c - 2.0) * p,
    ]
}

/// `t(1+t²)^{−e}` and derivatives.
fn remainder(e: f64, t: f64) -> [f64; 3] {
    let u = 1.0 + t * t;
    let p = 1.0 + (1.0 - 2.0 * e) * t * t;
    [
        t * u.powf(-e),
        u.powf(-e - 1.0) * p,
        2.0 * (1.0 - 2.0 * e) * t * u.powf(-e - 1.0) - 2.0 * (e + 1.0) * t * u.powf(-e - 2.0) * p,
    ]
}

impl BoundaryData {
    pub fn zero() -> Self {
        BoundaryData { family: Family::Custom, label: "zero".into(), amplitude: 0.0, beta: None, gamma: None, shape: Shape::Zero }
    }

    /// `h = ε t²(1+t²)^{−(11/4+γ)/2}`: `|h| ≤ ε⟨t⟩^{−3/4−γ}` with `h(0) = h'(0) = 0`.
    pub fn theorem4(eps: f64, gamma: f64) -> Self {
        BoundaryData {
            family: Family::Theorem4Class,
            label: "theorem4-class".into(),
            amplitude: eps,
            beta: None,
            gamma: Some(gamma),
            shape: Shape::Onset { amp: eps, a: (2.75 + gamma) / 2.0 },
        }
    }

    /// `h = ε t²(1+t²)^{−1−β/2}`: `|h| ≤ ε⟨t⟩^{−β}`, `|h'| ≲ ε⟨t⟩^{−1−β}`.
    pub fn theorem7(eps: f64, beta: f64) -> Self {
        BoundaryData {
            family: Family::Theorem7Class,
            label: "theorem7-class".into(),
            amplitude: eps,
            beta: Some(beta),
            gamma: None,
            shape: Shape::Onset { amp: eps, a: 1.0 + beta / 2.0 },
        }
    }

    /// `h = A t/(1+t)^{β+1}`.
    pub fn theorem8(a: f64, beta: f64) -> Self {
        Self::theorem8_with_remainder(a, beta, 0.0, 1.0)
    }

    /// `h = A t/(1+t)^{β+1} + r·t/⟨t⟩^{2+γ}`.
    pub fn theorem8_with_remainder(a: f64, beta: f64, rem: f64, gamma: f64) -> Self {
        BoundaryData {
            family: Family::Theorem8Profile,
            label: "theorem8-profile".into(),
            amplitude: a,
            beta: Some(beta),
            gamma: Some(gamma),
            shape: Shape::Profile { amp: a, beta, rem, gamma },
        }
    }

    /// Single-frequency probe `ε(1−e^{−t})e^{iωt}`.
    pub fn probe(eps: f64, omega: f64) -> Self {
        BoundaryData { family: Family::Custom, label: "probe".into(), amplitude: eps, beta: None, gamma: None, shape: Shape::Probe { amp: eps, omega } }
    }

    /// Arbitrary forcing given as `t ↦ [h, h', h'']`.
    pub fn custom<F>(label: &str, f: F) -> Self
    where
        F: Fn(f64) -> [C64; 3] + Send + Sync + 'static,
    {
        BoundaryData { family: Family::Custom, label: label.into(), amplitude: 0.0, beta: None, gamma: None, shape: Shape::Closure(Arc::new(f)) }
    }

    /// Pointwise sum (used for linearity checks).
    pub fn plus(&self, other: &BoundaryData) -> BoundaryData {
        let (a, b) = (self.clone(), other.clone());
        let label = format!("{}+{}", a.label, b.label);
        Self::custom(&label, move |t| {
            let (x, y) = (a.jet(t), b.jet(t));
            [x[0] + y[0], x[1] + y[1], x[2] + y[2]]
        })
    }

    pub fn scaled(&self, c: C64) -> BoundaryData {
        let a = self.clone();
        Self::custom(&format!("{c}*{}", self.label), move |t| a.jet(t).map(|v| v * c))
    }

    pub fn is_zero(&self) -> bool {
        match self.shape {
            Shape::Zero => true,
            Shape::Onset { amp, .. } | Shape::Probe { amp, .. } => amp == 0.0,
            Shape::Profile { amp, rem, .. } => amp == 0.0 && rem == 0.0,
            Shape::Closure(_) => false,
        }
    }

    /// `[h(t), h'(t), h''(t)]`.
    /// At `t = 0` this is the right-hand limit.
    pub fn jet(&self, t: f64) -> [C64; 3] {
        if t < 0.0 {
            return [C64::new(0.0, 0.0); 3];
        }
        match &self.shape {
            Shape::Zero => [C64::new(0.0, 0.0); 3],
            Shape::Onset { amp, a } => onset(*a, t).map(|v| re(amp * v)),
            Shape::Profile { amp, beta, rem, gamma } => {
                let m = rational(beta + 1.0, t);
                let mut out = m.map(|v| re(amp * v));
                if *rem != 0.0 {
                    let r = remainder(1.0 + gamma / 2.0, t);
                    for k in 0..3 {
                        out[k] += rem * r[k];
                    }
                }
                out
            }
            Shape::Probe { amp, omega } => {
                let e = (-t).exp();
                let (q, dq, d2q) = (1.0 - e, e, -e);
                let w = C64::from_polar(*amp, omega * t);
                let i = C64::new(0.0, 1.0);
                [w * q, w * (dq + i * omega * q), w * (d2q + 2.0 * i * omega * dq - omega * omega * q)]
            }
            Shape::Closure(f) => f(t),
        }
    }

    pub fn h(&self, t: f64) -> C64 {
        self.jet(t)[0]
    }

    pub fn dh(&self, t: f64) -> C64 {
        self.jet(t)[1]
    }

    pub fn d2h(&self, t: f64) -> C64 {
        self.jet(t)[2]
    }

    /// Boundary values of `v, v_xx, v_xxxx` for the Dirichlet solution
    /// `v = Bz` with `v(t,0) = h(t)`: `[h, −2i h', −4 h'']`.
    pub fn dirichlet_jets(&self, t: f64) -> [C64; 3] {
        let j = self.jet(t);
        [j[0], C64::new(0.0, -2.0) * j[1], -4.0 * j[2]]
    }
}
