//! Grid layout and sampled complex fields. No transform code lives here so
//! that the finite-difference oracle can share the data types without
//! touching the spectral path.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Truncated half-line `[0, L]` with `n` interior nodes `x_j = j·dx`,
/// `dx = L/(n+1)`, and sine wavenumbers `p_k = kπ/L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub length: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Grid> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Config(format!("grid length must be positive, got {length}")));
        }
        if n < 8 {
            return Err(Error::Config(format!("grid needs at least 8 interior nodes, got {n}")));
        }
        Ok(Grid { length, n })
    }

    pub fn dx(&self) -> f64 {
        self.length / (self.n + 1) as f64
    }

    pub fn dp(&self) -> f64 {
        PI / self.length
    }

    /// Interior node `j` in `1..=n`.
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|j| self.x(j)).collect()
    }

    /// Wavenumber `k` in `0..=n+1` (0 and n+1 only appear in cosine spectra).
    pub fn p(&self, k: usize) -> f64 {
        k as f64 * self.dp()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (1..=self.n).map(|k| self.p(k)).collect()
    }

    /// Largest resolved wavenumber.
    pub fn p_max(&self) -> f64 {
        self.p(self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Repr {
    Physical,
    SineSpectral,
    CosineSpectral,
}

/// Samples of a complex function at one instant.
///
/// Physical fields carry values at the interior nodes plus the boundary
/// value `trace = f(0)`; the right end is pinned to zero. Sine spectra hold
/// `n` coefficients at `p_1..p_n`; cosine spectra hold `n+2` coefficients at
/// `p_0..p_{n+1}` because the trapezoid pairing needs both end modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<C64>,
    pub trace: C64,
    pub time: f64,
    pub repr: Repr,
}

impl ComplexField {
    pub fn zeros(grid: Grid, time: f64) -> Self {
        ComplexField { grid, values: vec![C64::new(0.0, 0.0); grid.n], trace: C64::new(0.0, 0.0), time, repr: Repr::Physical }
    }

    pub fn from_fn<F: Fn(f64) -> C64>(grid: Grid, time: f64, f: F) -> Self {
        ComplexField { grid, values: (1..=grid.n).map(|j| f(grid.x(j))).collect(), trace: f(0.0), time, repr: Repr::Physical }
    }

    pub fn physical(grid: Grid, time: f64, values: Vec<C64>, trace: C64) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Usage(format!("expected {} values, got {}", grid.n, values.len())));
        }
        Ok(ComplexField { grid, values, trace, time, repr: Repr::Physical })
    }

    pub fn expect(&self, repr: Repr) -> Result<()> {
        if self.repr != repr {
            return Err(Error::Usage(format!("operation needs a {:?} field, got {:?}", repr, self.repr)));
        }
        let want = match repr {
            Repr::CosineSpectral => self.grid.n + 2,
            _ => self.grid.n,
        };
        if self.values.len() != want {
            return Err(Error::Usage(format!("field has {} values, grid wants {}", self.values.len(), want)));
        }
        Ok(())
    }

    /// Values at `x_0..x_{n+1}` (trace first, trailing zero at `L`).
    pub fn with_ends(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.values.len() + 2);
        v.push(self.trace);
        v.extend_from_slice(&self.values);
        v.push(C64::new(0.0, 0.0));
        v
    }

    /// L² norm in the representation's own measure: trapezoid in x for
    /// physical fields, `dp`-weighted sums for spectra.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        match self.repr {
            Repr::Physical => {
                let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
                self.grid.dx() * (0.5 * self.trace.norm_sqr() + s)
            }
            Repr::SineSpectral => self.grid.dp() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>(),
            Repr::CosineSpectral => {
                let n = self.values.len();
                let s: f64 = self.values[1..n - 1].iter().map(|v| v.norm_sqr()).sum();
                self.grid.dp() * (s + 0.5 * (self.values[0].norm_sqr() + self.values[n - 1].norm_sqr()))
            }
        }
    }

    /// `∫|f|²dx` for a physical field with fourth-order Gregory end weights
    /// (3/8, 7/6, 23/24 at both ends). The plain trapezoid sum of
    /// [`l2_norm_sq`](Self::l2_norm_sq) pairs exactly with the discrete
    /// transforms but carries an `O(dx²)` error whenever `|f|²` has a slope
    /// at the wall.
    pub fn mass(&self) -> f64 {
        let mut g = Vec::with_capacity(self.values.len() + 2);
        g.push(self.trace.norm_sqr());
        g.extend(self.values.iter().map(|v| v.norm_sqr()));
        g.push(0.0);
        let m = g.len();
        let w = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
        let mut s: f64 = g.iter().sum();
        for k in 0..3 {
            s += (w[k] - 1.0) * (g[k] + g[m - 1 - k]);
        }
        self.grid.dx() * s
    }

    pub fn linf_norm(&self) -> f64 {
        let m = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        match self.repr {
            Repr::Physical => m.max(self.trace.norm()),
            _ => m,
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out.trace *= c;
        out
    }

    pub fn add(&self, o: &ComplexField) -> Self {
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&o.values) {
            *a += b;
        }
        out.trace += o.trace;
        out
    }

    pub fn sub(&self, o: &ComplexField) -> Self {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    /// Pointwise map over physical samples (trace included).
    pub fn map<F: Fn(f64, C64) -> C64>(&self, f: F) -> Self {
        let mut out = self.clone();
        for (j, v) in out.values.iter_mut().enumerate() {
            *v = f(self.grid.x(j + 1), *v);
        }
        out.trace = f(0.0, self.trace);
        out
    }

    /// Fraction of the squared L² mass sitting in the last tenth of `[0, L]`.
    pub fn tail_mass_fraction(&self) -> f64 {
        let total = self.l2_norm_sq();
        if total == 0.0 {
            return 0.0;
        }
        let start = ((0.9 * (self.grid.n + 1) as f64).ceil() as usize).max(1);
        let tail: f64 = self.values[start - 1..].iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx();
        tail / total
    }
}

/// Relative L² distance `‖a − b‖/‖b‖` (absolute when `b` vanishes).
pub fn rel_l2(a: &ComplexField, b: &ComplexField) -> f64 {
    let d = a.sub(b).l2_norm();
    let n = b.l2_norm();
    if n == 0.0 {
        d
    } else {
        d / n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_small_grid() {
        let g = Grid::new(18.0, 8).unwrap();
        assert_eq!(g.nodes(), vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0]);
        assert!((g.p(1) - PI / 18.0).abs() < 1e-15);
    }

    #[test]
    fn dx_for_1024() {
        let g = Grid::new(40.0, 1024).unwrap();
        assert_eq!(g.dx(), 40.0 / 1025.0);
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(matches!(Grid::new(0.0, 16), Err(Error::Config(_))));
        assert!(matches!(Grid::new(-1.0, 16), Err(Error::Config(_))));
        assert!(matches!(Grid::new(10.0, 4), Err(Error::Config(_))));
    }

    #[test]
    fn nodes_inside_and_increasing() {
        let g = Grid::new(3.7, 100).unwrap();
        let x = g.nodes();
        assert!(x[0] > 0.0 && *x.last().unwrap() < g.length);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        let p = g.wavenumbers();
        assert!(p[0] > 0.0);
        assert!(p.windows(2).all(|w| ((w[1] - w[0]) - g.dp()).abs() < 1e-12));
    }
}
