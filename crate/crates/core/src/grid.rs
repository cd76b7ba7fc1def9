//! Uniform-grid function representation shared by every estimator and the pricer.
//!
//! All integrals are trapezoidal, which is exact for the piecewise-linear
//! functions a grid actually stores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default support: the valuation range [1, 10] padded by 0.1 on each side.
pub const DEFAULT_LO: f64 = 0.9;
pub const DEFAULT_HI: f64 = 10.1;
pub const DEFAULT_POINTS: usize = 4096;

/// Default price search range.
pub const DEFAULT_PRICE_RANGE: PriceRange = PriceRange { lo: 1.0, hi: 10.0 };

/// Equally spaced points on `[lo, hi]`, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportGrid {
    lo: f64,
    hi: f64,
    n_points: usize,
}

impl SupportGrid {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidGrid(format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if n_points < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n_points}")));
        }
        Ok(Self { lo, hi, n_points })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    /// Trapezoidal quadrature weights: `spacing/2` at the ends, `spacing` inside.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_points];
        w[0] = 0.5 * h;
        w[self.n_points - 1] = 0.5 * h;
        w
    }

    /// Index range of grid points lying inside `[a, b]`.
    pub(crate) fn index_span(&self, a: f64, b: f64) -> Option<(usize, usize)> {
        let h = self.spacing();
        let slack = 1e-9 * h;
        let first = ((a - self.lo - slack) / h).ceil().max(0.0) as usize;
        let last_f = ((b - self.lo + slack) / h).floor();
        if last_f < 0.0 {
            return None;
        }
        let last = (last_f as usize).min(self.n_points - 1);
        (first <= last).then_some((first, last))
    }
}

impl Default for SupportGrid {
    fn default() -> Self {
        Self { lo: DEFAULT_LO, hi: DEFAULT_HI, n_points: DEFAULT_POINTS }
    }
}

/// Closed price interval searched by the pricer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRange {
    pub lo: f64,
    pub hi: f64,
}

impl PriceRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidParameter(format!("bad price range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.lo && p <= self.hi
    }
}

/// Real values sampled at every point of a [`SupportGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: SupportGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: SupportGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite grid value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: SupportGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    pub fn zeros(grid: SupportGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn grid(&self) -> &SupportGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Linear interpolation; arguments outside the grid are clamped to the ends.
    pub fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g.lo {
            return self.values[0];
        }
        if x >= g.hi {
            return self.values[g.n_points - 1];
        }
        let pos = (x - g.lo) / g.spacing();
        let i = (pos.floor() as usize).min(g.n_points - 2);
        let t = pos - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Trapezoidal inner product.
    pub fn inner(&self, other: &GridFunction) -> f64 {
        let h = self.grid.spacing();
        let n = self.values.len();
        let body: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        h * (body - 0.5 * (self.values[0] * other.values[0] + self.values[n - 1] * other.values[n - 1]))
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Trapezoidal-rule integral over `[lo, hi]`.
pub fn trapezoid_integral(g: &GridFunction) -> f64 {
    let v = &g.values;
    let n = v.len();
    let body: f64 = v.iter().sum();
    g.grid.spacing() * (body - 0.5 * (v[0] + v[n - 1]))
}

/// A nonnegative grid function with unit trapezoidal mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    f: GridFunction,
}

impl DensityEstimate {
    pub const MASS_TOLERANCE: f64 = 1e-8;

    /// Validates an already-normalized density.
    pub fn new(f: GridFunction) -> Result<Self> {
        if f.values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidDensity("negative value".into()));
        }
        let mass = trapezoid_integral(&f);
        if (mass - 1.0).abs() > Self::MASS_TOLERANCE {
            return Err(Error::InvalidDensity(format!("mass {mass} differs from 1")));
        }
        Ok(Self { f })
    }

    /// Clips at zero and rescales to unit mass.
    pub fn normalized(grid: SupportGrid, mut values: Vec<f64>) -> Result<Self> {
        for v in values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let f = GridFunction::new(grid, values)?;
        let mass = trapezoid_integral(&f);
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidDensity(format!("cannot normalize mass {mass}")));
        }
        let values = f.values.into_iter().map(|v| v / mass).collect();
        Ok(Self { f: GridFunction { grid, values } })
    }

    pub fn uniform(grid: SupportGrid) -> Self {
        let h = 1.0 / grid.width();
        Self { f: GridFunction { grid, values: vec![h; grid.len()] } }
    }

    pub fn function(&self) -> &GridFunction {
        &self.f
    }

    pub fn grid(&self) -> &SupportGrid {
        self.f.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.f.values()
    }
}

/// Cumulative trapezoid of a density: `F(lo) = 0`, `F(hi) = 1`.
pub fn cumulative_from_density(f: &DensityEstimate) -> GridFunction {
    let v = f.values();
    let h = f.grid().spacing();
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in v.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    GridFunction { grid: *f.grid(), values: out }
}

/// Revenue-maximizing grid price for a CDF: `argmax p * (1 - F(p))` over grid
/// points inside the price range. Ties go to the smallest price.
pub fn argmax_revenue(cdf: &GridFunction, range: PriceRange) -> Result<(f64, f64)> {
    let grid = cdf.grid();
    let (first, last) = grid
        .index_span(range.lo, range.hi)
        .ok_or(Error::EmptyPriceRange { lo: range.lo, hi: range.hi })?;
    let mut best = (grid.point(first), f64::NEG_INFINITY);
    for i in first..=last {
        let p = grid.point(i);
        let rev = p * (1.0 - cdf.values[i]);
        if rev > best.1 {
            best = (p, rev);
        }
    }
    Ok(best)
}
