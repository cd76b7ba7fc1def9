//! Compact-support kernel density estimation and the empirical-CDF baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DensityEstimate, GridFunction, SupportGrid};

/// Smoothing kernels supported on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Epanechnikov,
    Triangular,
    Biweight,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Epanechnikov, Kernel::Triangular, Kernel::Biweight];

    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        let a = u.abs();
        if a >= 1.0 {
            return 0.0;
        }
        match self {
            Kernel::Epanechnikov => 0.75 * (1.0 - u * u),
            Kernel::Triangular => 1.0 - a,
            Kernel::Biweight => {
                let t = 1.0 - u * u;
                15.0 / 16.0 * t * t
            }
        }
    }
}

/// How the bandwidth shrinks with the sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// The constant itself, independent of the sample count.
    FixedValue,
    /// `constant * n^(-1/3)`.
    ExplorationRate,
    /// `constant * n^(-1/2)`.
    ExploitationRate,
}

/// Silverman-style scale factor applied to the sample standard deviation.
pub const SILVERMAN_FACTOR: f64 = 1.06;

/// Bandwidth schedule. When `constant` is `None` it is taken from the data as
/// `1.06 * sample standard deviation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub rule: BandwidthRule,
    pub constant: Option<f64>,
}

impl Bandwidth {
    pub fn fixed(w: f64) -> Self {
        Self { rule: BandwidthRule::FixedValue, constant: Some(w) }
    }

    pub fn exploration() -> Self {
        Self { rule: BandwidthRule::ExplorationRate, constant: None }
    }

    pub fn exploitation() -> Self {
        Self { rule: BandwidthRule::ExploitationRate, constant: None }
    }

    /// Bandwidth for `n` samples given an explicit constant.
    pub fn value_with(&self, constant: f64, n: usize) -> f64 {
        let n = n.max(1) as f64;
        match self.rule {
            BandwidthRule::FixedValue => constant,
            BandwidthRule::ExplorationRate => constant * n.powf(-1.0 / 3.0),
            BandwidthRule::ExploitationRate => constant * n.powf(-0.5),
        }
    }

    /// Resolves the bandwidth for a concrete sample on a grid. The result is
    /// never narrower than two grid spacings so that every kernel bump hits
    /// at least one grid point.
    pub fn resolve(&self, samples: &[f64], grid: &SupportGrid) -> f64 {
        let constant = self.constant.unwrap_or_else(|| SILVERMAN_FACTOR * scale_estimate(samples));
        self.value_with(constant, samples.len()).max(2.0 * grid.spacing())
    }
}

impl Default for Bandwidth {
    fn default() -> Self {
        Self::exploration()
    }
}

/// Sample standard deviation, or 1.0 when it is undefined or zero.
fn scale_estimate(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 1.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd > 0.0 && sd.is_finite() {
        sd
    } else {
        1.0
    }
}

fn check_samples(samples: &[f64], grid: &SupportGrid) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(&value) = samples.iter().find(|&&b| !grid.contains(b)) {
        return Err(Error::OutOfSupport { value, lo: grid.lo(), hi: grid.hi() });
    }
    Ok(())
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Raw kernel sum `(1/(m w)) * sum_j K((p - b_j)/w)` at every grid point.
pub(crate) fn kde_raw(samples: &[f64], kernel: Kernel, bandwidth: f64, grid: &SupportGrid) -> Vec<f64> {
    let scale = 1.0 / (samples.len() as f64 * bandwidth);
    let mut out = vec![0.0; grid.len()];
    for &b in samples {
        if let Some((first, last)) = grid.index_span(b - bandwidth, b + bandwidth) {
            for (i, slot) in out.iter_mut().enumerate().take(last + 1).skip(first) {
                *slot += scale * kernel.eval((grid.point(i) - b) / bandwidth);
            }
        }
    }
    out
}

/// Kernel density estimate on `grid`, clipped at zero and renormalized to unit
/// mass over the grid. Samples are summed in sorted order, so the result does
/// not depend on their arrangement.
pub fn kde_estimate(
    samples: &[f64],
    kernel: Kernel,
    bandwidth: f64,
    grid: &SupportGrid,
) -> Result<DensityEstimate> {
    check_samples(samples, grid)?;
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidBandwidth(bandwidth));
    }
    let raw = kde_raw(&sorted(samples), kernel, bandwidth, grid);
    DensityEstimate::normalized(*grid, raw)
}

/// Step-function CDF `F(p) = #{b_j <= p} / m` at every grid point.
pub fn ecdf_cdf(samples: &[f64], grid: &SupportGrid) -> Result<GridFunction> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let s = sorted(samples);
    let m = s.len() as f64;
    GridFunction::from_fn(*grid, |p| s.partition_point(|&b| b <= p) as f64 / m)
}
