//! Synthetic markets: random value distributions drawn from a parametric
//! family, and truthful bids drawn from them.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DEFAULT_HI, DEFAULT_LO};
use crate::regret::ValueDistribution;

/// The three market families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// Truncated Gaussian: a stable market with consistent demand.
    Gaussian,
    /// Rescaled Beta: many low-value buyers, a few premium ones.
    Beta,
    /// Truncated exponential.
    Exponential,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 3] = [FamilyKind::Gaussian, FamilyKind::Beta, FamilyKind::Exponential];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::Beta => "beta",
            FamilyKind::Exponential => "exponential",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(FamilyKind::Gaussian),
            "beta" => Ok(FamilyKind::Beta),
            "exponential" | "exp" => Ok(FamilyKind::Exponential),
            other => Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        }
    }
}

/// Closed interval a hyperparameter is drawn from uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        self.lo + (self.hi - self.lo) * rng.random::<f64>()
    }
}

/// Draws one value distribution per round from a family.
///
/// Gaussian: mean in [4.5, 5.5], sd in [1, 3]. Exponential: mean (inverse
/// rate) in [2, 6]. Beta: shape `alpha` in [5, 10] and a target mean in [5, 9]
/// on the valuation scale; `beta` is solved so the rescaled distribution has
/// exactly that mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySampler {
    pub kind: FamilyKind,
    /// Mean range (Gaussian, Exponential) or rescaled target mean (Beta).
    pub mean: Range,
    /// Standard-deviation range (Gaussian only).
    pub sd: Range,
    /// Shape `alpha` range (Beta only).
    pub alpha: Range,
    pub lo: f64,
    pub hi: f64,
}

impl FamilySampler {
    pub fn new(kind: FamilyKind) -> Self {
        let mean = match kind {
            FamilyKind::Gaussian => Range::new(4.5, 5.5),
            FamilyKind::Beta => Range::new(5.0, 9.0),
            FamilyKind::Exponential => Range::new(2.0, 6.0),
        };
        Self { kind, mean, sd: Range::new(1.0, 3.0), alpha: Range::new(5.0, 10.0), lo: DEFAULT_LO, hi: DEFAULT_HI }
    }

    pub fn sample_round_distribution(&self, rng: &mut impl Rng) -> Result<ValueDistribution> {
        match self.kind {
            FamilyKind::Gaussian => {
                let mean = self.mean.draw(rng);
                let sd = self.sd.draw(rng);
                ValueDistribution::trunc_gaussian(mean, sd, self.lo, self.hi)
            }
            FamilyKind::Beta => {
                let alpha = self.alpha.draw(rng);
                let target = self.mean.draw(rng);
                let unit_mean = (target - self.lo) / (self.hi - self.lo);
                if !(unit_mean > 0.0 && unit_mean < 1.0) {
                    return Err(Error::InvalidParameter(format!("beta target mean {target} outside support")));
                }
                let beta = alpha * (1.0 - unit_mean) / unit_mean;
                ValueDistribution::rescaled_beta(alpha, beta, self.lo, self.hi)
            }
            FamilyKind::Exponential => {
                let mean = self.mean.draw(rng);
                ValueDistribution::trunc_exponential(1.0 / mean, self.lo, self.hi)
            }
        }
    }

    /// Round distribution from a seed.
    pub fn sample_seeded(&self, seed: u64) -> Result<ValueDistribution> {
        self.sample_round_distribution(&mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// `n` i.i.d. valuations by inverse-CDF sampling.
pub fn draw_bids(dist: &ValueDistribution, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| dist.quantile(rng.random::<f64>())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regret::Family;

    #[test]
    fn gaussian_parameters_in_range() {
        let s = FamilySampler::new(FamilyKind::Gaussian);
        for seed in 0..200 {
            match s.sample_seeded(seed).unwrap().family() {
                Family::TruncGaussian { mean, sd } => {
                    assert!((4.5..=5.5).contains(mean));
                    assert!((1.0..=3.0).contains(sd));
                }
                f => panic!("{f:?}"),
            }
        }
    }

    #[test]
    fn exponential_mean_in_range() {
        let s = FamilySampler::new(FamilyKind::Exponential);
        for seed in 0..200 {
            match s.sample_seeded(seed).unwrap().family() {
                Family::TruncExponential { rate } => assert!((2.0..=6.0).contains(&(1.0 / rate))),
                f => panic!("{f:?}"),
            }
        }
    }

    #[test]
    fn beta_hits_target_mean() {
        let s = FamilySampler::new(FamilyKind::Beta);
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = s.sample_round_distribution(&mut rng).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let _alpha = s.alpha.draw(&mut rng);
            let target = s.mean.draw(&mut rng);
            match d.family() {
                Family::RescaledBeta { alpha, beta } => {
                    assert!((5.0..=10.0).contains(alpha));
                    let mean = 0.9 + 9.2 * alpha / (alpha + beta);
                    assert!((mean - target).abs() < 1e-6);
                    assert!((5.0..=9.0).contains(&mean));
                }
                f => panic!("{f:?}"),
            }
        }
    }

    #[test]
    fn draws_are_deterministic_and_in_support() {
        let d = FamilySampler::new(FamilyKind::Beta).sample_seeded(3).unwrap();
        let a = draw_bids(&d, 500, 11);
        assert_eq!(a, draw_bids(&d, 500, 11));
        assert_ne!(a, draw_bids(&d, 500, 12));
        assert!(a.iter().all(|&b| (DEFAULT_LO..=DEFAULT_HI).contains(&b)));
    }

    #[test]
    fn family_names() {
        for k in FamilyKind::ALL {
            assert_eq!(k.as_str().parse::<FamilyKind>().unwrap(), k);
        }
        assert!("cauchy".parse::<FamilyKind>().is_err());
    }
}
