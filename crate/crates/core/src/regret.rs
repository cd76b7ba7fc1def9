//! Ground-truth value distributions, the brute-force monopoly-price oracle and
//! regret accounting.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::PriceRange;
use crate::mechanism::EstimatorId;

/// Default number of candidate prices scanned by the oracle.
pub const ORACLE_RESOLUTION: usize = 100_000;

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Piecewise-linear CDF through mid-jump points of an empirical CDF.
///
/// Each distinct pool value `u` gets `F(u) = (#{x < u} + #{x == u} / 2) / N`;
/// the ends of the support are pinned to 0 and 1. Pool values lying exactly on
/// a support end are absorbed into the neighbouring segment.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    knots: Vec<f64>,
    levels: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(pool: &[f64], lo: f64, hi: f64) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(&value) = pool.iter().find(|&&x| !(lo..=hi).contains(&x)) {
            return Err(Error::OutOfSupport { value, lo, hi });
        }
        let mut xs = pool.to_vec();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let mut knots = vec![lo];
        let mut levels = vec![0.0];
        let mut i = 0;
        while i < xs.len() {
            let u = xs[i];
            let j = xs.partition_point(|&x| x <= u);
            if u > lo && u < hi {
                knots.push(u);
                levels.push((i as f64 + 0.5 * (j - i) as f64) / n);
            }
            i = j;
        }
        knots.push(hi);
        levels.push(1.0);
        Ok(Self { knots, levels })
    }

    fn segment(&self, v: f64) -> usize {
        let k = self.knots.partition_point(|&x| x <= v);
        k.clamp(1, self.knots.len() - 1) - 1
    }

    fn cdf(&self, v: f64) -> f64 {
        let (lo, hi) = (self.knots[0], self.knots[self.knots.len() - 1]);
        if v <= lo {
            return 0.0;
        }
        if v >= hi {
            return 1.0;
        }
        let s = self.segment(v);
        let t = (v - self.knots[s]) / (self.knots[s + 1] - self.knots[s]);
        self.levels[s] + t * (self.levels[s + 1] - self.levels[s])
    }

    fn pdf(&self, v: f64) -> f64 {
        let (lo, hi) = (self.knots[0], self.knots[self.knots.len() - 1]);
        if v < lo || v > hi {
            return 0.0;
        }
        let s = self.segment(v);
        (self.levels[s + 1] - self.levels[s]) / (self.knots[s + 1] - self.knots[s])
    }
}

/// Parametric or empirical family of a [`ValueDistribution`].
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Gaussian restricted to the support and renormalized.
    TruncGaussian { mean: f64, sd: f64 },
    /// Beta(alpha, beta) mapped affinely from `[0, 1]` onto the support.
    RescaledBeta { alpha: f64, beta: f64 },
    /// Exponential with the given rate, restricted to the support.
    TruncExponential { rate: f64 },
    /// Uniform on the support.
    Uniform,
    /// All mass at one value; used for degenerate checks.
    PointMass { value: f64 },
    /// Smoothed empirical CDF of a sample pool.
    Empirical(Arc<EmpiricalCdf>),
}

/// A valuation distribution on a bounded support with analytic CDF and density.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueDistribution {
    family: Family,
    lo: f64,
    hi: f64,
    /// Family-specific normalizing constant, cached.
    norm: f64,
}

impl ValueDistribution {
    pub fn new(family: Family, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("support [{lo}, {hi}]")));
        }
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        let norm = match &family {
            Family::TruncGaussian { mean, sd } => {
                if !(*sd > 0.0) || !mean.is_finite() {
                    return bad("gaussian needs finite mean and sd > 0");
                }
                let z = std_normal_cdf((hi - mean) / sd) - std_normal_cdf((lo - mean) / sd);
                if !(z > 0.0) {
                    return bad("gaussian has no mass on the support");
                }
                z
            }
            Family::RescaledBeta { alpha, beta } => {
                if !(*alpha > 0.0 && *beta > 0.0) {
                    return bad("beta shapes must be positive");
                }
                ln_beta(*alpha, *beta)
            }
            Family::TruncExponential { rate } => {
                if !(*rate > 0.0) {
                    return bad("exponential rate must be positive");
                }
                -(-rate * (hi - lo)).exp_m1()
            }
            Family::PointMass { value } => {
                if !(lo..=hi).contains(value) {
                    return bad("point mass outside support");
                }
                1.0
            }
            Family::Uniform | Family::Empirical(_) => 1.0,
        };
        Ok(Self { family, lo, hi, norm })
    }

    pub fn trunc_gaussian(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::TruncGaussian { mean, sd }, lo, hi)
    }

    pub fn rescaled_beta(alpha: f64, beta: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::RescaledBeta { alpha, beta }, lo, hi)
    }

    pub fn trunc_exponential(rate: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::TruncExponential { rate }, lo, hi)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::Uniform, lo, hi)
    }

    pub fn point_mass(value: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::PointMass { value }, lo, hi)
    }

    pub fn empirical(pool: &[f64], lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::Empirical(Arc::new(EmpiricalCdf::new(pool, lo, hi)?)), lo, hi)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn pdf(&self, v: f64) -> f64 {
        if v < self.lo || v > self.hi {
            return 0.0;
        }
        match &self.family {
            Family::TruncGaussian { mean, sd } => std_normal_pdf((v - mean) / sd) / (sd * self.norm),
            Family::RescaledBeta { alpha, beta } => {
                let w = self.hi - self.lo;
                let x = (v - self.lo) / w;
                ((alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() - self.norm).exp() / w
            }
            Family::TruncExponential { rate } => rate * (-rate * (v - self.lo)).exp() / self.norm,
            Family::Uniform => 1.0 / (self.hi - self.lo),
            Family::PointMass { value } => {
                if v == *value {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Family::Empirical(e) => e.pdf(v),
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        if let Family::PointMass { value } = self.family {
            return if v >= value { 1.0 } else { 0.0 };
        }
        if v <= self.lo {
            return 0.0;
        }
        if v >= self.hi {
            return 1.0;
        }
        let c = match &self.family {
            Family::TruncGaussian { mean, sd } => {
                (std_normal_cdf((v - mean) / sd) - std_normal_cdf((self.lo - mean) / sd)) / self.norm
            }
            Family::RescaledBeta { alpha, beta } => {
                beta_reg(*alpha, *beta, (v - self.lo) / (self.hi - self.lo))
            }
            Family::TruncExponential { rate } => -(-rate * (v - self.lo)).exp_m1() / self.norm,
            Family::Uniform => (v - self.lo) / (self.hi - self.lo),
            Family::PointMass { .. } => unreachable!(),
            Family::Empirical(e) => e.cdf(v),
        };
        c.clamp(0.0, 1.0)
    }

    /// Inverse CDF by bisection on the analytic CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        if let Family::PointMass { value } = self.family {
            return value;
        }
        let u = u.clamp(0.0, 1.0);
        let (mut a, mut b) = (self.lo, self.hi);
        let tol = 1e-12 * (self.hi - self.lo);
        for _ in 0..100 {
            if b - a <= tol {
                break;
            }
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.cdf(mid) < u {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }

    /// Expected per-buyer revenue `p * (1 - F(p))` at a posted price.
    pub fn revenue(&self, p: f64) -> f64 {
        p * (1.0 - self.cdf(p))
    }
}

/// Monopoly price and optimal revenue of one distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oracle {
    pub price: f64,
    pub value: f64,
}

/// Brute-force monopoly price: scans `resolution` equally spaced prices over
/// the range using the analytic CDF. Ties go to the smallest price.
pub fn oracle_monopoly(dist: &ValueDistribution, range: PriceRange, resolution: usize) -> Oracle {
    let n = resolution.max(2);
    let step = (range.hi - range.lo) / (n - 1) as f64;
    let mut best = Oracle { price: range.lo, value: f64::NEG_INFINITY };
    for k in 0..n {
        let p = if k + 1 == n { range.hi } else { range.lo + k as f64 * step };
        let r = dist.revenue(p);
        if r > best.value {
            best = Oracle { price: p, value: r };
        }
    }
    best
}

/// One round's regret at the mechanism's posted price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub round: usize,
    pub estimator: EstimatorId,
    pub n_bids: usize,
    pub price: f64,
    pub opt_price: f64,
    #[serde(skip)]
    pub opt_value: f64,
    pub regret: f64,
}

impl RegretRecord {
    pub const CSV_HEADER: [&'static str; 6] = ["round", "estimator", "n_bids", "price", "opt_price", "regret"];

    pub fn new(
        round: usize,
        estimator: EstimatorId,
        n_bids: usize,
        dist: &ValueDistribution,
        price: f64,
        oracle: Oracle,
    ) -> Self {
        Self {
            round,
            estimator,
            n_bids,
            price,
            opt_price: oracle.price,
            opt_value: oracle.value,
            regret: regret_against(dist, price, oracle),
        }
    }
}

/// `OPT - p * (1 - F(p))`, clamped at zero.
pub fn regret_against(dist: &ValueDistribution, price: f64, oracle: Oracle) -> f64 {
    (oracle.value - dist.revenue(price)).max(0.0)
}

/// Instantaneous regret with the oracle computed at the default resolution.
pub fn instantaneous_regret(dist: &ValueDistribution, price: f64, range: PriceRange) -> Result<f64> {
    if !range.contains(price) {
        return Err(Error::InvalidParameter(format!("price {price} outside [{}, {}]", range.lo, range.hi)));
    }
    let oracle = oracle_monopoly(dist, range, ORACLE_RESOLUTION);
    Ok(regret_against(dist, price, oracle))
}

/// Mean instantaneous regret.
pub fn average_cumulative_regret(records: &[RegretRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(records.iter().map(|r| r.regret).sum::<f64>() / records.len() as f64)
}

/// Running means `(1/t) * sum_{s <= t} r_s` for every prefix.
pub fn cumulative_trace(regrets: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    regrets
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            acc += r;
            acc / (i + 1) as f64
        })
        .collect()
}

/// `p - (1 - F(p)) / f(p)`.
pub fn virtual_valuation(dist: &ValueDistribution, p: f64) -> Result<f64> {
    let f = dist.pdf(p);
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::ZeroDensity(p));
    }
    Ok(p - (1.0 - dist.cdf(p)) / f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DEFAULT_PRICE_RANGE;
    use approx::assert_abs_diff_eq;

    fn uniform() -> ValueDistribution {
        ValueDistribution::uniform(1.0, 10.0).unwrap()
    }

    fn record(regret: f64) -> RegretRecord {
        RegretRecord {
            round: 0,
            estimator: EstimatorId::Kde,
            n_bids: 2,
            price: 1.0,
            opt_price: 1.0,
            opt_value: 1.0,
            regret,
        }
    }

    #[test]
    fn uniform_oracle() {
        let o = oracle_monopoly(&uniform(), DEFAULT_PRICE_RANGE, ORACLE_RESOLUTION);
        assert_abs_diff_eq!(o.price, 5.0, epsilon = 1e-4);
        assert_abs_diff_eq!(o.value, 25.0 / 9.0, epsilon = 1e-8);
    }

    #[test]
    fn point_mass_oracle() {
        let d = ValueDistribution::point_mass(6.0, 0.9, 10.1).unwrap();
        let o = oracle_monopoly(&d, DEFAULT_PRICE_RANGE, ORACLE_RESOLUTION);
        assert!((o.price - 6.0).abs() < 1e-3);
        assert!((o.value - 6.0).abs() < 1e-3);
    }

    #[test]
    fn exponential_oracle_is_stable_under_refinement() {
        let d = ValueDistribution::trunc_exponential(0.25, 0.9, 10.1).unwrap();
        let a = oracle_monopoly(&d, DEFAULT_PRICE_RANGE, ORACLE_RESOLUTION);
        let b = oracle_monopoly(&d, DEFAULT_PRICE_RANGE, 2 * ORACLE_RESOLUTION);
        assert!((a.price - b.price).abs() < 1e-3);
        assert!((a.value - b.value).abs() < 1e-6);
    }

    #[test]
    fn uniform_regret_arithmetic() {
        let r = |p| instantaneous_regret(&uniform(), p, DEFAULT_PRICE_RANGE).unwrap();
        assert_abs_diff_eq!(r(5.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r(4.0), 1.0 / 9.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r(10.0), 25.0 / 9.0, epsilon = 1e-9);
        assert!(instantaneous_regret(&uniform(), 10.5, DEFAULT_PRICE_RANGE).is_err());
    }

    #[test]
    fn average_regret() {
        assert!(matches!(average_cumulative_regret(&[]), Err(Error::NoRecords)));
        assert_eq!(average_cumulative_regret(&[record(0.0), record(0.0)]).unwrap(), 0.0);
        assert_eq!(average_cumulative_regret(&[record(1.0), record(3.0)]).unwrap(), 2.0);
        let a = [record(0.5), record(1.5), record(0.25)];
        let b = [record(2.0), record(0.0)];
        let all: Vec<_> = a.iter().chain(&b).cloned().collect();
        let lhs = average_cumulative_regret(&all).unwrap();
        let rhs = (3.0 * average_cumulative_regret(&a).unwrap() + 2.0 * average_cumulative_regret(&b).unwrap()) / 5.0;
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-15);
    }

    #[test]
    fn cumulative_trace_is_prefix_mean() {
        assert_eq!(cumulative_trace([1.0, 3.0, 2.0]), vec![1.0, 2.0, 2.0]);
    }

    #[test]
    fn uniform_virtual_valuation() {
        let d = uniform();
        assert_abs_diff_eq!(virtual_valuation(&d, 5.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(virtual_valuation(&d, 1.0).unwrap(), 1.0 - 9.0, epsilon = 1e-12);
        for p in [2.0, 3.5, 7.0, 9.5] {
            assert_abs_diff_eq!(virtual_valuation(&d, p).unwrap(), 2.0 * p - 10.0, epsilon = 1e-12);
        }
        assert!(matches!(virtual_valuation(&d, 11.0), Err(Error::ZeroDensity(_))));
    }

    #[test]
    fn virtual_valuation_vanishes_at_oracle_price() {
        for d in [
            ValueDistribution::trunc_gaussian(5.0, 2.0, 0.9, 10.1).unwrap(),
            ValueDistribution::trunc_exponential(0.3, 0.9, 10.1).unwrap(),
            ValueDistribution::rescaled_beta(6.0, 3.0, 0.9, 10.1).unwrap(),
        ] {
            let o = oracle_monopoly(&d, DEFAULT_PRICE_RANGE, ORACLE_RESOLUTION);
            if o.price > 1.0 && o.price < 10.0 {
                assert!(virtual_valuation(&d, o.price).unwrap().abs() < 1e-3, "{d:?}");
            }
        }
    }

    #[test]
    fn empirical_cdf_shape() {
        let d = ValueDistribution::empirical(&[2.0, 4.0, 4.0, 6.0], 0.9, 10.1).unwrap();
        assert_eq!(d.cdf(0.9), 0.0);
        assert_eq!(d.cdf(10.1), 1.0);
        assert_abs_diff_eq!(d.cdf(2.0), 0.125);
        assert_abs_diff_eq!(d.cdf(4.0), 0.5);
        assert_abs_diff_eq!(d.cdf(6.0), 0.875);
        assert!(d.pdf(3.0) > 0.0);
        // pool values on the support ends are absorbed
        let e = ValueDistribution::empirical(&[0.9, 5.0, 10.1], 0.9, 10.1).unwrap();
        assert_eq!(e.cdf(0.9), 0.0);
        assert_abs_diff_eq!(e.cdf(5.0), 0.5);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let d = ValueDistribution::rescaled_beta(5.0, 0.7, 0.9, 10.1).unwrap();
        for u in [0.01, 0.3, 0.5, 0.99] {
            assert_abs_diff_eq!(d.cdf(d.quantile(u)), u, epsilon = 1e-10);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(ValueDistribution::trunc_gaussian(5.0, 0.0, 0.9, 10.1).is_err());
        assert!(ValueDistribution::trunc_exponential(-1.0, 0.9, 10.1).is_err());
        assert!(ValueDistribution::rescaled_beta(0.0, 1.0, 0.9, 10.1).is_err());
        assert!(ValueDistribution::uniform(2.0, 1.0).is_err());
    }
}
