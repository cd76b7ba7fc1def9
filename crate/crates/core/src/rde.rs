//! Repeated density estimation.
//!
//! Training densities are mapped to centered log-ratio curves, functional PCA
//! extracts a mean curve and leading eigencurves, and those define a
//! `K`-dimensional exponential family
//! `f(v | theta) = exp(mu(v) + sum_k theta_k phi_k(v) - B(theta))`
//! whose natural parameter is fitted to new samples by maximum likelihood.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{trapezoid_integral, DensityEstimate, GridFunction, SupportGrid};

/// Density floor applied before taking logs.
pub const DEFAULT_FLOOR: f64 = 1e-6;

/// Centered log-ratio curve: integrates to zero over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClrCurve {
    g: GridFunction,
}

impl ClrCurve {
    pub fn new(g: GridFunction) -> Result<Self> {
        let total = trapezoid_integral(&g);
        if total.abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!("clr curve integrates to {total}")));
        }
        Ok(Self { g })
    }

    pub fn function(&self) -> &GridFunction {
        &self.g
    }
}

/// `log(max(f, floor))` minus its average over the grid.
pub fn clr_transform(f: &DensityEstimate, floor: f64) -> Result<ClrCurve> {
    if !(floor > 0.0) {
        return Err(Error::InvalidParameter(format!("floor must be positive, got {floor}")));
    }
    let grid = *f.grid();
    let logs = GridFunction::new(grid, f.values().iter().map(|&v| v.max(floor).ln()).collect())?;
    let mean = trapezoid_integral(&logs) / grid.width();
    let g = GridFunction::new(grid, logs.values().iter().map(|v| v - mean).collect())?;
    Ok(ClrCurve { g })
}

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpcaConfig {
    /// Fraction of total variance the kept components must reach.
    pub variance_threshold: f64,
    pub k_max: usize,
}

impl Default for FpcaConfig {
    fn default() -> Self {
        Self { variance_threshold: 0.99, k_max: 2 }
    }
}

/// Approximating exponential family built from training curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFamilyModel {
    mu: GridFunction,
    eigencurves: Vec<GridFunction>,
    eigenvalues: Vec<f64>,
    spectrum: Vec<f64>,
}

/// Natural parameter of an [`ExpFamilyModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalParams(pub Vec<f64>);

impl NaturalParams {
    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }
}

/// Functional PCA of clr curves.
///
/// The covariance operator is discretized with trapezoidal weights and
/// diagonalized through its `M x M` Gram dual, which has the same nonzero
/// spectrum. `K` is the smallest number of leading components reaching the
/// variance threshold, capped at `k_max` and at the rank. Each eigencurve is
/// signed so that its inner product with the first curve's residual is
/// nonnegative.
pub fn fpca(curves: &[ClrCurve], config: FpcaConfig) -> Result<ExpFamilyModel> {
    if curves.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: curves.len() });
    }
    if !(config.variance_threshold > 0.0 && config.variance_threshold <= 1.0) || config.k_max == 0 {
        return Err(Error::InvalidParameter(format!("bad fpca config {config:?}")));
    }
    let grid = *curves[0].g.grid();
    if let Some(c) = curves.iter().find(|c| *c.g.grid() != grid) {
        return Err(Error::InvalidGrid(format!("curves on different grids: {:?} vs {grid:?}", c.g.grid())));
    }
    let m = curves.len();
    let n = grid.len();

    let mut mu = vec![0.0; n];
    for c in curves {
        for (acc, v) in mu.iter_mut().zip(c.g.values()) {
            *acc += v;
        }
    }
    for v in mu.iter_mut() {
        *v /= m as f64;
    }
    let mu = GridFunction::new(grid, mu)?;
    let residuals: Vec<GridFunction> = curves
        .iter()
        .map(|c| {
            let vals = c.g.values().iter().zip(mu.values()).map(|(a, b)| a - b).collect();
            GridFunction::new(grid, vals)
        })
        .collect::<Result<_>>()?;

    let mut gram = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = residuals[i].inner(&residuals[j]) / m as f64;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();

    let total: f64 = spectrum.iter().sum();
    let lead = spectrum[0];
    let positive = |l: f64| l > 1e-14 && l > 1e-12 * lead;
    let rank = spectrum.iter().take_while(|&&l| positive(l)).count();

    let k = if rank == 0 {
        1
    } else {
        let mut acc = 0.0;
        let mut k = rank;
        for (i, l) in spectrum.iter().enumerate().take(rank) {
            acc += l;
            if acc >= config.variance_threshold * total {
                k = i + 1;
                break;
            }
        }
        k.min(config.k_max).min(rank)
    };

    let mut eigencurves: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let lambda = eig.eigenvalues[idx];
        if !positive(lambda.max(0.0)) {
            eigencurves.push(vec![0.0; n]);
            continue;
        }
        let a = eig.eigenvectors.column(idx);
        let mut phi = vec![0.0; n];
        for (coef, r) in a.iter().zip(&residuals) {
            for (p, v) in phi.iter_mut().zip(r.values()) {
                *p += coef * v;
            }
        }
        eigencurves.push(phi);
    }

    // Gram-Schmidt in the weighted inner product removes residual
    // non-orthogonality from the dual construction.
    let weights = grid.trapezoid_weights();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(&weights).map(|((x, y), w)| x * y * w).sum() };
    for i in 0..eigencurves.len() {
        for j in 0..i {
            let proj = dot(&eigencurves[i], &eigencurves[j]);
            let (head, tail) = eigencurves.split_at_mut(i);
            for (p, q) in tail[0].iter_mut().zip(&head[j]) {
                *p -= proj * q;
            }
        }
        let norm = dot(&eigencurves[i], &eigencurves[i]).sqrt();
        if norm > 0.0 {
            let first = residuals[0].values();
            let sign = if dot(&eigencurves[i], first) < 0.0 { -1.0 } else { 1.0 };
            for p in eigencurves[i].iter_mut() {
                *p *= sign / norm;
            }
        }
    }

    Ok(ExpFamilyModel {
        mu,
        eigencurves: eigencurves.into_iter().map(|v| GridFunction::new(grid, v)).collect::<Result<_>>()?,
        eigenvalues: spectrum[..k].to_vec(),
        spectrum,
    })
}

/// Quadrature summary of the family member at `theta`.
struct Moments {
    log_partition: f64,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl ExpFamilyModel {
    pub fn new(mu: GridFunction, eigencurves: Vec<GridFunction>, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigencurves.is_empty() || eigencurves.len() != eigenvalues.len() {
            return Err(Error::InvalidParameter("need one eigenvalue per eigencurve, K >= 1".into()));
        }
        if eigencurves.iter().any(|c| c.grid() != mu.grid()) {
            return Err(Error::InvalidGrid("eigencurves and mean on different grids".into()));
        }
        let spectrum = eigenvalues.clone();
        Ok(Self { mu, eigencurves, eigenvalues, spectrum })
    }

    pub fn k(&self) -> usize {
        self.eigencurves.len()
    }

    pub fn grid(&self) -> &SupportGrid {
        self.mu.grid()
    }

    pub fn mu(&self) -> &GridFunction {
        &self.mu
    }

    pub fn eigencurves(&self) -> &[GridFunction] {
        &self.eigencurves
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Full training spectrum, not only the kept components.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    fn check_theta(&self, theta: &NaturalParams) -> Result<()> {
        if theta.0.len() != self.k() {
            return Err(Error::LengthMismatch { expected: self.k(), got: theta.0.len() });
        }
        Ok(())
    }

    fn exponent(&self, theta: &[f64]) -> Vec<f64> {
        let mut a = self.mu.values().to_vec();
        for (t, phi) in theta.iter().zip(&self.eigencurves) {
            if *t != 0.0 {
                for (x, p) in a.iter_mut().zip(phi.values()) {
                    *x += t * p;
                }
            }
        }
        a
    }

    fn moments(&self, theta: &[f64]) -> Moments {
        let k = self.k();
        let a = self.exponent(theta);
        let amax = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights = self.grid().trapezoid_weights();
        let e: Vec<f64> = a.iter().zip(&weights).map(|(x, w)| (x - amax).exp() * w).collect();
        let z: f64 = e.iter().sum();
        let mut mean = DVector::zeros(k);
        let mut second = DMatrix::zeros(k, k);
        let mut phis = vec![0.0; k];
        for (i, &ei) in e.iter().enumerate() {
            if ei == 0.0 {
                continue;
            }
            let p = ei / z;
            for (slot, c) in phis.iter_mut().zip(&self.eigencurves) {
                *slot = c.values()[i];
            }
            for r in 0..k {
                let pr = p * phis[r];
                mean[r] += pr;
                for c in 0..=r {
                    second[(r, c)] += pr * phis[c];
                }
            }
        }
        let mut cov = second;
        for r in 0..k {
            for c in 0..=r {
                let v = cov[(r, c)] - mean[r] * mean[c];
                cov[(r, c)] = v;
                cov[(c, r)] = v;
            }
        }
        Moments { log_partition: amax + z.ln(), mean, cov }
    }

    /// Serializes to a self-describing JSON artifact.
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        let g = self.grid();
        let artifact = ModelArtifact {
            format: MODEL_FORMAT.to_string(),
            grid: GridSpec { lo: g.lo(), hi: g.hi(), n_points: g.len() },
            mu: self.mu.values().to_vec(),
            eigencurves: self.eigencurves.iter().map(|c| c.values().to_vec()).collect(),
            eigenvalues: self.eigenvalues.clone(),
            spectrum: self.spectrum.clone(),
        };
        serde_json::to_writer(w, &artifact)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let a: ModelArtifact = serde_json::from_reader(r)?;
        if a.format != MODEL_FORMAT {
            return Err(Error::InvalidParameter(format!("unknown model format {:?}", a.format)));
        }
        let grid = SupportGrid::new(a.grid.lo, a.grid.hi, a.grid.n_points)?;
        let mut model = Self::new(
            GridFunction::new(grid, a.mu)?,
            a.eigencurves.into_iter().map(|c| GridFunction::new(grid, c)).collect::<Result<_>>()?,
            a.eigenvalues,
        )?;
        model.spectrum = a.spectrum;
        Ok(model)
    }
}

const MODEL_FORMAT: &str = "mapp-exp-family-v1";

#[derive(Serialize, Deserialize)]
struct GridSpec {
    lo: f64,
    hi: f64,
    n_points: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelArtifact {
    format: String,
    grid: GridSpec,
    mu: Vec<f64>,
    eigencurves: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    spectrum: Vec<f64>,
}

/// `log of the integral of exp(mu + sum theta_k phi_k)` over the grid, computed
/// with max-subtraction.
pub fn log_partition(model: &ExpFamilyModel, theta: &NaturalParams) -> Result<f64> {
    model.check_theta(theta)?;
    let a = model.exponent(&theta.0);
    let amax = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shifted = GridFunction::new(*model.grid(), a.iter().map(|x| (x - amax).exp()).collect())?;
    Ok(amax + trapezoid_integral(&shifted).ln())
}

/// Family member at `theta` as a grid density.
pub fn family_density(model: &ExpFamilyModel, theta: &NaturalParams) -> Result<DensityEstimate> {
    let b = log_partition(model, theta)?;
    let values = model.exponent(&theta.0).into_iter().map(|x| (x - b).exp()).collect();
    DensityEstimate::normalized(*model.grid(), values)
}

/// Sample means of the eigencurves, interpolated linearly at each sample.
pub fn sufficient_statistics(samples: &[f64], model: &ExpFamilyModel) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let grid = model.grid();
    if let Some(&value) = samples.iter().find(|&&b| !grid.contains(b)) {
        return Err(Error::OutOfSupport { value, lo: grid.lo(), hi: grid.hi() });
    }
    let m = samples.len() as f64;
    Ok(model
        .eigencurves
        .iter()
        .map(|phi| samples.iter().map(|&b| phi.interpolate(b)).sum::<f64>() / m)
        .collect())
}

/// Log-likelihood per sample, up to the `mu` term: `<theta, s> - B(theta)`.
pub fn mle_objective(model: &ExpFamilyModel, stats: &[f64], theta: &NaturalParams) -> Result<f64> {
    Ok(theta.0.iter().zip(stats).map(|(t, s)| t * s).sum::<f64>() - log_partition(model, theta)?)
}

/// Gradient of [`mle_objective`]: `s - E_theta[phi]`.
pub fn mle_gradient(model: &ExpFamilyModel, stats: &[f64], theta: &NaturalParams) -> Result<Vec<f64>> {
    model.check_theta(theta)?;
    let mom = model.moments(&theta.0);
    Ok(stats.iter().zip(mom.mean.iter()).map(|(s, e)| s - e).collect())
}

/// Stopping rules for [`fit_theta_mle_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub gradient_tolerance: f64,
    pub newton_iterations: usize,
    /// Extra plain gradient-ascent iterations tried after Newton stalls.
    pub fallback_iterations: usize,
    /// Hessian condition number above which a gradient step replaces the Newton step.
    pub max_condition: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { gradient_tolerance: 1e-8, newton_iterations: 100, fallback_iterations: 2000, max_condition: 1e12 }
    }
}

pub fn fit_theta_mle(samples: &[f64], model: &ExpFamilyModel) -> Result<NaturalParams> {
    fit_theta_mle_with(samples, model, MleOptions::default())
}

/// Maximum-likelihood natural parameter by damped Newton from the origin.
pub fn fit_theta_mle_with(samples: &[f64], model: &ExpFamilyModel, opts: MleOptions) -> Result<NaturalParams> {
    let stats = sufficient_statistics(samples, model)?;
    let k = model.k();
    let mut theta = vec![0.0; k];
    let objective = |t: &[f64], b: f64| t.iter().zip(&stats).map(|(x, s)| x * s).sum::<f64>() - b;

    let mut mom = model.moments(&theta);
    let mut value = objective(&theta, mom.log_partition);
    let max_iter = opts.newton_iterations + opts.fallback_iterations;
    for iter in 0..=max_iter {
        let grad = DVector::from_iterator(k, stats.iter().zip(mom.mean.iter()).map(|(s, e)| s - e));
        let grad_norm = grad.amax();
        if grad_norm < opts.gradient_tolerance {
            return Ok(NaturalParams(theta));
        }
        if iter == max_iter {
            return Err(Error::MleNotConverged { theta, grad_norm });
        }

        let newton = if iter < opts.newton_iterations { newton_direction(&mom.cov, &grad, opts.max_condition) } else { None };
        let (dir, mut step) = match newton {
            Some(d) => (d, 1.0),
            None => {
                // Curvature bound from the covariance trace keeps the first trial step sane.
                let curv = mom.cov.trace().max(1e-12);
                (grad.clone(), 1.0 / curv)
            }
        };
        let slope = grad.dot(&dir);
        // Below rounding level the objective cannot rank trial points.
        let negligible = step * slope <= 64.0 * f64::EPSILON * value.abs().max(1.0);
        let mut accepted = false;
        if negligible {
            let trial: Vec<f64> = theta.iter().zip(dir.iter()).map(|(t, d)| t + step * d).collect();
            let trial_mom = model.moments(&trial);
            let trial_value = objective(&trial, trial_mom.log_partition);
            if trial_value.is_finite() {
                theta = trial;
                mom = trial_mom;
                value = trial_value;
                continue;
            }
        }
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(dir.iter()).map(|(t, d)| t + step * d).collect();
            let trial_mom = model.moments(&trial);
            let trial_value = objective(&trial, trial_mom.log_partition);
            if trial_value.is_finite() && trial_value >= value + 1e-4 * step * slope {
                theta = trial;
                mom = trial_mom;
                value = trial_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No ascent possible at floating-point resolution.
            let grad_norm = grad.amax();
            if grad_norm < opts.gradient_tolerance.sqrt() {
                return Ok(NaturalParams(theta));
            }
            return Err(Error::MleNotConverged { theta, grad_norm });
        }
    }
    unreachable!("loop returns on its last iteration")
}

fn newton_direction(cov: &DMatrix<f64>, grad: &DVector<f64>, max_condition: f64) -> Option<DVector<f64>> {
    let eig = SymmetricEigen::new(cov.clone());
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if !(lmin > 0.0) || lmax / lmin > max_condition {
        return None;
    }
    let coords = eig.eigenvectors.transpose() * grad;
    let scaled = DVector::from_iterator(coords.len(), coords.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| c / l));
    Some(&eig.eigenvectors * scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::grid::cumulative_from_density;

    fn grid() -> SupportGrid {
        SupportGrid::default()
    }

    fn linear_model(slope_mu: f64) -> ExpFamilyModel {
        let g = grid();
        let mid = 0.5 * (g.lo() + g.hi());
        let mu = GridFunction::from_fn(g, |v| slope_mu * (v - mid)).unwrap();
        // unit-norm linear eigencurve
        let raw = GridFunction::from_fn(g, |v| v - mid).unwrap();
        let norm = raw.inner(&raw).sqrt();
        let phi = GridFunction::from_fn(g, |v| (v - mid) / norm).unwrap();
        ExpFamilyModel::new(mu, vec![phi], vec![1.0]).unwrap()
    }

    #[test]
    fn clr_of_uniform_is_zero() {
        let c = clr_transform(&DensityEstimate::uniform(grid()), DEFAULT_FLOOR).unwrap();
        assert!(c.function().values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn clr_of_exponential_is_linear() {
        let g = grid();
        let rate = 0.4;
        let f = DensityEstimate::normalized(g, g.points().map(|v| (-rate * v).exp()).collect()).unwrap();
        let c = clr_transform(&f, DEFAULT_FLOOR).unwrap();
        let mid = 0.5 * (g.lo() + g.hi());
        for (v, got) in g.points().zip(c.function().values()) {
            assert_abs_diff_eq!(*got, -rate * v + rate * mid, epsilon = 1e-9);
        }
        assert!(trapezoid_integral(c.function()).abs() < 1e-6);
    }

    #[test]
    fn clr_floor_absorbs_zeros() {
        let g = grid();
        let mut vals = vec![0.0; g.len()];
        vals[100..200].iter_mut().for_each(|v| *v = 1.0);
        let f = DensityEstimate::normalized(g, vals).unwrap();
        let c = clr_transform(&f, DEFAULT_FLOOR).unwrap();
        assert!(c.function().values().iter().all(|v| v.is_finite()));
        assert!(trapezoid_integral(c.function()).abs() < 1e-6);
        assert!(clr_transform(&f, 0.0).is_err());
    }

    #[test]
    fn fpca_rejects_single_curve() {
        let c = clr_transform(&DensityEstimate::uniform(grid()), DEFAULT_FLOOR).unwrap();
        assert!(matches!(fpca(&[c], FpcaConfig::default()), Err(Error::TooFew { .. })));
    }

    #[test]
    fn fpca_identical_curves_is_degenerate() {
        let g = grid();
        let f = DensityEstimate::normalized(g, g.points().map(|v| (-0.3 * v).exp()).collect()).unwrap();
        let c = clr_transform(&f, DEFAULT_FLOOR).unwrap();
        let model = fpca(&[c.clone(), c.clone(), c], FpcaConfig::default()).unwrap();
        assert_eq!(model.k(), 1);
        assert!(model.spectrum().iter().all(|l| l.abs() < 1e-10));
        let theta = fit_theta_mle(&[2.0, 3.0, 4.0], &model).unwrap();
        assert_eq!(theta.0, vec![0.0]);
        let dens = family_density(&model, &theta).unwrap();
        assert!(dens.function().sup_distance(f.function()) < 1e-9);
    }

    #[test]
    fn log_partition_flat() {
        let g = grid();
        let model = ExpFamilyModel::new(GridFunction::zeros(g), vec![GridFunction::zeros(g)], vec![0.0]).unwrap();
        assert_abs_diff_eq!(log_partition(&model, &NaturalParams::zeros(1)).unwrap(), 9.2f64.ln(), epsilon = 1e-12);
        let d = family_density(&model, &NaturalParams::zeros(1)).unwrap();
        assert!(d.values().iter().all(|v| (v - 1.0 / 9.2).abs() < 1e-12));
        assert!(log_partition(&model, &NaturalParams::zeros(2)).is_err());
    }

    #[test]
    fn log_partition_at_origin_is_log_integral_of_exp_mu() {
        let model = linear_model(-0.3);
        let expmu = GridFunction::from_fn(*model.grid(), |v| model.mu().interpolate(v).exp()).unwrap();
        let b = log_partition(&model, &NaturalParams::zeros(1)).unwrap();
        assert_abs_diff_eq!(b, trapezoid_integral(&expmu).ln(), epsilon = 1e-12);
    }

    #[test]
    fn log_partition_affine_closed_form() {
        // exp of an affine exponent integrates in closed form.
        let model = linear_model(-0.3);
        let g = *model.grid();
        let mid = 0.5 * (g.lo() + g.hi());
        let raw = GridFunction::from_fn(g, |v| v - mid).unwrap();
        let norm = raw.inner(&raw).sqrt();
        for theta in [-2.0, 0.0, 1.5, 4.0] {
            let slope: f64 = -0.3 + theta / norm;
            let exact = if slope.abs() < 1e-12 {
                g.width().ln()
            } else {
                ((slope * (g.hi() - mid)).exp() - (slope * (g.lo() - mid)).exp()).abs().ln() - slope.abs().ln()
            };
            let b = log_partition(&model, &NaturalParams(vec![theta])).unwrap();
            assert_abs_diff_eq!(b, exact, epsilon = 1e-6);
        }
    }

    #[test]
    fn family_density_is_normalized() {
        let model = linear_model(0.2);
        for theta in [-3.0, 0.0, 2.0] {
            let d = family_density(&model, &NaturalParams(vec![theta])).unwrap();
            assert_abs_diff_eq!(trapezoid_integral(d.function()), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn mle_is_stationary_at_origin_when_moments_match() {
        let model = linear_model(0.0);
        // Symmetric samples about the midpoint give zero mean of the odd eigencurve.
        let theta = fit_theta_mle(&[3.0, 5.5, 8.0], &model).unwrap();
        assert!(theta.0[0].abs() < 1e-8);
    }

    #[test]
    fn mle_errors() {
        let model = linear_model(0.0);
        assert!(matches!(fit_theta_mle(&[], &model), Err(Error::EmptySample)));
        assert!(matches!(fit_theta_mle(&[20.0], &model), Err(Error::OutOfSupport { .. })));
    }

    #[test]
    fn mle_iteration_budget_reports_non_convergence() {
        let model = linear_model(0.0);
        let opts = MleOptions { newton_iterations: 1, fallback_iterations: 0, ..MleOptions::default() };
        match fit_theta_mle_with(&[9.5, 9.9, 10.0], &model, opts) {
            Err(Error::MleNotConverged { theta, grad_norm }) => {
                assert!(theta[0] > 0.0);
                assert!(grad_norm >= opts.gradient_tolerance);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn mle_at_support_edge_concentrates_there() {
        // No finite maximizer exists; the iterate runs off until the gradient vanishes numerically.
        let model = linear_model(0.0);
        let theta = fit_theta_mle(&[grid().hi()], &model).unwrap();
        let f = family_density(&model, &theta).unwrap();
        let cdf = cumulative_from_density(&f);
        assert!(cdf.interpolate(10.0) < 1e-3);
    }

    #[test]
    fn model_json_round_trip() {
        let model = linear_model(0.1);
        let mut buf = Vec::new();
        model.write_json(&mut buf).unwrap();
        let back = ExpFamilyModel::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        assert!(ExpFamilyModel::read_json(&b"{\"format\":\"x\"}"[..]).is_err());
    }
}
