//! Monte Carlo estimation of parametric integrals `I(t) = E g(t, X)` with
//! confidence regions in a rearrangement-invariant norm.
//!
//! All `n` trials share the same draws across `t`, so the error process is a
//! normalized sum of i.i.d. random fields and its limit law is Gaussian.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certify::CertificateReport;
use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::process::gaussian_limit_norms;
use crate::ri::RiSpace;
use crate::rng::{derive_seed, stream_rng, StreamRng};
use crate::stats::{clopper_pearson, empirical_quantile};

const LIMIT_TAG: u64 = 0x6c_696d_6974;
const INDEPENDENT_TAG: u64 = 0x69_6e64_6570;

type Integrand = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type Sampler = Arc<dyn Fn(&mut StreamRng, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub struct ParametricIntegralProblem {
    grid: Vec<f64>,
    dim: usize,
    integrand: Integrand,
    sampler: Sampler,
    truth: Option<Vec<f64>>,
    covariance: Option<DMatrix<f64>>,
}

impl fmt::Debug for ParametricIntegralProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricIntegralProblem")
            .field("grid", &self.grid.len())
            .field("dim", &self.dim)
            .field("truth", &self.truth.is_some())
            .field("covariance", &self.covariance.is_some())
            .finish()
    }
}

fn sinc(a: f64) -> f64 {
    if a.abs() < 1e-8 {
        1.0 - a * a / 6.0
    } else {
        a.sin() / a
    }
}

impl ParametricIntegralProblem {
    pub fn new(
        grid: Vec<f64>,
        dim: usize,
        integrand: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        sampler: impl Fn(&mut StreamRng, &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::EmptyDomain);
        }
        Ok(Self { grid, dim, integrand: Arc::new(integrand), sampler: Arc::new(sampler), truth: None, covariance: None })
    }

    pub fn with_truth(mut self, truth: Vec<f64>) -> Result<Self> {
        if truth.len() != self.grid.len() {
            return Err(Error::DimensionMismatch { expected: self.grid.len(), got: truth.len() });
        }
        self.truth = Some(truth);
        Ok(self)
    }

    /// Covariance of `g(t, X)` on the grid.
    pub fn with_covariance(mut self, r: DMatrix<f64>) -> Result<Self> {
        let m = self.grid.len();
        if r.nrows() != m || r.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, got: r.nrows() });
        }
        self.covariance = Some(r);
        Ok(self)
    }

    /// `g(t, x) = cos(t x)` with `X ~ U[0, 1]`; `I(t) = sin t / t`.
    pub fn cos_tx(grid: Vec<f64>) -> Result<Self> {
        let truth = grid.iter().map(|&t| sinc(t)).collect();
        let m = grid.len();
        let cov = DMatrix::from_fn(m, m, |i, j| {
            let (t, s) = (grid[i], grid[j]);
            0.5 * (sinc(t - s) + sinc(t + s)) - sinc(t) * sinc(s)
        });
        Self::new(grid, 1, |t, x| (t * x[0]).cos(), |rng, x| x[0] = rng.random::<f64>())?
            .with_truth(truth)?
            .with_covariance(cov)
    }

    /// Integrand not depending on the random input.
    pub fn constant(grid: Vec<f64>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let truth = grid.iter().map(|&t| f(t)).collect();
        let m = grid.len();
        Self::new(grid, 0, move |t, _| f(t), |_, _| {})?
            .with_truth(truth)?
            .with_covariance(DMatrix::zeros(m, m))
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn truth(&self) -> Option<&[f64]> {
        self.truth.as_deref()
    }

    pub fn covariance(&self) -> Option<&DMatrix<f64>> {
        self.covariance.as_ref()
    }

    /// `n × m` matrix of `g(t_j, x_i)` for `n` draws from `stream_rng(seed, 0)`.
    fn trial_matrix(&self, n: usize, seed: u64) -> Result<DMatrix<f64>> {
        let mut rng = stream_rng(seed, 0);
        let m = self.grid.len();
        let mut x = vec![0.0; self.dim];
        let mut g = DMatrix::zeros(n, m);
        for i in 0..n {
            (self.sampler)(&mut rng, &mut x);
            for (j, &t) in self.grid.iter().enumerate() {
                let v = (self.integrand)(t, &x);
                if !v.is_finite() {
                    return Err(Error::NonFiniteSample { seed, index: i as u64 });
                }
                g[(i, j)] = v;
            }
        }
        Ok(g)
    }
}

fn column_means(g: &DMatrix<f64>) -> Vec<f64> {
    let n = g.nrows() as f64;
    g.column_iter().map(|c| c.sum() / n).collect()
}

fn sample_covariance(g: &DMatrix<f64>, means: &[f64]) -> DMatrix<f64> {
    let mut c = g.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    (c.transpose() * &c) / (g.nrows() as f64 - 1.0)
}

/// `I_n(t) = n^{-1} Σ_i g(t, x_i)`.
pub fn estimate_integral(problem: &ParametricIntegralProblem, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n", value: 0.0, reason: "must be at least 1" });
    }
    Ok(column_means(&problem.trial_matrix(n, seed)?))
}

/// Covariance used for the limiting Gaussian field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceSource {
    /// Sample covariance of the same trials.
    #[default]
    PlugIn,
    /// Sample covariance of a second, independent batch of `n` trials.
    Independent,
    /// The covariance attached to the problem.
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionOptions {
    pub limit_replicas: usize,
    pub covariance: CovarianceSource,
    pub exec: Execution,
}

impl Default for RegionOptions {
    fn default() -> Self {
        Self { limit_replicas: 10_000, covariance: CovarianceSource::PlugIn, exec: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    pub estimate: Vec<f64>,
    pub n: usize,
    pub delta: f64,
    /// `(1 − δ)` quantile of the limiting norm.
    pub u0: f64,
    /// `u0 / sqrt(n)`.
    pub radius: f64,
    pub covariance: CovarianceSource,
    pub limit_replicas: usize,
    pub warnings: Vec<String>,
    #[serde(skip)]
    limit_norms: Vec<f64>,
}

impl ConfidenceRegion {
    /// Quantile of the simulated limit norms at another level.
    pub fn u0_at(&self, delta: f64) -> f64 {
        empirical_quantile(&self.limit_norms, 1.0 - delta)
    }

    /// Membership up to rounding in the estimate: slack `64 ε (||f|| + ||I_n||)`.
    pub fn contains(&self, f: &[f64], space: &RiSpace) -> Result<bool> {
        if f.len() != self.estimate.len() {
            return Err(Error::DimensionMismatch { expected: self.estimate.len(), got: f.len() });
        }
        let diff: Vec<f64> = f.iter().zip(&self.estimate).map(|(a, b)| a - b).collect();
        let slack = 64.0 * f64::EPSILON * (space.norm(f)? + space.norm(&self.estimate)?);
        Ok(space.norm(&diff)? <= self.radius + slack)
    }
}

/// Region `{f : ||f − I_n||_L <= u0 / sqrt(n)}` of asymptotic level `1 − δ`.
pub fn confidence_region(
    problem: &ParametricIntegralProblem,
    n: usize,
    space: &RiSpace,
    delta: f64,
    seed: u64,
    certificate: Option<&CertificateReport>,
    opts: &RegionOptions,
) -> Result<ConfidenceRegion> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParameter { name: "delta", value: delta, reason: "must lie in (0, 0.5]" });
    }
    if opts.limit_replicas < 1000 {
        return Err(Error::TooFewReplicas { needed: 1000, got: opts.limit_replicas });
    }
    if n < 2 {
        return Err(Error::InvalidParameter { name: "n", value: n as f64, reason: "must be at least 2" });
    }
    let g = problem.trial_matrix(n, seed)?;
    let estimate = column_means(&g);
    let cov = match opts.covariance {
        CovarianceSource::PlugIn => sample_covariance(&g, &estimate),
        CovarianceSource::Independent => {
            let h = problem.trial_matrix(n, derive_seed(seed, INDEPENDENT_TAG))?;
            sample_covariance(&h, &column_means(&h))
        }
        CovarianceSource::Known => problem.covariance.clone().ok_or(Error::MissingCovariance)?,
    };
    let mut limit_norms = gaussian_limit_norms(&cov, space, opts.limit_replicas, derive_seed(seed, LIMIT_TAG), opts.exec)?;
    limit_norms.sort_by(f64::total_cmp);
    let u0 = empirical_quantile(&limit_norms, 1.0 - delta);
    let mut warnings = Vec::new();
    match certificate {
        None => warnings.push("no CLT certificate supplied; the limit law is assumed".into()),
        Some(c) if !c.is_certified() => warnings.push(format!("CLT certificate not established ({:?})", c.status)),
        Some(_) => {}
    }
    if n < 100 {
        warnings.push(format!("n = {n} is small for the Gaussian approximation"));
    }
    Ok(ConfidenceRegion {
        estimate,
        n,
        delta,
        u0,
        radius: u0 / (n as f64).sqrt(),
        covariance: opts.covariance,
        limit_replicas: opts.limit_replicas,
        warnings,
        limit_norms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub repetitions: usize,
    pub covered: usize,
    pub rate: f64,
    pub nominal: f64,
    /// 95% Clopper–Pearson interval for the coverage probability.
    pub interval: (f64, f64),
}

/// Fraction of `repetitions` independent regions that contain the truth.
pub fn coverage_experiment(
    problem: &ParametricIntegralProblem,
    n: usize,
    space: &RiSpace,
    delta: f64,
    repetitions: usize,
    seed: u64,
    opts: &RegionOptions,
) -> Result<CoverageResult> {
    let truth = problem.truth().ok_or(Error::MissingTruth)?;
    if repetitions == 0 {
        return Err(Error::InvalidParameter { name: "repetitions", value: 0.0, reason: "must be at least 1" });
    }
    let inner = RegionOptions { exec: Execution::Sequential, ..*opts };
    let hits = map_indices(opts.exec, repetitions, |r| -> Result<bool> {
        confidence_region(problem, n, space, delta, derive_seed(seed, r as u64), None, &inner)?.contains(truth, space)
    })
    .into_iter()
    .collect::<Result<Vec<bool>>>()?;
    let covered = hits.iter().filter(|&&h| h).count();
    Ok(CoverageResult {
        repetitions,
        covered,
        rate: covered as f64 / repetitions as f64,
        nominal: 1.0 - delta,
        interval: clopper_pearson(covered, repetitions, 0.95),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linear_grid;
    use crate::ri::RiKind;
    use approx::assert_relative_eq;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn unit_interval_problem() -> ParametricIntegralProblem {
        ParametricIntegralProblem::cos_tx(linear_grid(0.0, 2.0 * std::f64::consts::PI, 9)).unwrap()
    }

    #[test]
    fn estimate_converges_to_sinc() {
        let p = unit_interval_problem();
        let est = estimate_integral(&p, 100_000, 3).unwrap();
        for (e, t) in est.iter().zip(p.truth().unwrap()) {
            assert!((e - t).abs() < 0.01);
        }
        assert_eq!(est, estimate_integral(&p, 100_000, 3).unwrap());
    }

    #[test]
    fn known_covariance_matches_sample_covariance() {
        let p = unit_interval_problem();
        let g = p.trial_matrix(50_000, 8).unwrap();
        let c = sample_covariance(&g, &column_means(&g));
        let k = p.covariance().unwrap();
        assert!((c - k).abs().max() < 0.01);
    }

    #[test]
    fn quantile_matches_normal_in_one_dimension() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let sigma = 0.7;
        let p = ParametricIntegralProblem::new(vec![0.0], 1, |_, x| x[0], |_, _| {})
            .unwrap()
            .with_covariance(DMatrix::from_element(1, 1, sigma * sigma))
            .unwrap();
        let space = RiSpace::new(RiKind::Lp(2.0), vec![1.0]).unwrap();
        let opts = RegionOptions { limit_replicas: 200_000, covariance: CovarianceSource::Known, exec: Execution::Parallel };
        let region = confidence_region(&p, 400, &space, 0.1, 1, None, &opts).unwrap();
        let exact = sigma * normal.inverse_cdf(0.95);
        assert_relative_eq!(region.u0, exact, max_relative = 0.01);
        assert_relative_eq!(region.radius, region.u0 / 20.0, max_relative = 1e-15);
        assert!(!region.warnings.is_empty());
    }

    #[test]
    fn quantile_matches_product_law_for_sup_norm() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let p = ParametricIntegralProblem::new(vec![0.0, 1.0], 0, |_, _| 0.0, |_, _| {})
            .unwrap()
            .with_covariance(DMatrix::identity(2, 2))
            .unwrap();
        let space = RiSpace::new(RiKind::Lp(f64::INFINITY), vec![0.5, 0.5]).unwrap();
        let opts = RegionOptions { limit_replicas: 200_000, covariance: CovarianceSource::Known, exec: Execution::Parallel };
        let region = confidence_region(&p, 400, &space, 0.05, 2, None, &opts).unwrap();
        // P(max(|Z1|, |Z2|) <= u) = (2Φ(u) − 1)²
        let exact = normal.inverse_cdf((1.0 + 0.95f64.sqrt()) / 2.0);
        assert_relative_eq!(region.u0, exact, max_relative = 0.01);
        assert!(region.u0_at(0.01) > region.u0_at(0.05));
        assert!(region.u0_at(0.05) >= region.u0_at(0.2));
    }

    #[test]
    fn constant_integrand_has_zero_radius() {
        let p = ParametricIntegralProblem::constant(vec![0.0, 0.5, 1.0], |t| t * t).unwrap();
        let space = RiSpace::new(RiKind::Lp(2.0), vec![1.0 / 3.0; 3]).unwrap();
        let region = confidence_region(&p, 200, &space, 0.05, 0, None, &RegionOptions::default()).unwrap();
        assert_eq!(region.radius, 0.0);
        assert!(region.contains(p.truth().unwrap(), &space).unwrap());
    }

    #[test]
    fn argument_validation() {
        let p = unit_interval_problem();
        let space = RiSpace::new(RiKind::Lp(2.0), vec![1.0 / 9.0; 9]).unwrap();
        let o = RegionOptions::default();
        assert!(confidence_region(&p, 100, &space, 0.6, 0, None, &o).is_err());
        let few = RegionOptions { limit_replicas: 999, ..o };
        assert!(matches!(confidence_region(&p, 100, &space, 0.1, 0, None, &few), Err(Error::TooFewReplicas { .. })));
        let no_truth = ParametricIntegralProblem::new(vec![0.0], 0, |_, _| 0.0, |_, _| {}).unwrap();
        let one = RiSpace::new(RiKind::Lp(2.0), vec![1.0]).unwrap();
        assert!(matches!(coverage_experiment(&no_truth, 10, &one, 0.1, 5, 0, &o), Err(Error::MissingTruth)));
        let bad = ParametricIntegralProblem::new(vec![0.0], 1, |_, x| 1.0 / x[0], |_, x| x[0] = 0.0).unwrap();
        assert!(matches!(estimate_integral(&bad, 5, 9), Err(Error::NonFiniteSample { seed: 9, index: 0 })));
    }

    #[test]
    fn small_coverage_run_is_reasonable() {
        let p = unit_interval_problem();
        let space = RiSpace::new(RiKind::Lp(2.0), vec![1.0 / 9.0; 9]).unwrap();
        let opts = RegionOptions { limit_replicas: 2000, ..RegionOptions::default() };
        let cov = coverage_experiment(&p, 500, &space, 0.1, 100, 4, &opts).unwrap();
        assert!(cov.interval.0 <= 0.9 + 0.05 && cov.interval.1 >= 0.9 - 0.05, "{cov:?}");
        let again = coverage_experiment(&p, 500, &space, 0.1, 100, 4, &RegionOptions { exec: Execution::Sequential, ..opts }).unwrap();
        assert_eq!(cov, again);
    }
}
