//! Random-field models on a finite grid, natural distances, mixed norms,
//! normalized sums and empirical CLT checks.
//!
//! Replica `j` of any simulation draws from `stream_rng(seed, j)`, so every
//! output is a pure function of the master seed.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::psi::{gls_norm, ExponentGrid, MomentCurve, PsiFunction};
use crate::ri::RiSpace;
use crate::rng::{derive_seed, stream_rng, StreamRng};
use crate::stats::{ks_two_sample, std_dev};

const PSD_TOL: f64 = 1e-8;
const LIMIT_TAG: u64 = 0x4c_494d_4954;

/// Law of the i.i.d. coefficients of a linear field; all have mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientLaw {
    Gaussian,
    /// Uniform on `[−√3, √3]`.
    Uniform,
    Rademacher,
    /// `(B − p) / sqrt(p (1 − p))` with `B ~ Bernoulli(p)`.
    SkewedBernoulli { p: f64 },
}

impl CoefficientLaw {
    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            CoefficientLaw::Gaussian => rng.sample(StandardNormal),
            CoefficientLaw::Uniform => 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0),
            CoefficientLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            CoefficientLaw::SkewedBernoulli { p } => {
                let b = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                (b - p) / (p * (1.0 - p)).sqrt()
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, CoefficientLaw::Gaussian)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CoefficientLaw::SkewedBernoulli { p } if !(p > 0.0 && p < 1.0) => {
                Err(Error::InvalidParameter { name: "p", value: p, reason: "must lie in (0, 1)" })
            }
            _ => Ok(()),
        }
    }
}

/// Covariance kernels on one-dimensional coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kernel {
    /// `min(t, s)`.
    Brownian,
    /// `exp(−(t − s)² / (2 ℓ²))`.
    SquaredExponential { length: f64 },
    /// `exp(−|t − s| / ℓ)`.
    Exponential { length: f64 },
}

impl Kernel {
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        match *self {
            Kernel::Brownian => t.min(s),
            Kernel::SquaredExponential { length } => (-(t - s).powi(2) / (2.0 * length * length)).exp(),
            Kernel::Exponential { length } => (-(t - s).abs() / length).exp(),
        }
    }

    pub fn matrix(&self, coords: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(coords.len(), coords.len(), |i, j| self.eval(coords[i], coords[j]))
    }
}

type PathSampler = Arc<dyn Fn(&mut StreamRng) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum ProcessKind {
    /// `ξ = B c` with i.i.d. standardized coefficients `c`.
    Linear { basis: DMatrix<f64>, law: CoefficientLaw },
    Deterministic { values: Vec<f64> },
    Sampler(PathSampler),
}

/// A random field on `m` grid points.
#[derive(Clone)]
pub struct ProcessModel {
    kind: ProcessKind,
    points: usize,
    covariance: Option<DMatrix<f64>>,
    mean_zero: bool,
}

impl fmt::Debug for ProcessModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            ProcessKind::Linear { basis, law } => format!("Linear({} terms, {law:?})", basis.ncols()),
            ProcessKind::Deterministic { .. } => "Deterministic".into(),
            ProcessKind::Sampler(_) => "Sampler".into(),
        };
        f.debug_struct("ProcessModel")
            .field("kind", &kind)
            .field("points", &self.points)
            .field("mean_zero", &self.mean_zero)
            .finish()
    }
}

/// `F` with `F Fᵀ = R`, from an eigendecomposition with small negative
/// eigenvalues clipped; columns with zero weight are dropped.
pub fn covariance_factor(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = r.nrows();
    if r.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: r.ncols() });
    }
    let scale = r.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..m {
        for j in 0..i {
            if (r[(i, j)] - r[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidParameter { name: "covariance", value: r[(i, j)], reason: "must be symmetric" });
            }
        }
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { at: 0.0, value: f64::NAN });
    }
    let trace = r.trace();
    let sym = (r + r.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL * trace.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let keep: Vec<usize> = (0..m).filter(|&k| eig.eigenvalues[k] > 1e-14 * trace).collect();
    let mut f = DMatrix::zeros(m, keep.len().max(1));
    for (c, &k) in keep.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        for i in 0..m {
            f[(i, c)] = eig.eigenvectors[(i, k)] * s;
        }
    }
    Ok(f)
}

impl ProcessModel {
    /// Centered Gaussian field with grid covariance `r`.
    pub fn gaussian(r: DMatrix<f64>) -> Result<Self> {
        let factor = covariance_factor(&r)?;
        Ok(Self {
            points: r.nrows(),
            kind: ProcessKind::Linear { basis: factor, law: CoefficientLaw::Gaussian },
            covariance: Some(r),
            mean_zero: true,
        })
    }

    pub fn gaussian_kernel(coords: &[f64], kernel: Kernel, scale: f64) -> Result<Self> {
        Self::gaussian(kernel.matrix(coords) * (scale * scale))
    }

    /// `ξ(t_i) = Σ_k basis[k][i] c_k`.
    pub fn linear(basis: &[Vec<f64>], law: CoefficientLaw) -> Result<Self> {
        law.validate()?;
        let k = basis.len();
        if k == 0 {
            return Err(Error::EmptyDomain);
        }
        let m = basis[0].len();
        if let Some(b) = basis.iter().find(|b| b.len() != m) {
            return Err(Error::DimensionMismatch { expected: m, got: b.len() });
        }
        let b = DMatrix::from_fn(m, k, |i, j| basis[j][i]);
        let cov = &b * b.transpose();
        Ok(Self { points: m, kind: ProcessKind::Linear { basis: b, law }, covariance: Some(cov), mean_zero: true })
    }

    /// Smooth field `Σ_{k<=terms} c_k √2 sin(kπt) / k` on coordinates in `[0, 1]`.
    pub fn smooth_sine(coords: &[f64], terms: usize, law: CoefficientLaw) -> Result<Self> {
        let basis: Vec<Vec<f64>> = (1..=terms)
            .map(|k| {
                let k = k as f64;
                coords.iter().map(|t| 2f64.sqrt() * (k * std::f64::consts::PI * t).sin() / k).collect()
            })
            .collect();
        Self::linear(&basis, law)
    }

    /// `Σ_k a_k (ε_k cos(n_k t) + ε'_k sin(n_k t))` with Rademacher signs.
    pub fn lacunary(coords: &[f64], amplitudes: &[f64], frequencies: &[f64], min_ratio: f64) -> Result<Self> {
        if amplitudes.len() != frequencies.len() {
            return Err(Error::DimensionMismatch { expected: frequencies.len(), got: amplitudes.len() });
        }
        if !(min_ratio > 1.0) {
            return Err(Error::InvalidParameter { name: "ratio", value: min_ratio, reason: "must exceed 1" });
        }
        for w in frequencies.windows(2) {
            if !(w[0] > 0.0 && w[1] / w[0] >= min_ratio) {
                return Err(Error::InvalidParameter {
                    name: "frequency ratio",
                    value: w[1] / w[0],
                    reason: "lacunary frequencies must grow geometrically",
                });
            }
        }
        let mut basis = Vec::with_capacity(2 * amplitudes.len());
        for (a, n) in amplitudes.iter().zip(frequencies) {
            basis.push(coords.iter().map(|t| a * (n * t).cos()).collect());
            basis.push(coords.iter().map(|t| a * (n * t).sin()).collect());
        }
        Self::linear(&basis, CoefficientLaw::Rademacher)
    }

    /// Frequencies `2^k`, `k = 1..=terms`.
    pub fn lacunary_dyadic(coords: &[f64], amplitudes: &[f64]) -> Result<Self> {
        let freqs: Vec<f64> = (1..=amplitudes.len()).map(|k| 2f64.powi(k as i32)).collect();
        Self::lacunary(coords, amplitudes, &freqs, 2.0)
    }

    pub fn deterministic(values: Vec<f64>) -> Self {
        let mean_zero = values.iter().all(|&v| v == 0.0);
        let m = values.len();
        Self {
            points: m,
            kind: ProcessKind::Deterministic { values },
            covariance: Some(DMatrix::zeros(m, m)),
            mean_zero,
        }
    }

    /// User sampler producing one path of length `points` per call.
    pub fn from_sampler(
        points: usize,
        sampler: impl Fn(&mut StreamRng) -> Vec<f64> + Send + Sync + 'static,
        mean_zero: bool,
        covariance: Option<DMatrix<f64>>,
    ) -> Self {
        Self { kind: ProcessKind::Sampler(Arc::new(sampler)), points, covariance, mean_zero }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn covariance(&self) -> Option<&DMatrix<f64>> {
        self.covariance.as_ref()
    }

    /// Multiplies the field by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let kind = match &self.kind {
            ProcessKind::Linear { basis, law } => ProcessKind::Linear { basis: basis * c, law: *law },
            ProcessKind::Deterministic { values } => ProcessKind::Deterministic { values: values.iter().map(|v| v * c).collect() },
            ProcessKind::Sampler(f) => {
                let f = f.clone();
                ProcessKind::Sampler(Arc::new(move |rng| f(rng).into_iter().map(|v| v * c).collect()))
            }
        };
        Self { kind, points: self.points, covariance: self.covariance.as_ref().map(|r| r * (c * c)), mean_zero: self.mean_zero }
    }

    /// `n^{-1/2} Σ_{i<n} ξ_i` drawn from `rng`.
    fn draw_sum(&self, rng: &mut StreamRng, n: usize) -> Vec<f64> {
        let scale = 1.0 / (n as f64).sqrt();
        match &self.kind {
            ProcessKind::Linear { basis, law } => {
                let mut c = DVector::zeros(basis.ncols());
                for _ in 0..n {
                    for k in 0..basis.ncols() {
                        c[k] += law.draw(rng);
                    }
                }
                (basis * c * scale).iter().copied().collect()
            }
            ProcessKind::Deterministic { values } => values.iter().map(|v| v * n as f64 * scale).collect(),
            ProcessKind::Sampler(f) => {
                let mut acc = vec![0.0; self.points];
                for _ in 0..n {
                    for (a, v) in acc.iter_mut().zip(f(rng)) {
                        *a += v;
                    }
                }
                acc.into_iter().map(|v| v * scale).collect()
            }
        }
    }

    /// Replica `index` of a single path.
    pub fn sample(&self, seed: u64, index: u64) -> Vec<f64> {
        self.draw_sum(&mut stream_rng(seed, index), 1)
    }

    /// Replica `index` of `S_n`.
    pub fn sample_sn(&self, n: usize, seed: u64, index: u64) -> Result<NormalizedSum> {
        if !self.mean_zero {
            return Err(Error::NotMeanZero);
        }
        if n == 0 {
            return Err(Error::InvalidParameter { name: "n", value: 0.0, reason: "must be at least 1" });
        }
        Ok(NormalizedSum { n, values: self.draw_sum(&mut stream_rng(seed, index), n) })
    }

    /// Closed-form moment curve of `ξ(t) − ξ(s)` (`s = None` for `ξ(t)`).
    pub fn moment_oracle(&self, t: usize, s: Option<usize>) -> Option<MomentCurve> {
        match &self.kind {
            ProcessKind::Linear { law: CoefficientLaw::Gaussian, .. } => {
                let r = self.covariance.as_ref()?;
                let var = match s {
                    Some(s) => r[(t, t)] - 2.0 * r[(t, s)] + r[(s, s)],
                    None => r[(t, t)],
                };
                Some(MomentCurve::gaussian(var.max(0.0).sqrt()))
            }
            ProcessKind::Deterministic { values } => {
                Some(MomentCurve::constant(values[t] - s.map_or(0.0, |s| values[s])))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSum {
    pub n: usize,
    pub values: Vec<f64>,
}

/// Where moment curves come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentSource {
    Oracle,
    MonteCarlo { replicas: usize, seed: u64 },
}

fn mc_grid(replicas: usize) -> (f64, ExponentGrid) {
    let cap = (replicas as f64).ln().max(2.0);
    (cap, ExponentGrid { nodes: 64, p_cap: cap })
}

fn sample_paths(model: &ProcessModel, n: usize, replicas: usize, seed: u64, exec: Execution) -> Vec<Vec<f64>> {
    map_indices(exec, replicas, |j| model.draw_sum(&mut stream_rng(seed, j as u64), n))
}

/// GLS norm of replica increments `paths[j][t] − paths[j][s]`.
fn empirical_increment_norm(paths: &[Vec<f64>], t: usize, s: usize, psi: &PsiFunction) -> Result<f64> {
    let inc: Vec<f64> = paths.iter().map(|p| p[t] - p[s]).collect();
    let (cap, grid) = mc_grid(paths.len());
    gls_norm(&MomentCurve::from_samples(&inc, cap), psi, &grid)
}

/// `d_ψ(t, s) = ||ξ(t) − ξ(s)||_{Gψ}`.
pub fn natural_distance(model: &ProcessModel, psi: &PsiFunction, t: usize, s: usize, source: MomentSource) -> Result<f64> {
    if t == s {
        return Ok(0.0);
    }
    match source {
        MomentSource::Oracle => {
            let curve = model
                .moment_oracle(t, Some(s))
                .ok_or_else(|| Error::NoMomentSource("model has no closed-form moments".into()))?;
            gls_norm(&curve, psi, &ExponentGrid::default())
        }
        MomentSource::MonteCarlo { replicas, seed } => {
            let paths = sample_paths(model, 1, replicas, seed, Execution::default());
            empirical_increment_norm(&paths, t, s, psi)
        }
    }
}

/// Full `d_ψ` table; Monte Carlo sources share one set of replicas.
pub fn natural_distance_matrix(model: &ProcessModel, psi: &PsiFunction, source: MomentSource, exec: Execution) -> Result<Vec<Vec<f64>>> {
    let m = model.points();
    let paths = match source {
        MomentSource::MonteCarlo { replicas, seed } => Some(sample_paths(model, 1, replicas, seed, exec)),
        MomentSource::Oracle => None,
    };
    let rows = map_indices(exec, m, |t| -> Result<Vec<f64>> {
        (0..m)
            .map(|s| {
                if s <= t {
                    return Ok(0.0);
                }
                match &paths {
                    Some(p) => empirical_increment_norm(p, t, s, psi),
                    None => natural_distance(model, psi, t, s, MomentSource::Oracle),
                }
            })
            .collect()
    });
    let mut table = rows.into_iter().collect::<Result<Vec<_>>>()?;
    for t in 0..m {
        for s in 0..t {
            table[t][s] = table[s][t];
        }
    }
    Ok(table)
}

/// `sup_t ||ξ(t)||_{Gψ}` from the moment oracle.
pub fn sup_pointwise_norm(model: &ProcessModel, psi: &PsiFunction) -> Result<f64> {
    let mut sup = 0.0_f64;
    for t in 0..model.points() {
        let curve = model
            .moment_oracle(t, None)
            .ok_or_else(|| Error::NoMomentSource("model has no closed-form moments".into()))?;
        sup = sup.max(gls_norm(&curve, psi, &ExponentGrid::default())?);
    }
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub value: f64,
    /// `(n, estimate)` for Monte Carlo sources.
    pub per_n: Vec<(usize, f64)>,
    /// The value is a maximum over finitely many `n`, hence a lower estimate.
    pub lower_estimate: bool,
}

/// `ρ_ψ(t, s) = sup_n ||S_n(t) − S_n(s)||_{Gψ_R}`; pass the Rosenthal-transformed ψ.
///
/// With a moment oracle the single-replica increment norm is returned, which
/// bounds the supremum over `n` by the Rosenthal inequality.
pub fn rho_distance(
    model: &ProcessModel,
    psi_r: &PsiFunction,
    t: usize,
    s: usize,
    source: MomentSource,
    n_set: &[usize],
) -> Result<RhoEstimate> {
    if !model.is_mean_zero() {
        return Err(Error::NotMeanZero);
    }
    if t == s {
        return Ok(RhoEstimate { value: 0.0, per_n: Vec::new(), lower_estimate: false });
    }
    match source {
        MomentSource::Oracle => {
            let v = natural_distance(model, psi_r, t, s, MomentSource::Oracle)?;
            Ok(RhoEstimate { value: v, per_n: Vec::new(), lower_estimate: false })
        }
        MomentSource::MonteCarlo { replicas, seed } => {
            let mut per_n = Vec::with_capacity(n_set.len());
            for &n in n_set {
                let paths = sample_paths(model, n, replicas, derive_seed(seed, n as u64), Execution::default());
                per_n.push((n, empirical_increment_norm(&paths, t, s, psi_r)?));
            }
            let value = per_n.iter().map(|x| x.1).fold(0.0, f64::max);
            Ok(RhoEstimate { value, per_n, lower_estimate: true })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedNormEstimate {
    pub value: f64,
    pub std_error: f64,
    pub replicas: usize,
    /// Largest exponent used for empirical moments.
    pub p_cap: f64,
    #[serde(skip)]
    pub norms: Vec<f64>,
}

const BATCHES: usize = 10;

/// `|| ||ξ||_L ||_{Gψ}` from `replicas` simulated paths.
pub fn empirical_mixed_norm(
    model: &ProcessModel,
    space: &RiSpace,
    psi: &PsiFunction,
    replicas: usize,
    seed: u64,
    exec: Execution,
) -> Result<MixedNormEstimate> {
    if replicas < 100 {
        return Err(Error::TooFewReplicas { needed: 100, got: replicas });
    }
    let norms = map_indices(exec, replicas, |j| space.norm(&model.sample(seed, j as u64)));
    let norms = norms.into_iter().collect::<Result<Vec<f64>>>()?;
    if let Some(j) = norms.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample { seed, index: j as u64 });
    }
    let (cap, grid) = mc_grid(replicas);
    let value = gls_norm(&MomentCurve::from_samples(&norms, cap), psi, &grid)?;
    let size = replicas / BATCHES;
    let batch: Vec<f64> = (0..BATCHES)
        .map(|b| gls_norm(&MomentCurve::from_samples(&norms[b * size..(b + 1) * size], cap), psi, &grid))
        .collect::<Result<_>>()?;
    let std_error = std_dev(&batch) / (BATCHES as f64).sqrt();
    Ok(MixedNormEstimate { value, std_error, replicas, p_cap: cap, norms })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub n: usize,
    pub ks_distance: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltCheck {
    pub rows: Vec<CltRow>,
    pub replicas: usize,
    pub limit_replicas: usize,
}

/// Norms of `replicas` draws of the Gaussian field with covariance `r`.
pub fn gaussian_limit_norms(r: &DMatrix<f64>, space: &RiSpace, replicas: usize, seed: u64, exec: Execution) -> Result<Vec<f64>> {
    let limit = ProcessModel::gaussian(r.clone())?;
    map_indices(exec, replicas, |j| space.norm(&limit.sample(seed, j as u64))).into_iter().collect()
}

/// KS distance between the laws of `||S_n||_L` and `||S_∞||_L` for each `n`.
pub fn clt_empirical_check(
    model: &ProcessModel,
    space: &RiSpace,
    n_list: &[usize],
    replicas: usize,
    seed: u64,
    exec: Execution,
) -> Result<CltCheck> {
    if !model.is_mean_zero() {
        return Err(Error::NotMeanZero);
    }
    let r = model.covariance().ok_or(Error::MissingCovariance)?;
    let limit = gaussian_limit_norms(r, space, replicas, derive_seed(seed, LIMIT_TAG), exec)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let stream = derive_seed(seed, n as u64);
        let norms = map_indices(exec, replicas, |j| -> Result<f64> {
            let s = model.sample_sn(n, stream, j as u64)?;
            space.norm(&s.values)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let ks = ks_two_sample(&norms, &limit);
        rows.push(CltRow { n, ks_distance: ks.distance, p_value: ks.p_value });
    }
    Ok(CltCheck { rows, replicas, limit_replicas: replicas })
}

/// `l_ξ(g) = Σ_i μ_i ξ(t_i) g(t_i)`.
pub fn functional_apply(path: &[f64], g: &[f64], weights: &[f64]) -> Result<f64> {
    if path.len() != g.len() {
        return Err(Error::DimensionMismatch { expected: path.len(), got: g.len() });
    }
    if weights.len() != path.len() {
        return Err(Error::DimensionMismatch { expected: path.len(), got: weights.len() });
    }
    Ok(path.iter().zip(g).zip(weights).map(|((x, y), w)| x * y * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{gaussian_abs_moment_root, linear_grid};
    use crate::ri::RiKind;
    use approx::assert_relative_eq;

    fn grid(m: usize) -> Vec<f64> {
        linear_grid(0.0, 1.0, m)
    }

    fn brownian(m: usize) -> ProcessModel {
        let coords: Vec<f64> = grid(m + 1)[1..].to_vec();
        ProcessModel::gaussian_kernel(&coords, Kernel::Brownian, 1.0).unwrap()
    }

    #[test]
    fn reproducible_samples() {
        let m = brownian(16);
        assert_eq!(m.sample(3, 5), m.sample(3, 5));
        assert_ne!(m.sample(3, 5), m.sample(3, 6));
        let s1 = m.sample_sn(1, 3, 5).unwrap();
        assert_eq!(s1.values, m.sample(3, 5));
    }

    #[test]
    fn rejects_non_psd_covariance() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(ProcessModel::gaussian(r), Err(Error::NotPsd { .. })));
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(ProcessModel::gaussian(r).is_err());
    }

    #[test]
    fn empirical_covariance_converges() {
        let m = brownian(16);
        let r = m.covariance().unwrap().clone();
        let n = 10_000;
        let paths = sample_paths(&m, 1, n, 11, Execution::Parallel);
        let mut c = DMatrix::<f64>::zeros(16, 16);
        for p in &paths {
            let v = DVector::from_column_slice(p);
            c += &v * v.transpose();
        }
        c /= n as f64;
        assert!((c - &r).norm() / r.norm() < 0.1);
    }

    #[test]
    fn gaussian_natural_distance_is_scaled_sd() {
        let m = brownian(8);
        let psi = PsiFunction::power(2.0).unwrap();
        let unit = gls_norm(&MomentCurve::gaussian(1.0), &psi, &ExponentGrid::default()).unwrap();
        // the unit-normal ψ_2 norm is attained as p → 1, where |Z|_1 = sqrt(2/π)
        assert_relative_eq!(unit, gaussian_abs_moment_root(1.0 + 1e-9), max_relative = 1e-6);
        let r = m.covariance().unwrap();
        let (t, s) = (2, 6);
        let sd = (r[(t, t)] - 2.0 * r[(t, s)] + r[(s, s)]).sqrt();
        let d = natural_distance(&m, &psi, t, s, MomentSource::Oracle).unwrap();
        assert_relative_eq!(d, unit * sd, max_relative = 1e-9);
        assert_eq!(natural_distance(&m, &psi, 3, 3, MomentSource::Oracle).unwrap(), 0.0);
        let mc = natural_distance(&m, &psi, t, s, MomentSource::MonteCarlo { replicas: 20_000, seed: 1 }).unwrap();
        assert!((mc - d).abs() < 0.05 * d, "{mc} vs {d}");
    }

    #[test]
    fn normalized_field_distances_bounded_by_two() {
        let psi = PsiFunction::power(2.0).unwrap();
        let m = brownian(8);
        let m = m.scaled(1.0 / sup_pointwise_norm(&m, &psi).unwrap());
        assert_relative_eq!(sup_pointwise_norm(&m, &psi).unwrap(), 1.0, max_relative = 1e-12);
        let d = natural_distance_matrix(&m, &psi, MomentSource::Oracle, Execution::Parallel).unwrap();
        assert!(d.iter().flatten().all(|&v| v <= 2.0));
    }

    #[test]
    fn lacunary_requires_geometric_frequencies() {
        let c = grid(8);
        assert!(ProcessModel::lacunary(&c, &[1.0, 1.0], &[2.0, 3.0], 2.0).is_err());
        assert!(ProcessModel::lacunary_dyadic(&c, &[1.0, 0.5, 0.25]).is_ok());
    }

    #[test]
    fn deterministic_mixed_norm_is_constant() {
        let m = ProcessModel::deterministic(vec![1.5; 4]);
        let space = RiSpace::new(RiKind::Lp(2.0), vec![0.25; 4]).unwrap();
        let psi = PsiFunction::power(2.0).unwrap();
        let est = empirical_mixed_norm(&m, &space, &psi, 200, 0, Execution::Sequential).unwrap();
        assert_relative_eq!(est.value, 1.5, max_relative = 1e-6);
        assert!(matches!(m.sample_sn(2, 0, 0), Err(Error::NotMeanZero)));
        assert!(matches!(
            empirical_mixed_norm(&m, &space, &psi, 99, 0, Execution::Sequential),
            Err(Error::TooFewReplicas { .. })
        ));
    }

    #[test]
    fn mixed_norm_is_reproducible_across_seeds() {
        let m = brownian(64);
        let space = RiSpace::new(RiKind::Lp(2.0), vec![1.0 / 64.0; 64]).unwrap();
        let psi = PsiFunction::power(2.0).unwrap();
        let a = empirical_mixed_norm(&m, &space, &psi, 4000, 1, Execution::Parallel).unwrap();
        let b = empirical_mixed_norm(&m, &space, &psi, 4000, 2, Execution::Parallel).unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() <= 3.0 * se, "{} {} {}", a.value, b.value, se);
        let again = empirical_mixed_norm(&m, &space, &psi, 4000, 1, Execution::Sequential).unwrap();
        assert_eq!(a.value.to_bits(), again.value.to_bits());
    }

    #[test]
    fn gaussian_sums_keep_their_law() {
        let m = brownian(16);
        let space = RiSpace::new(RiKind::Lp(2.0), vec![1.0 / 16.0; 16]).unwrap();
        let check = clt_empirical_check(&m, &space, &[1, 16], 2000, 5, Execution::Parallel).unwrap();
        for row in &check.rows {
            assert!(row.p_value > 0.001, "{row:?}");
        }
        // variance of S_n(t) tracks R(t, t)
        let r = m.covariance().unwrap();
        let vals: Vec<f64> = (0..4000).map(|j| m.sample_sn(8, 9, j).unwrap().values[15]).collect();
        let var = vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64;
        assert!((var - r[(15, 15)]).abs() < 0.1 * r[(15, 15)]);
    }

    #[test]
    fn rho_for_gaussian_is_stable_in_n() {
        let m = brownian(8);
        let psi_r = crate::psi::rosenthal_transform(&PsiFunction::power(2.0).unwrap(), false).unwrap();
        let est = rho_distance(&m, &psi_r, 1, 6, MomentSource::MonteCarlo { replicas: 20_000, seed: 4 }, &[1, 4, 16]).unwrap();
        assert!(est.lower_estimate);
        let vals: Vec<f64> = est.per_n.iter().map(|x| x.1).collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi / lo < 1.05, "{vals:?}");
        let oracle = rho_distance(&m, &psi_r, 1, 6, MomentSource::Oracle, &[]).unwrap();
        assert!(!oracle.lower_estimate);
        assert!(oracle.value >= 0.95 * hi);
    }

    #[test]
    fn functional_examples() {
        assert_eq!(functional_apply(&[1.0, 2.0], &[0.0, 0.0], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(functional_apply(&[1.0; 4], &[1.0; 4], &[0.25; 4]).unwrap(), 1.0);
        assert!(functional_apply(&[1.0; 3], &[1.0; 4], &[0.25; 4]).is_err());
    }
}
