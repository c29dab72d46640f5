//! ψ-functions and Grand Lebesgue Space norms.
//!
//! A [`PsiFunction`] is a positive function on an open exponent interval
//! `(a, b)` with `1 <= a < b <= ∞`. The norm of `f` in `G(ψ)` is
//! `sup_p |f|_p / ψ(p)`; [`gls_norm`] evaluates it on a logarithmic
//! exponent grid with a golden-section refinement around the grid argmax.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gaussian_abs_moment_root, golden_max, log_grid};

/// Rosenthal constant for centered i.i.d. summands.
pub const ROSENTHAL_CONSTANT: f64 = 1.77638;
/// Rosenthal constant for symmetric summands.
pub const ROSENTHAL_CONSTANT_SYMMETRIC: f64 = 1.53573;

/// Relative inset applied to finite endpoints of an open support.
const OPEN_INSET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiKind {
    Analytic,
    Tabulated,
}

#[derive(Clone, Debug)]
enum Shape {
    Constant,
    Power { m: f64 },
    /// log-log table; evaluation clamps below the first node and either
    /// extrapolates the last segment or clamps above the last node.
    Tabulated {
        table: Vec<[f64; 2]>,
        log_p: Vec<f64>,
        log_psi: Vec<f64>,
        extrapolate: bool,
    },
    Rosenthal { base: Box<PsiFunction>, constant: f64 },
}

#[derive(Clone, Debug)]
pub struct PsiFunction {
    lo: f64,
    hi: f64,
    shape: Shape,
    scale: f64,
}

impl PsiFunction {
    /// ψ ≡ 1 on `(lo, hi)`.
    pub fn constant(lo: f64, hi: f64) -> Result<Self> {
        check_support(lo, hi)?;
        Ok(Self { lo, hi, shape: Shape::Constant, scale: 1.0 })
    }

    /// `ψ_m(p) = p^{1/m}` on `(1, ∞)`.
    pub fn power(m: f64) -> Result<Self> {
        Self::power_on(m, 1.0, f64::INFINITY)
    }

    pub fn power_on(m: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter { name: "m", value: m, reason: "must be positive and finite" });
        }
        check_support(lo, hi)?;
        Ok(Self { lo, hi, shape: Shape::Power { m }, scale: 1.0 })
    }

    /// Tabulated ψ from `(p, ψ(p))` pairs, rescaled so that its infimum is at least 1.
    ///
    /// With `hi = ∞` the last table segment is extrapolated in log-log
    /// coordinates.
    pub fn tabulated(table: &[(f64, f64)], lo: f64, hi: f64) -> Result<Self> {
        let mut psi = Self::tabulated_raw(table, lo, hi)?;
        let inf = psi.table_infimum();
        if inf < 1.0 {
            psi.scale = 1.0 / inf;
        }
        Ok(psi)
    }

    /// Tabulated ψ without normalization (used for natural functions,
    /// whose defining property is the unit norm of the family).
    pub fn tabulated_raw(table: &[(f64, f64)], lo: f64, hi: f64) -> Result<Self> {
        check_support(lo, hi)?;
        if table.len() < 2 {
            return Err(Error::GridTooSmall { needed: 2, got: table.len() });
        }
        let mut log_p = Vec::with_capacity(table.len());
        let mut log_psi = Vec::with_capacity(table.len());
        for (i, &(p, v)) in table.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) || !p.is_finite() {
                return Err(Error::NonFinite { at: p, value: v });
            }
            if i > 0 && p <= table[i - 1].0 {
                return Err(Error::NotIncreasing { index: i });
            }
            log_p.push(p.ln());
            log_psi.push(v.ln());
        }
        Ok(Self {
            lo,
            hi,
            shape: Shape::Tabulated {
                table: table.iter().map(|&(p, v)| [p, v]).collect(),
                log_p,
                log_psi,
                extrapolate: hi.is_infinite(),
            },
            scale: 1.0,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn has_infinite_support(&self) -> bool {
        self.hi.is_infinite()
    }

    /// Factor applied at construction to enforce `inf ψ >= 1`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn kind(&self) -> PsiKind {
        match &self.shape {
            Shape::Tabulated { .. } => PsiKind::Tabulated,
            Shape::Rosenthal { base, .. } => base.kind(),
            _ => PsiKind::Analytic,
        }
    }

    /// The untransformed ψ when this is a Rosenthal transform.
    pub fn rosenthal_base(&self) -> Option<&PsiFunction> {
        match &self.shape {
            Shape::Rosenthal { base, .. } => Some(base),
            _ => None,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        p > self.lo && p < self.hi
    }

    pub fn eval(&self, p: f64) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::OutsideSupport { p, lo: self.lo, hi: self.hi });
        }
        Ok(self.eval_unchecked(p))
    }

    fn eval_unchecked(&self, p: f64) -> f64 {
        let raw = match &self.shape {
            Shape::Constant => 1.0,
            Shape::Power { m } => p.powf(1.0 / m),
            Shape::Tabulated { log_p, log_psi, extrapolate, .. } => {
                interpolate_log_log(log_p, log_psi, *extrapolate, p.ln()).exp()
            }
            Shape::Rosenthal { base, constant } => constant * p / p.ln() * base.eval_unchecked(p),
        };
        self.scale * raw
    }

    /// `lim_{p→∞} ln ψ(p)` for unbounded supports; `+∞` when ψ grows.
    pub fn ln_limit_at_infinity(&self) -> f64 {
        if !self.has_infinite_support() {
            return f64::NAN;
        }
        match &self.shape {
            Shape::Constant => self.scale.ln(),
            Shape::Tabulated { log_p, log_psi, .. } => {
                let n = log_p.len();
                let slope = log_psi[n - 1] - log_psi[n - 2];
                if slope > 0.0 {
                    f64::INFINITY
                } else if slope < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    self.scale.ln() + log_psi[n - 1]
                }
            }
            Shape::Power { .. } | Shape::Rosenthal { .. } => f64::INFINITY,
        }
    }

    /// `ln ψ(p)`, evaluated without leaving log space for tables.
    pub fn ln_eval(&self, p: f64) -> Result<f64> {
        self.eval(p).map(f64::ln)
    }

    fn table_infimum(&self) -> f64 {
        match &self.shape {
            Shape::Tabulated { log_psi, .. } => log_psi.iter().cloned().fold(f64::INFINITY, f64::min).exp(),
            _ => 1.0,
        }
    }

    /// Logarithmic exponent nodes strictly inside the support, capped at
    /// `p_cap` when the support is unbounded.
    pub fn exponent_nodes(&self, n: usize, p_cap: f64) -> Vec<f64> {
        let (lo, hi) = open_bounds(self.lo, self.hi, p_cap);
        log_grid(lo, hi, n)
    }

    pub fn to_record(&self) -> PsiRecord {
        let support = SupportRecord::new(self.lo, self.hi);
        match &self.shape {
            Shape::Constant => PsiRecord::Constant { support },
            Shape::Power { m } => PsiRecord::Power { m: *m, support: Some(support) },
            Shape::Tabulated { table, .. } => PsiRecord::Tabulated {
                support,
                table: table.clone(),
                scale: Some(self.scale),
            },
            Shape::Rosenthal { base, constant } => PsiRecord::Rosenthal {
                symmetric: *constant == ROSENTHAL_CONSTANT_SYMMETRIC,
                base: Box::new(base.to_record()),
            },
        }
    }

    pub fn from_record(record: &PsiRecord) -> Result<Self> {
        match record {
            PsiRecord::Constant { support } => Self::constant(support.lo, support.hi()),
            PsiRecord::Power { m, support } => match support {
                Some(s) => Self::power_on(*m, s.lo, s.hi()),
                None => Self::power(*m),
            },
            PsiRecord::Tabulated { support, table, scale } => {
                let pairs: Vec<(f64, f64)> = table.iter().map(|[p, v]| (*p, *v)).collect();
                match scale {
                    Some(scale) => {
                        let mut psi = Self::tabulated_raw(&pairs, support.lo, support.hi())?;
                        psi.scale = *scale;
                        Ok(psi)
                    }
                    None => Self::tabulated(&pairs, support.lo, support.hi()),
                }
            }
            PsiRecord::Rosenthal { symmetric, base } => rosenthal_transform(&Self::from_record(base)?, *symmetric),
        }
    }
}

impl fmt::Display for PsiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Constant => write!(f, "constant on ({}, {})", self.lo, self.hi),
            Shape::Power { m } => write!(f, "p^(1/{m}) on ({}, {})", self.lo, self.hi),
            Shape::Tabulated { log_p, .. } => {
                write!(f, "tabulated ({} nodes) on ({}, {})", log_p.len(), self.lo, self.hi)
            }
            Shape::Rosenthal { base, constant } => write!(f, "{constant} p/ln p * [{base}]"),
        }
    }
}

fn check_support(lo: f64, hi: f64) -> Result<()> {
    if lo >= 1.0 && hi > lo && lo.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSupport { lo, hi })
    }
}

/// Closed evaluation bounds inside the open interval `(lo, hi)`.
fn open_bounds(lo: f64, hi: f64, p_cap: f64) -> (f64, f64) {
    let lo_in = lo * (1.0 + OPEN_INSET);
    let hi_in = if hi.is_finite() { hi * (1.0 - OPEN_INSET) } else { p_cap.max(2.0 * lo_in) };
    (lo_in, hi_in)
}

fn interpolate_log_log(xs: &[f64], ys: &[f64], extrapolate: bool, x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        if !extrapolate {
            return ys[n - 1];
        }
        let slope = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
        return ys[n - 1] + slope * (x - xs[n - 1]);
    }
    let i = xs.partition_point(|&v| v <= x).min(n - 1);
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportRecord {
    pub lo: f64,
    /// `None` encodes an unbounded support.
    pub hi: Option<f64>,
}

impl SupportRecord {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi: hi.is_finite().then_some(hi) }
    }

    pub fn hi(&self) -> f64 {
        self.hi.unwrap_or(f64::INFINITY)
    }
}

/// Structured text form of a ψ-function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PsiRecord {
    Constant {
        support: SupportRecord,
    },
    Power {
        m: f64,
        #[serde(default)]
        support: Option<SupportRecord>,
    },
    Tabulated {
        support: SupportRecord,
        table: Vec<[f64; 2]>,
        /// Absent: normalize on load. Present: use verbatim.
        #[serde(default)]
        scale: Option<f64>,
    },
    Rosenthal {
        #[serde(default)]
        symmetric: bool,
        base: Box<PsiRecord>,
    },
}

/// `p ↦ |f|_p` over a validity interval.
#[derive(Clone)]
pub struct MomentCurve {
    lo: f64,
    hi: f64,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for MomentCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentCurve").field("lo", &self.lo).field("hi", &self.hi).finish()
    }
}

impl MomentCurve {
    pub fn new(lo: f64, hi: f64, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { lo, hi, eval: Arc::new(eval) }
    }

    /// `|f|_p ≡ c`.
    pub fn constant(c: f64) -> Self {
        let c = c.abs();
        Self::new(1.0, f64::INFINITY, move |_| c)
    }

    /// Absolute moment roots of `N(0, sigma²)`.
    pub fn gaussian(sigma: f64) -> Self {
        let sigma = sigma.abs();
        Self::new(1.0, f64::INFINITY, move |p| sigma * gaussian_abs_moment_root(p))
    }

    /// `|f|_{p,μ}` for a function given by point values and weights.
    pub fn from_weighted(values: &[f64], weights: &[f64]) -> Self {
        let mut pairs: Vec<(f64, f64)> = values
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(v, w)| (v.abs(), *w))
            .collect();
        // a fixed summation order makes the curve invariant under rearrangement
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let top = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
        Self::new(1.0, f64::INFINITY, move |p| {
            if top == 0.0 || !top.is_finite() {
                return top;
            }
            let s: f64 = pairs.iter().map(|(v, w)| w * (v / top).powf(p)).sum();
            top * s.powf(1.0 / p)
        })
    }

    /// Empirical moment curve of equally weighted samples, valid up to `p_cap`.
    pub fn from_samples(samples: &[f64], p_cap: f64) -> Self {
        let n = samples.len().max(1) as f64;
        let weights = vec![1.0 / n; samples.len()];
        let inner = Self::from_weighted(samples, &weights);
        Self { lo: 1.0, hi: p_cap, eval: inner.eval }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        let c = c.abs();
        Self::new(self.lo, self.hi, move |p| c * inner(p))
    }

    pub fn valid_range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn eval(&self, p: f64) -> f64 {
        (self.eval)(p)
    }

    /// Lyapunov monotonicity on the given nodes, within `tol` relative.
    pub fn is_nondecreasing_on(&self, nodes: &[f64], tol: f64) -> bool {
        nodes
            .windows(2)
            .all(|w| self.eval(w[1]) >= self.eval(w[0]) * (1.0 - tol))
    }
}

/// Exponent grid used for suprema over `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentGrid {
    pub nodes: usize,
    /// Upper cap applied when the support is unbounded.
    pub p_cap: f64,
}

impl Default for ExponentGrid {
    fn default() -> Self {
        Self { nodes: 128, p_cap: 400.0 }
    }
}

impl ExponentGrid {
    pub fn with_cap(p_cap: f64) -> Self {
        Self { p_cap, ..Self::default() }
    }
}

/// Result of a Grand Lebesgue norm evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlsNorm {
    /// Norm value; `f64::INFINITY` when declared divergent.
    pub value: f64,
    pub argmax_p: f64,
    /// The ratio was still increasing over the last quarter of the grid.
    pub increasing_at_cap: bool,
}

fn common_domain(curve: &MomentCurve, psi: &PsiFunction) -> Result<(f64, f64)> {
    let (ca, cb) = curve.valid_range();
    let (pa, pb) = psi.support();
    let lo = ca.max(pa);
    let hi = cb.min(pb);
    if lo >= hi {
        return Err(Error::EmptyDomain);
    }
    Ok((lo, hi))
}

/// `sup_p |f|_p / ψ(p)` over the common domain of `curve` and `psi`.
pub fn gls_norm(curve: &MomentCurve, psi: &PsiFunction, grid: &ExponentGrid) -> Result<f64> {
    gls_norm_detailed(curve, psi, grid).map(|n| n.value)
}

pub fn gls_norm_detailed(curve: &MomentCurve, psi: &PsiFunction, grid: &ExponentGrid) -> Result<GlsNorm> {
    if grid.nodes < 32 {
        return Err(Error::GridTooSmall { needed: 32, got: grid.nodes });
    }
    let (lo, hi) = common_domain(curve, psi)?;
    let (a, b) = open_bounds(lo, hi, grid.p_cap);
    let nodes = log_grid(a, b, grid.nodes);
    let ratio = |p: f64| curve.eval(p) / psi.eval_unchecked(p);
    let mut ratios = Vec::with_capacity(nodes.len());
    for &p in &nodes {
        let v = curve.eval(p);
        if !v.is_finite() {
            return Err(Error::NonFinite { at: p, value: v });
        }
        ratios.push(v / psi.eval_unchecked(p));
    }

    let n = ratios.len();
    let tail_start = n - n / 4;
    let increasing = ratios[tail_start - 1..].windows(2).all(|w| w[1] > w[0]);
    if hi.is_infinite() && increasing {
        let mut sorted = ratios.clone();
        sorted.sort_by(|x, y| x.total_cmp(y));
        let median = sorted[n / 2];
        if ratios[n - 1] > 10.0 * median {
            return Ok(GlsNorm { value: f64::INFINITY, argmax_p: b, increasing_at_cap: true });
        }
    }

    let (mut best_i, mut best) = (0, ratios[0]);
    for (i, &r) in ratios.iter().enumerate() {
        if r > best {
            best = r;
            best_i = i;
        }
    }
    let mut argmax = nodes[best_i];
    if best > 0.0 {
        let left = nodes[best_i.saturating_sub(1)];
        let right = nodes[(best_i + 1).min(n - 1)];
        let (x, v) = golden_max(ratio, left, right, 1e-12, 200);
        if v > best {
            best = v;
            argmax = x;
        }
    }
    Ok(GlsNorm { value: best, argmax_p: argmax, increasing_at_cap: hi.is_infinite() && increasing })
}

/// Natural function `ψ_F(p) = sup_α |f_α|_p` of a family, tabulated on the
/// grid of the common validity interval.
pub fn natural_function(family: &[MomentCurve], grid: &ExponentGrid) -> Result<PsiFunction> {
    let first = family.first().ok_or(Error::EmptyDomain)?;
    let (mut lo, mut hi) = first.valid_range();
    for c in &family[1..] {
        let (a, b) = c.valid_range();
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if lo >= hi {
        return Err(Error::EmptyDomain);
    }
    let (a, b) = open_bounds(lo, hi, grid.p_cap);
    let nodes = log_grid(a, b, grid.nodes.max(2));
    let mut table = Vec::with_capacity(nodes.len());
    for &p in &nodes {
        let mut sup = 0.0_f64;
        for c in family {
            let v = c.eval(p);
            if !v.is_finite() {
                return Err(Error::UnboundedSupremum { p });
            }
            sup = sup.max(v);
        }
        if sup <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "natural function",
                value: sup,
                reason: "family vanishes identically",
            });
        }
        table.push((p, sup));
    }
    PsiFunction::tabulated_raw(&table, lo, hi)
}

/// `ψ_R(p) = C_R p / ln p · ψ(p)` on `(max(2, a), b)`.
pub fn rosenthal_transform(psi: &PsiFunction, symmetric: bool) -> Result<PsiFunction> {
    let (lo, hi) = psi.support();
    if hi <= 2.0 {
        return Err(Error::InvalidParameter {
            name: "support upper end",
            value: hi,
            reason: "Rosenthal transform needs exponents above 2",
        });
    }
    let constant = if symmetric { ROSENTHAL_CONSTANT_SYMMETRIC } else { ROSENTHAL_CONSTANT };
    Ok(PsiFunction {
        lo: lo.max(2.0),
        hi,
        shape: Shape::Rosenthal { base: Box::new(psi.clone()), constant },
        scale: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::gamma::ln_gamma;

    fn gaussian_moment_oracle(p: f64) -> f64 {
        // E|Z|^p = 2^{p/2} Γ((p+1)/2) / √π
        ((0.5 * p * 2f64.ln() + ln_gamma(0.5 * (p + 1.0)) - 0.5 * std::f64::consts::PI.ln()) / p).exp()
    }

    #[test]
    fn evaluation_outside_support_is_an_error() {
        let psi = PsiFunction::power(2.0).unwrap();
        assert!(psi.eval(1.0).is_err());
        assert!(psi.eval(0.5).is_err());
        assert_relative_eq!(psi.eval(4.0).unwrap(), 2.0);
        assert!(PsiFunction::constant(0.5, 3.0).is_err());
        assert!(PsiFunction::constant(3.0, 3.0).is_err());
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let psi = PsiFunction::power(2.0).unwrap();
        let zero = MomentCurve::constant(0.0);
        assert_eq!(gls_norm(&zero, &psi, &ExponentGrid::default()).unwrap(), 0.0);
    }

    #[test]
    fn constant_moments_attain_c_at_argmin_psi() {
        let psi = PsiFunction::power(3.0).unwrap();
        let v = gls_norm(&MomentCurve::constant(2.5), &psi, &ExponentGrid::default()).unwrap();
        assert_relative_eq!(v, 2.5, max_relative = 1e-8);
    }

    #[test]
    fn gaussian_psi2_norm_matches_dense_grid() {
        // dense brute force over p in (1, 400)
        let dense = log_grid(1.0 + 1e-9, 400.0, 200_000);
        let oracle = dense
            .iter()
            .map(|&p| gaussian_moment_oracle(p) / p.sqrt())
            .fold(0.0, f64::max);
        let psi = PsiFunction::power(2.0).unwrap();
        let v = gls_norm(&MomentCurve::gaussian(1.0), &psi, &ExponentGrid::default()).unwrap();
        assert_relative_eq!(v, oracle, max_relative = 1e-7);
        assert_relative_eq!(v, (2.0 / std::f64::consts::PI).sqrt(), max_relative = 1e-7);
    }

    #[test]
    fn divergence_is_detected_for_fast_growth() {
        // |f|_p = p growing against ψ ≡ 1 on (1, ∞)
        let curve = MomentCurve::new(1.0, f64::INFINITY, |p| p);
        let psi = PsiFunction::constant(1.0, f64::INFINITY).unwrap();
        let n = gls_norm_detailed(&curve, &psi, &ExponentGrid::default()).unwrap();
        assert!(n.value.is_infinite());
        // slow growth stays finite but carries the diagnostic
        let n = gls_norm_detailed(&MomentCurve::gaussian(1.0), &psi, &ExponentGrid::default()).unwrap();
        assert!(n.value.is_finite() && n.increasing_at_cap);
    }

    #[test]
    fn domain_errors() {
        let curve = MomentCurve::new(1.0, 2.0, |_| 1.0);
        let psi = PsiFunction::constant(3.0, 5.0).unwrap();
        assert_eq!(gls_norm(&curve, &psi, &ExponentGrid::default()), Err(Error::EmptyDomain));
        let bad = MomentCurve::new(1.0, 10.0, |p| if p > 5.0 { f64::NAN } else { 1.0 });
        let psi = PsiFunction::constant(1.0, 10.0).unwrap();
        assert!(matches!(gls_norm(&bad, &psi, &ExponentGrid::default()), Err(Error::NonFinite { .. })));
        let coarse = ExponentGrid { nodes: 16, p_cap: 400.0 };
        assert!(gls_norm(&curve, &psi, &coarse).is_err());
    }

    #[test]
    fn natural_function_examples() {
        let grid = ExponentGrid::default();
        let rademacher = natural_function(&[MomentCurve::constant(1.0)], &grid).unwrap();
        for p in [1.5, 3.0, 50.0, 1000.0] {
            assert_relative_eq!(rademacher.eval(p).unwrap(), 1.0, max_relative = 1e-12);
        }

        // bounded by C: every moment root is at most C
        let bounded = MomentCurve::from_weighted(&[0.5, -3.0, 2.0], &[0.2, 0.3, 0.5]);
        let psi = natural_function(&[bounded], &grid).unwrap();
        for p in psi.exponent_nodes(50, 400.0) {
            assert!(psi.eval(p).unwrap() <= 3.0 + 1e-12);
        }

        let psi = natural_function(&[MomentCurve::gaussian(1.0)], &grid).unwrap();
        for p in [1.2, 2.0, 7.3, 100.0, 390.0] {
            assert_relative_eq!(psi.eval(p).unwrap(), gaussian_moment_oracle(p), max_relative = 1e-4);
        }
    }

    #[test]
    fn natural_function_gives_unit_family_norm() {
        let grid = ExponentGrid::default();
        let family = vec![
            MomentCurve::gaussian(1.0),
            MomentCurve::constant(1.2),
            MomentCurve::from_weighted(&[4.0, 0.1], &[0.05, 0.95]),
        ];
        let psi = natural_function(&family, &grid).unwrap();
        let norms: Vec<f64> = family.iter().map(|c| gls_norm(c, &psi, &grid).unwrap()).collect();
        for n in &norms {
            assert!(*n <= 1.0 + 1e-3, "{n}");
        }
        assert_relative_eq!(norms.iter().cloned().fold(0.0, f64::max), 1.0, max_relative = 1e-3);
    }

    #[test]
    fn natural_function_rejects_unbounded_sup() {
        let blowup = MomentCurve::new(1.0, f64::INFINITY, |p| if p > 10.0 { f64::INFINITY } else { 1.0 });
        assert!(matches!(
            natural_function(&[blowup], &ExponentGrid::default()),
            Err(Error::UnboundedSupremum { .. })
        ));
    }

    #[test]
    fn rosenthal_examples() {
        let e = std::f64::consts::E;
        let one = PsiFunction::constant(1.0, f64::INFINITY).unwrap();
        let r = rosenthal_transform(&one, false).unwrap();
        assert_relative_eq!(r.eval(e).unwrap(), 1.77638 * e, max_relative = 1e-14);
        assert_relative_eq!(r.eval(e).unwrap(), 4.82867, max_relative = 1e-5);
        let rs = rosenthal_transform(&one, true).unwrap();
        assert_relative_eq!(rs.eval(e).unwrap(), 1.53573 * e, max_relative = 1e-14);
        let r2 = rosenthal_transform(&PsiFunction::power(2.0).unwrap(), false).unwrap();
        assert_relative_eq!(r2.eval(4.0).unwrap(), 1.77638 * 4.0 / 4f64.ln() * 2.0, max_relative = 1e-14);
        assert_eq!(r2.support().0, 2.0);
        assert!(r2.eval(2.0).is_err());
        let short = PsiFunction::constant(1.0, 2.0).unwrap();
        assert!(rosenthal_transform(&short, false).is_err());
    }

    #[test]
    fn tabulated_normalization_records_scale() {
        let psi = PsiFunction::tabulated(&[(1.5, 0.5), (3.0, 1.0), (10.0, 2.0)], 1.5, 10.0).unwrap();
        assert_relative_eq!(psi.scale(), 2.0);
        // log-log interpolation between (1.5, 0.5) and (3, 1) is 0.5 p / 1.5
        assert_relative_eq!(psi.eval(1.6).unwrap(), 2.0 * 0.5 * 1.6 / 1.5, max_relative = 1e-12);
        for p in psi.exponent_nodes(40, 400.0) {
            assert!(psi.eval(p).unwrap() >= 1.0 - 1e-12);
        }
        assert!(PsiFunction::tabulated(&[(2.0, 1.0), (1.0, 1.0)], 1.0, 3.0).is_err());
    }

    #[test]
    fn records_round_trip() {
        let table = [(1.1, 1.0), (2.0, 1.3), (8.0, 2.9)];
        let psis = [
            PsiFunction::power(2.0).unwrap(),
            PsiFunction::constant(1.0, 6.0).unwrap(),
            PsiFunction::tabulated(&table, 1.1, f64::INFINITY).unwrap(),
            rosenthal_transform(&PsiFunction::power(1.0).unwrap(), true).unwrap(),
        ];
        for psi in &psis {
            let record = psi.to_record();
            let back = PsiFunction::from_record(&record).unwrap();
            assert_eq!(back.to_record(), record);
            for p in [2.5, 5.0] {
                assert_relative_eq!(back.eval(p).unwrap(), psi.eval(p).unwrap(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_curve_is_lyapunov_monotone() {
        let nodes = log_grid(1.0, 400.0, 64);
        assert!(MomentCurve::gaussian(2.0).is_nondecreasing_on(&nodes, 0.0));
        let f = MomentCurve::from_weighted(&[0.1, -2.0, 0.7, 5.0], &[0.4, 0.3, 0.2, 0.1]);
        assert!(f.is_nondecreasing_on(&nodes, 1e-12));
    }
}
