//! Entropy-series and entropy-integral certificates for path regularity and
//! the central limit theorem in an r.i. space.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::convex::TailBoundCurve;
use crate::entropy::MetricMeasureSpace;
use crate::error::{Error, Result};
use crate::exec::{map_indices, map_slice, Execution};
use crate::numeric::{gauss_legendre, golden_max, golden_min, hurwitz_zeta, zeta};
use crate::psi::{rosenthal_transform, PsiFunction, PsiRecord};
use crate::ri::DualGeometry;

/// Spaces above this size tabulate covering numbers with farthest-first only.
const FULL_GREEDY_LIMIT: usize = 48;

/// Step tables of `N(ε)` and `r(δ)` for a finite space.
#[derive(Debug, Clone)]
pub struct EmpiricalEntropy {
    n_levels: Vec<f64>,
    n_counts: Vec<f64>,
    r_levels: Vec<f64>,
    r_values: Vec<f64>,
    points: usize,
}

impl EmpiricalEntropy {
    /// `n_space` carries the distance for covering numbers, `r_space` the one
    /// for the ball function (same points and weights).
    pub fn new(n_space: &MetricMeasureSpace, r_space: &MetricMeasureSpace, exec: Execution) -> Result<Self> {
        if n_space.len() != r_space.len() {
            return Err(Error::DimensionMismatch { expected: n_space.len(), got: r_space.len() });
        }
        let n_levels = n_space.distinct_distances();
        let mut n_counts = vec![n_space.len() as f64];
        if n_space.len() <= FULL_GREEDY_LIMIT {
            n_counts.extend(map_slice(exec, &n_levels, |&eps| n_space.greedy_cover(eps).len() as f64));
        } else {
            let radii = n_space.farthest_first_radii();
            n_counts.extend(n_levels.iter().map(|&eps| (1 + radii.partition_point(|&g| g > eps)) as f64));
        }
        let r_levels = r_space.distinct_distances();
        let top_weight = r_space.weights().iter().cloned().fold(0.0, f64::max);
        let mut r_values = vec![top_weight];
        r_values.extend(r_space.ball_function_table(&r_levels));
        Ok(Self { n_levels, n_counts, r_levels, r_values, points: n_space.len() })
    }

    pub fn covering(&self, eps: f64) -> f64 {
        self.n_counts[self.n_levels.partition_point(|&d| d <= eps)]
    }

    pub fn ball(&self, delta: f64) -> f64 {
        self.r_values[self.r_levels.partition_point(|&d| d <= delta)]
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn diameter(&self) -> f64 {
        self.n_levels.last().copied().unwrap_or(0.0)
    }

    /// Smallest nonzero distance of either table.
    pub fn resolution(&self) -> f64 {
        let a = self.n_levels.first().copied().unwrap_or(f64::INFINITY);
        let b = self.r_levels.first().copied().unwrap_or(f64::INFINITY);
        a.min(b)
    }

    /// `σ(q)` summed exactly over runs of `n` on which both step functions are constant.
    fn sigma(&self, q: f64) -> f64 {
        let l = q.ln();
        let mut breaks: Vec<f64> = vec![0.0];
        let mut push = |x: f64| {
            if x.is_finite() {
                let f = x.floor();
                for j in 0..3 {
                    let b = f + j as f64;
                    if b > 0.0 {
                        breaks.push(b);
                    }
                }
            }
        };
        for &d in &self.n_levels {
            push(d.ln() / l - 1.0);
        }
        for &d in &self.r_levels {
            push(d.ln() / l);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let geometric = |len: f64| -(len * l).exp_m1() / -l.exp_m1();
        let mut total = 0.0;
        for (i, &a) in breaks.iter().enumerate() {
            let term = (a * l).exp() * self.covering_at_exp((a + 1.0) * l) * self.ball_at_exp(a * l);
            let span = match breaks.get(i + 1) {
                Some(&b) => geometric(b - a),
                None => 1.0 / -l.exp_m1(),
            };
            total += term * span;
        }
        total
    }

    fn covering_at_exp(&self, log_eps: f64) -> f64 {
        self.covering(log_eps.exp())
    }

    fn ball_at_exp(&self, log_delta: f64) -> f64 {
        self.ball(log_delta.exp())
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Entropy data entering the certificates: `N(ε)` and `r(δ)`.
#[derive(Clone)]
pub enum EntropyModel {
    Empirical(Arc<EmpiricalEntropy>),
    /// `N(ε) = ε^{−κ}`, `r(δ) = δ^s`.
    PowerLaw { kappa: f64, s: f64 },
    /// `N(ε) = ε^{−(1+s)} |ln ε|^{−β}`, `r(δ) = δ^s`.
    LogCorrected { s: f64, beta: f64 },
    Custom { covering: ScalarFn, ball: ScalarFn },
}

impl fmt::Debug for EntropyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyModel::Empirical(e) => write!(f, "Empirical({} points)", e.points()),
            EntropyModel::PowerLaw { kappa, s } => write!(f, "PowerLaw {{ kappa: {kappa}, s: {s} }}"),
            EntropyModel::LogCorrected { s, beta } => write!(f, "LogCorrected {{ s: {s}, beta: {beta} }}"),
            EntropyModel::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl EntropyModel {
    pub fn power_law(kappa: f64, s: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter { name: "kappa", value: kappa, reason: "must be positive" });
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter { name: "s", value: s, reason: "must be nonnegative" });
        }
        Ok(EntropyModel::PowerLaw { kappa, s })
    }

    pub fn log_corrected(s: f64, beta: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter { name: "s", value: s, reason: "must be nonnegative" });
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter { name: "beta", value: beta, reason: "must be positive" });
        }
        Ok(EntropyModel::LogCorrected { s, beta })
    }

    pub fn empirical(space: &MetricMeasureSpace) -> Result<Self> {
        Self::empirical_split(space, space, Execution::default())
    }

    /// Covering numbers under `n_space`'s distance, ball function under `r_space`'s.
    pub fn empirical_split(n_space: &MetricMeasureSpace, r_space: &MetricMeasureSpace, exec: Execution) -> Result<Self> {
        Ok(EntropyModel::Empirical(Arc::new(EmpiricalEntropy::new(n_space, r_space, exec)?)))
    }

    pub fn custom(
        covering: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ball: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        EntropyModel::Custom { covering: Arc::new(covering), ball: Arc::new(ball) }
    }

    /// Empirical model of a dual family under its `L1` distance, with
    /// uniform weights, and the family diameter.
    pub fn from_dual_geometry(geometry: &DualGeometry) -> Result<(Self, f64)> {
        if geometry.diameter <= 0.0 {
            return Err(Error::DegenerateGeometry("dual family has zero diameter".into()));
        }
        let m = geometry.table.len();
        let space = MetricMeasureSpace::from_matrix(&geometry.table, vec![1.0 / m as f64; m])?;
        Ok((Self::empirical(&space)?, geometry.diameter))
    }

    pub fn covering(&self, eps: f64) -> f64 {
        match self {
            EntropyModel::Empirical(e) => e.covering(eps),
            EntropyModel::PowerLaw { kappa, .. } => eps.powf(-kappa),
            EntropyModel::LogCorrected { s, beta } => eps.powf(-(1.0 + s)) * eps.ln().abs().powf(-beta),
            EntropyModel::Custom { covering, .. } => covering(eps),
        }
    }

    pub fn ball(&self, delta: f64) -> f64 {
        match self {
            EntropyModel::Empirical(e) => e.ball(delta),
            EntropyModel::PowerLaw { s, .. } | EntropyModel::LogCorrected { s, .. } => delta.powf(*s),
            EntropyModel::Custom { ball, .. } => ball(delta),
        }
    }

    pub fn is_empirical(&self) -> bool {
        matches!(self, EntropyModel::Empirical(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateStatus {
    Certified,
    Diverged,
    ResolutionLimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaValue {
    pub q: f64,
    /// `+∞` when the series diverges.
    pub value: f64,
    pub status: CertificateStatus,
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "q", value: q, reason: "must lie in (0, 1)" })
    }
}

/// `σ(q) = Σ_{n>=0} q^n N(q^{n+1}) r(q^n)`.
pub fn sigma_series(model: &EntropyModel, q: f64, tol: f64) -> Result<SigmaValue> {
    check_q(q)?;
    let (value, status) = match model {
        EntropyModel::PowerLaw { kappa, s } => {
            let delta = 1.0 + s - kappa;
            if delta <= 0.0 {
                (f64::INFINITY, CertificateStatus::Diverged)
            } else {
                (q.powf(-kappa) / -(delta * q.ln()).exp_m1(), CertificateStatus::Certified)
            }
        }
        EntropyModel::LogCorrected { s, beta } => {
            if *beta <= 1.0 {
                (f64::INFINITY, CertificateStatus::Diverged)
            } else {
                (q.powf(-(1.0 + s)) * q.ln().abs().powf(-beta) * zeta(*beta), CertificateStatus::Certified)
            }
        }
        EntropyModel::Empirical(e) => (e.sigma(q), CertificateStatus::ResolutionLimited),
        EntropyModel::Custom { .. } => {
            let v = sigma_series_numeric(model, q, tol)?;
            let status = if v.is_finite() { CertificateStatus::Certified } else { CertificateStatus::Diverged };
            (v, status)
        }
    };
    Ok(SigmaValue { q, value, status })
}

/// Direct summation of the series with a ratio-test remainder estimate.
///
/// Log-corrected models add the exact Hurwitz-zeta tail instead.
pub fn sigma_series_numeric(model: &EntropyModel, q: f64, tol: f64) -> Result<f64> {
    check_q(q)?;
    let term = |n: usize| {
        let qn = q.powi(n as i32);
        qn * model.covering(qn * q) * model.ball(qn)
    };
    if let EntropyModel::LogCorrected { s, beta } = model {
        if *beta <= 1.0 {
            return Ok(f64::INFINITY);
        }
        let head = 64usize;
        let sum: f64 = (0..head).map(term).sum();
        let tail = q.powf(-(1.0 + s)) * q.ln().abs().powf(-beta) * hurwitz_zeta(*beta, head as f64 + 1.0);
        return Ok(sum + tail);
    }
    const MAX_TERMS: usize = 1_000_000;
    let mut sum = 0.0;
    let mut prev = term(0);
    if !prev.is_finite() {
        return Ok(f64::INFINITY);
    }
    sum += prev;
    let mut stalled = 0;
    for n in 1..MAX_TERMS {
        let t = term(n);
        if !t.is_finite() {
            return Ok(f64::INFINITY);
        }
        sum += t;
        if prev > 0.0 {
            let ratio = t / prev;
            if ratio < 1.0 {
                stalled = 0;
                let remainder = t * ratio / (1.0 - ratio);
                if remainder <= tol * sum && n >= 8 {
                    return Ok(sum + remainder);
                }
            } else {
                stalled += 1;
                if stalled >= 1000 {
                    return Ok(f64::INFINITY);
                }
            }
        } else if t == 0.0 && n >= 8 {
            return Ok(sum);
        }
        prev = t;
    }
    Ok(f64::INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaMinimum {
    pub q0: f64,
    pub value: f64,
    /// The minimum sits at an end of the scanned range.
    pub boundary: bool,
    pub status: CertificateStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub scan_points: usize,
    pub q_tol: f64,
    pub series_tol: f64,
    pub integral_rel_tol: f64,
    pub exec: Execution,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { scan_points: 64, q_tol: 1e-8, series_tol: 1e-12, integral_rel_tol: 1e-13, exec: Execution::default() }
    }
}

const LOGIT_SPAN: f64 = 18.4;

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `inf_q σ(q)`: logit-spaced scan, then golden section in `q`.
pub fn minimize_sigma(model: &EntropyModel, opts: &CertifyOptions) -> Result<SigmaMinimum> {
    let m = opts.scan_points.max(3);
    let qs: Vec<f64> = (0..m)
        .map(|i| logistic(-LOGIT_SPAN + 2.0 * LOGIT_SPAN * i as f64 / (m - 1) as f64))
        .collect();
    let values = map_slice(opts.exec, &qs, |&q| {
        sigma_series(model, q, opts.series_tol).map(|s| s.value).unwrap_or(f64::INFINITY)
    });
    let best = (0..m).filter(|&i| values[i].is_finite()).fold(None, |b: Option<usize>, i| match b {
        Some(j) if values[j] <= values[i] => Some(j),
        _ => Some(i),
    });
    let Some(i) = best else {
        return Ok(SigmaMinimum { q0: f64::NAN, value: f64::INFINITY, boundary: false, status: CertificateStatus::Diverged });
    };
    let status = if model.is_empirical() { CertificateStatus::ResolutionLimited } else { CertificateStatus::Certified };
    let (lo, hi) = (qs[i.saturating_sub(1)], qs[(i + 1).min(m - 1)]);
    let f = |q: f64| sigma_series(model, q, opts.series_tol).map(|s| s.value).unwrap_or(f64::INFINITY);
    let (mut q0, mut value) = (qs[i], values[i]);
    if hi > lo {
        let (x, v) = golden_min(f, lo, hi, opts.q_tol, 400);
        if v < value {
            q0 = x;
            value = v;
        }
    }
    Ok(SigmaMinimum { q0, value, boundary: i == 0 || i == m - 1, status })
}

/// `v_*(x) = inf_{y >= 0} (x y + ln ψ(1/y))`, written over `p = 1/y`.
pub fn log_psi_co_transform(psi: &PsiFunction, x: f64) -> Result<f64> {
    let objective = |p: f64| psi.ln_eval(p).map(|l| x / p + l).unwrap_or(f64::INFINITY);
    let limit = if psi.has_infinite_support() { psi.ln_limit_at_infinity() } else { f64::INFINITY };
    if x == f64::INFINITY {
        return Ok(if limit.is_finite() { limit } else { f64::INFINITY });
    }
    let mut cap = 400.0;
    loop {
        let nodes = psi.exponent_nodes(256, cap);
        let vals: Vec<f64> = nodes.iter().map(|&p| objective(p)).collect();
        let best = (0..nodes.len()).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
        let at_cap = best == nodes.len() - 1;
        if !psi.has_infinite_support() || !at_cap || cap >= 1e9 {
            let (a, b) = (nodes[best.saturating_sub(1)], nodes[(best + 1).min(nodes.len() - 1)]);
            let (_, v) = golden_max(|p| -objective(p), a, b, 1e-13, 200);
            let inner = (-v).min(vals[best]);
            if !inner.is_finite() && !limit.is_finite() {
                return Err(Error::NonFinite { at: x, value: inner });
            }
            return Ok(inner.min(limit));
        }
        cap *= 8.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralValue {
    /// `+∞` on detected divergence.
    pub value: f64,
    pub status: CertificateStatus,
    pub levels: usize,
}

/// `∫_0^D exp(v_*(2 + ln N(ε))) dε` with `v(y) = ln ψ(1/y)`.
pub fn entropy_integral(model: &EntropyModel, d_max: f64, psi: &PsiFunction, opts: &CertifyOptions) -> Result<IntegralValue> {
    if !(d_max > 0.0 && d_max.is_finite()) {
        return Err(Error::DegenerateGeometry(format!("integration range D = {d_max} must be positive")));
    }
    let integrand = |eps: f64| -> Result<f64> {
        let ln_n = model.covering(eps).ln().max(0.0);
        Ok(log_psi_co_transform(psi, 2.0 + ln_n)?.exp())
    };
    if let EntropyModel::Empirical(e) = model {
        // the integrand is a step function with jumps at the distinct distances
        let mut edges = vec![0.0];
        edges.extend(e.n_levels.iter().copied().filter(|&d| d < d_max));
        edges.push(d_max);
        let pieces = map_indices(opts.exec, edges.len() - 1, |k| -> Result<f64> {
            let (a, b) = (edges[k], edges[k + 1]);
            Ok((b - a) * integrand(a)?)
        });
        let mut total = 0.0;
        for p in pieces {
            total += p?;
        }
        return Ok(IntegralValue { value: total, status: CertificateStatus::ResolutionLimited, levels: edges.len() - 1 });
    }

    let (nodes, weights) = gauss_legendre(16);
    let cell = |a: f64, b: f64| -> Result<f64> {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            s += w * integrand(mid + half * x)?;
        }
        Ok(half * s)
    };
    const MAX_LEVELS: usize = 1000;
    const DIVERGENCE_RUN: usize = 8;
    let mut total = 0.0;
    let mut prev = f64::INFINITY;
    let mut growing = 0;
    let mut quiet = 0;
    for k in 0..MAX_LEVELS {
        let b = d_max * 0.5f64.powi(k as i32);
        let c = cell(0.5 * b, b)?;
        if !c.is_finite() {
            return Ok(IntegralValue { value: f64::INFINITY, status: CertificateStatus::Diverged, levels: k + 1 });
        }
        total += c;
        growing = if c >= prev { growing + 1 } else { 0 };
        if growing >= DIVERGENCE_RUN {
            return Ok(IntegralValue { value: f64::INFINITY, status: CertificateStatus::Diverged, levels: k + 1 });
        }
        quiet = if c <= opts.integral_rel_tol * total { quiet + 1 } else { 0 };
        if quiet >= 2 {
            return Ok(IntegralValue { value: total, status: CertificateStatus::Certified, levels: k + 1 });
        }
        prev = c;
    }
    Ok(IntegralValue { value: total, status: CertificateStatus::Certified, levels: MAX_LEVELS })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    /// Path regularity from the entropy series.
    EntropySeries,
    /// Path regularity from the entropy integral over a dual family.
    EntropyIntegral,
    /// CLT from the entropy series with the Rosenthal-transformed ψ.
    CltSeries,
    /// CLT from the entropy integral with the Rosenthal-transformed ψ.
    CltIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub theorem: Theorem,
    pub value: f64,
    pub optimal_q: Option<f64>,
    pub boundary: bool,
    pub mixed_norm_bound: Option<f64>,
    /// `(x, bound)` pairs; present only when certified.
    pub tail_curve: Option<Vec<(f64, f64)>>,
    pub status: CertificateStatus,
    pub psi: PsiRecord,
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn is_certified(&self) -> bool {
        self.status == CertificateStatus::Certified
    }
}

const TAIL_POINTS: usize = 32;
const TAIL_SPAN: f64 = 20.0;

fn closed_form_notes(model: &EntropyModel) -> Vec<String> {
    match model {
        EntropyModel::PowerLaw { kappa, s } => {
            let delta = 1.0 + s - kappa;
            let lambda = kappa / delta;
            vec![format!(
                "closed form check: optimum q0 = (kappa/(kappa+Delta))^(1/Delta) = {:.12}, minimum lambda^-lambda (1+lambda)^(1+lambda) = {:.12}; \
                 the variant lambda^-lambda (1+lambda)^(-1-lambda) = {:.12} is below 1 and cannot be the minimum",
                (kappa / (kappa + delta)).powf(1.0 / delta),
                lambda.powf(-lambda) * (1.0 + lambda).powf(1.0 + lambda),
                lambda.powf(-lambda) * (1.0 + lambda).powf(-1.0 - lambda),
            )]
        }
        EntropyModel::LogCorrected { s, beta } => {
            let kappa = 1.0 + s;
            vec![format!(
                "closed form check: optimum q0 = exp(-beta/kappa) = {:.12}, minimum e^beta beta^-beta kappa^beta zeta(beta) = {:.12}; \
                 the variant e^-beta beta^beta kappa^-beta (zeta(beta) - 1) = {:.12} disagrees with direct summation",
                (-beta / kappa).exp(),
                beta.exp() * beta.powf(-beta) * kappa.powf(*beta) * zeta(*beta),
                (-beta).exp() * beta.powf(*beta) * kappa.powf(-beta) * (zeta(*beta) - 1.0),
            )]
        }
        _ => Vec::new(),
    }
}

fn tail_curve(psi: &PsiFunction, norm_value: f64, status: CertificateStatus) -> Result<Option<Vec<(f64, f64)>>> {
    if status != CertificateStatus::Certified || !(norm_value > 0.0 && norm_value.is_finite()) {
        return Ok(None);
    }
    TailBoundCurve::new(psi.clone(), norm_value)?.table(TAIL_SPAN, TAIL_POINTS).map(Some)
}

fn series_report(theorem: Theorem, model: &EntropyModel, psi: &PsiFunction, opts: &CertifyOptions, mut notes: Vec<String>) -> Result<CertificateReport> {
    let min = minimize_sigma(model, opts)?;
    notes.extend(closed_form_notes(model));
    if min.boundary {
        notes.push(format!("minimum found at the edge of the scanned q range (q = {:e})", min.q0));
    }
    let finite = min.value.is_finite();
    Ok(CertificateReport {
        theorem,
        value: min.value,
        optimal_q: finite.then_some(min.q0),
        boundary: min.boundary,
        mixed_norm_bound: finite.then_some(min.value),
        tail_curve: tail_curve(psi, min.value, min.status)?,
        status: min.status,
        psi: psi.to_record(),
        notes,
    })
}

fn integral_report(theorem: Theorem, model: &EntropyModel, d_max: f64, psi: &PsiFunction, opts: &CertifyOptions, notes: Vec<String>) -> Result<CertificateReport> {
    let v = entropy_integral(model, d_max, psi, opts)?;
    let finite = v.value.is_finite();
    Ok(CertificateReport {
        theorem,
        value: v.value,
        optimal_q: None,
        boundary: false,
        mixed_norm_bound: finite.then_some(9.0 * v.value),
        tail_curve: tail_curve(psi, 9.0 * v.value, v.status)?,
        status: v.status,
        psi: psi.to_record(),
        notes,
    })
}

/// Path-regularity certificate from the entropy series; the mixed norm is
/// bounded by `inf_q σ(q)` when `sup_t ||ξ(t)||_{Gψ} = 1`.
pub fn certify_series(model: &EntropyModel, psi: &PsiFunction, opts: &CertifyOptions) -> Result<CertificateReport> {
    series_report(Theorem::EntropySeries, model, psi, opts, Vec::new())
}

/// Path-regularity certificate from the entropy integral; the mixed norm is bounded by `9 I`.
pub fn certify_integral(model: &EntropyModel, d_max: f64, psi: &PsiFunction, opts: &CertifyOptions) -> Result<CertificateReport> {
    integral_report(Theorem::EntropyIntegral, model, d_max, psi, opts, Vec::new())
}

/// ψ used by the CLT certificates: `ψ_R` on unbounded supports, ψ itself otherwise.
pub fn clt_psi(psi: &PsiFunction, mean_zero: bool) -> Result<(PsiFunction, Vec<String>)> {
    if !mean_zero {
        return Err(Error::NotMeanZero);
    }
    let (_, hi) = psi.support();
    if hi <= 2.0 {
        return Err(Error::InvalidParameter { name: "b", value: hi, reason: "the CLT certificates need b > 2" });
    }
    if hi.is_finite() {
        let note = "finite support: the Rosenthal transform is equivalent to ψ up to constants, so ψ is used directly".to_string();
        return Ok((psi.clone(), vec![note]));
    }
    Ok((rosenthal_transform(psi, false)?, Vec::new()))
}

/// CLT certificate from the entropy series; the model's distance should be `ρ_ψ`.
pub fn clt_certify_series(model: &EntropyModel, psi: &PsiFunction, mean_zero: bool, opts: &CertifyOptions) -> Result<CertificateReport> {
    let (psi_r, notes) = clt_psi(psi, mean_zero)?;
    series_report(Theorem::CltSeries, model, &psi_r, opts, notes)
}

/// CLT certificate from the entropy integral; bound `9 J`.
pub fn clt_certify_integral(model: &EntropyModel, d_max: f64, psi: &PsiFunction, mean_zero: bool, opts: &CertifyOptions) -> Result<CertificateReport> {
    let (psi_r, mut notes) = clt_psi(psi, mean_zero)?;
    notes.push("certificate is relative to the declared dual family".into());
    integral_report(Theorem::CltIntegral, model, d_max, &psi_r, opts, notes)
}
