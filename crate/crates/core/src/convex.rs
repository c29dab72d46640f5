//! Grid-based Young–Fenchel transforms and the dualities between ψ-functions,
//! exponential Orlicz functions and tail bounds.
//!
//! Extended values are plain `f64` infinities: `+∞` marks a conjugate that is
//! unbounded (slope outside the achievable range) and saturates under the
//! usual float arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_max, linear_grid, log_grid};
use crate::psi::PsiFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extrapolation {
    /// The function is `+∞` outside the grid.
    Forbid,
    /// The end segment continues linearly.
    Linear,
}

/// A function sampled on strictly increasing abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFunctionGrid {
    nodes: Vec<f64>,
    values: Vec<f64>,
    left: Extrapolation,
    right: Extrapolation,
    smooth: bool,
}

impl ScalarFunctionGrid {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, extrapolation: Extrapolation) -> Result<Self> {
        Self::with_sides(nodes, values, extrapolation, extrapolation)
    }

    pub fn with_sides(nodes: Vec<f64>, values: Vec<f64>, left: Extrapolation, right: Extrapolation) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: nodes.len(), got: values.len() });
        }
        if nodes.len() < 2 {
            return Err(Error::GridTooSmall { needed: 2, got: nodes.len() });
        }
        for i in 0..nodes.len() {
            if !nodes[i].is_finite() || !values[i].is_finite() {
                return Err(Error::NonFinite { at: nodes[i], value: values[i] });
            }
            if i > 0 && nodes[i] <= nodes[i - 1] {
                return Err(Error::NotIncreasing { index: i });
            }
        }
        Ok(Self { nodes, values, left, right, smooth: false })
    }

    pub fn from_fn(nodes: Vec<f64>, f: impl Fn(f64) -> f64, extrapolation: Extrapolation) -> Result<Self> {
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(nodes, values, extrapolation)
    }

    /// Marks the samples as coming from a `C²` function. Transforms then refine
    /// their grid maximum with a local parabola instead of treating the grid
    /// function as piecewise linear.
    pub fn smooth(mut self) -> Self {
        self.smooth = true;
        self
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / (self.nodes[i + 1] - self.nodes[i])
    }

    pub fn left_slope(&self) -> f64 {
        self.slope(0)
    }

    pub fn right_slope(&self) -> f64 {
        self.slope(self.len() - 2)
    }

    /// Piecewise-linear evaluation; `+∞` outside a forbidden side.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.len();
        if x < self.nodes[0] {
            return match self.left {
                Extrapolation::Forbid => f64::INFINITY,
                Extrapolation::Linear => self.values[0] + self.left_slope() * (x - self.nodes[0]),
            };
        }
        if x > self.nodes[n - 1] {
            return match self.right {
                Extrapolation::Forbid => f64::INFINITY,
                Extrapolation::Linear => self.values[n - 1] + self.right_slope() * (x - self.nodes[n - 1]),
            };
        }
        let i = self.nodes.partition_point(|&v| v <= x).clamp(1, n - 1);
        let t = (x - self.nodes[i - 1]) / (self.nodes[i] - self.nodes[i - 1]);
        self.values[i - 1] + t * (self.values[i] - self.values[i - 1])
    }

    /// Discrete second differences are all `>= -tol` (scaled by the value range).
    pub fn is_convex(&self, tol: f64) -> bool {
        self.first_nonconvex(tol).is_none()
    }

    fn first_nonconvex(&self, tol: f64) -> Option<(f64, f64)> {
        let scale = self.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for i in 1..self.len() - 1 {
            if self.slope(i) - self.slope(i - 1) < -tol * scale {
                return Some((self.nodes[i - 1], self.nodes[i + 1]));
            }
        }
        None
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] > w[0])
    }

    /// Two-column text: a `#` header line, then `abscissa value` rows.
    pub fn to_text(&self, tag: &str) -> String {
        let mut out = format!("# {tag}\n");
        for (x, v) in self.nodes.iter().zip(&self.values) {
            out.push_str(&format!("{x:e} {v:e}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let mut cols = line.split_whitespace().map(str::parse::<f64>);
            match (cols.next(), cols.next()) {
                (Some(Ok(x)), Some(Ok(v))) => {
                    nodes.push(x);
                    values.push(v);
                }
                _ => return Err(Error::NonFinite { at: nodes.len() as f64, value: f64::NAN }),
            }
        }
        Self::new(nodes, values, Extrapolation::Forbid)
    }

    /// Second divided difference at interior node `i`.
    fn curvature(&self, i: usize) -> f64 {
        2.0 * (self.slope(i) - self.slope(i - 1)) / (self.nodes[i + 1] - self.nodes[i - 1])
    }

    /// Whether the function looks twice differentiable around node `i`:
    /// positive curvature agreeing within a factor 2 with a neighbour.
    fn smooth_at(&self, i: usize) -> bool {
        let n = self.len();
        if i == 0 || i + 1 >= n {
            return false;
        }
        let c = self.curvature(i);
        if c <= 0.0 {
            return false;
        }
        let mut neighbours = Vec::with_capacity(2);
        if i >= 2 {
            neighbours.push(self.curvature(i - 1));
        }
        if i + 2 < n {
            neighbours.push(self.curvature(i + 1));
        }
        !neighbours.is_empty()
            && neighbours
                .iter()
                .all(|&d| d > 0.0 && d <= 2.0 * c && c <= 2.0 * d)
    }
}

/// `sup_{y >= lower} (u y − f(y))` over the grid domain and its extensions.
fn sup_affine(f: &ScalarFunctionGrid, u: f64, lower: Option<f64>) -> f64 {
    let n = f.len();
    let slope_tol = |s: f64| 1e-12 * s.abs().max(1.0);
    if f.right == Extrapolation::Linear && u > f.right_slope() + slope_tol(f.right_slope()) {
        return f64::INFINITY;
    }
    let start = match lower {
        Some(lo) => f.nodes.partition_point(|&y| y < lo),
        None => 0,
    };
    let mut best = f64::NEG_INFINITY;
    let mut best_i = usize::MAX;
    for i in start..n {
        let h = u * f.nodes[i] - f.values[i];
        if h > best {
            best = h;
            best_i = i;
        }
    }
    if f.left == Extrapolation::Linear {
        match lower {
            None => {
                if u < f.left_slope() - slope_tol(f.left_slope()) {
                    return f64::INFINITY;
                }
            }
            Some(lo) if lo < f.nodes[0] => {
                let h = u * lo - f.eval(lo);
                if h > best {
                    best = h;
                    best_i = usize::MAX;
                }
            }
            _ => {}
        }
    }
    if f.smooth && best_i != usize::MAX && best_i > start && f.smooth_at(best_i) {
        if let Some(v) = parabolic_peak(f, u, best_i) {
            if v > best {
                best = v;
            }
        }
    }
    best
}

/// Vertex of the parabola through `u y − f(y)` at nodes `i−1, i, i+1`.
fn parabolic_peak(f: &ScalarFunctionGrid, u: f64, i: usize) -> Option<f64> {
    let h = |j: usize| u * f.nodes[j] - f.values[j];
    let (a, b) = (f.nodes[i - 1] - f.nodes[i], f.nodes[i + 1] - f.nodes[i]);
    let (ha, hb) = (h(i - 1) - h(i), h(i + 1) - h(i));
    let beta = (a * hb - b * ha) / (a * b * (b - a));
    if beta >= 0.0 {
        return None;
    }
    let alpha = (ha - beta * a * a) / a;
    let t = -alpha / (2.0 * beta);
    (t >= a && t <= b).then(|| h(i) - alpha * alpha / (4.0 * beta))
}

/// Young–Fenchel transform `f*(u) = sup_y (u y − f(y))`.
pub fn young_fenchel(f: &ScalarFunctionGrid, u: f64) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::GridTooSmall { needed: 2, got: 0 });
    }
    Ok(sup_affine(f, u, None))
}

/// Co-transform `f_*(x) = inf_{y >= 0} (x y + f(y))`.
pub fn co_transform(f: &ScalarFunctionGrid, x: f64) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::GridTooSmall { needed: 2, got: 0 });
    }
    if f.nodes[f.len() - 1] < 0.0 && f.right == Extrapolation::Forbid {
        return Err(Error::EmptyDomain);
    }
    Ok(-sup_affine(f, -x, Some(0.0)))
}

/// Grid sizes for the transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformGrid {
    pub nodes: usize,
    /// Initial exponent cap for unbounded supports.
    pub p_cap: f64,
}

impl Default for TransformGrid {
    fn default() -> Self {
        Self { nodes: 512, p_cap: 400.0 }
    }
}

/// `g(p) = p ln ψ(p)` sampled on `nodes`.
fn log_moment_grid(psi: &PsiFunction, nodes: Vec<f64>) -> Result<ScalarFunctionGrid> {
    let values = nodes
        .iter()
        .map(|&p| psi.ln_eval(p).map(|l| p * l))
        .collect::<Result<Vec<_>>>()?;
    ScalarFunctionGrid::new(nodes, values, Extrapolation::Forbid)
}

/// `[p ln ψ(p)]*(y)`, widening the exponent range while the maximizer sits at
/// the cap of an unbounded support.
pub fn log_moment_conjugate(psi: &PsiFunction, y: f64, grid: &TransformGrid) -> Result<f64> {
    let mut cap = grid.p_cap;
    loop {
        let nodes = psi.exponent_nodes(grid.nodes, cap);
        let g = log_moment_grid(psi, nodes)?;
        let h = |i: usize| y * g.nodes()[i] - g.values()[i];
        let best = (0..g.len()).fold(0, |b, i| if h(i) > h(b) { i } else { b });
        let at_cap = best == g.len() - 1;
        if !psi.has_infinite_support() || !at_cap || cap >= 1e9 {
            let (a, b) = (g.nodes()[best.saturating_sub(1)], g.nodes()[(best + 1).min(g.len() - 1)]);
            let objective = |p: f64| psi.ln_eval(p).map(|l| y * p - p * l).unwrap_or(f64::NEG_INFINITY);
            let (_, refined) = golden_max(objective, a, b, 1e-13, 200);
            return Ok(refined.max(h(best)));
        }
        cap *= 8.0;
    }
}

/// Upper bound on `max(P(ξ > x), P(ξ < −x))` for `||ξ||_{Gψ} = norm_value`,
/// valid for `x >= 2 norm_value`.
pub fn tail_bound(psi: &PsiFunction, norm_value: f64, x: f64) -> Result<f64> {
    tail_bound_with(psi, norm_value, x, &TransformGrid::default())
}

pub fn tail_bound_with(psi: &PsiFunction, norm_value: f64, x: f64, grid: &TransformGrid) -> Result<f64> {
    Ok(log_tail_bound_with(psi, norm_value, x, grid)?.exp())
}

/// Natural logarithm of [`tail_bound`], finite where the bound underflows.
pub fn log_tail_bound(psi: &PsiFunction, norm_value: f64, x: f64) -> Result<f64> {
    log_tail_bound_with(psi, norm_value, x, &TransformGrid::default())
}

pub fn log_tail_bound_with(psi: &PsiFunction, norm_value: f64, x: f64, grid: &TransformGrid) -> Result<f64> {
    if !(norm_value > 0.0 && norm_value.is_finite()) {
        return Err(Error::InvalidParameter { name: "norm", value: norm_value, reason: "must be positive and finite" });
    }
    let threshold = 2.0 * norm_value;
    if !(x >= threshold) {
        return Err(Error::BelowThreshold { what: "tail threshold x", value: x, threshold });
    }
    let conj = log_moment_conjugate(psi, (x / norm_value).ln(), grid)?;
    Ok((-conj).min(0.0))
}

/// Tail-bound curve `x ↦ exp(−[p ln ψ(p)]*(ln(x / norm)))`.
#[derive(Debug, Clone)]
pub struct TailBoundCurve {
    psi: PsiFunction,
    norm_value: f64,
}

impl TailBoundCurve {
    pub fn new(psi: PsiFunction, norm_value: f64) -> Result<Self> {
        if !(norm_value > 0.0 && norm_value.is_finite()) {
            return Err(Error::InvalidParameter { name: "norm", value: norm_value, reason: "must be positive and finite" });
        }
        Ok(Self { psi, norm_value })
    }

    pub fn norm_value(&self) -> f64 {
        self.norm_value
    }

    pub fn threshold(&self) -> f64 {
        2.0 * self.norm_value
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        tail_bound(&self.psi, self.norm_value, x)
    }

    /// Evaluates at `points` log-spaced thresholds from `2·norm` to `factor · norm`.
    pub fn table(&self, factor: f64, points: usize) -> Result<Vec<(f64, f64)>> {
        let xs = log_grid(self.threshold(), factor.max(2.5) * self.norm_value, points.max(2));
        xs.into_iter().map(|x| self.eval(x).map(|b| (x, b))).collect()
    }
}

/// Exponential Orlicz–Young function built from a ψ-function.
#[derive(Debug, Clone)]
pub struct OrliczYoung {
    u_nodes: Vec<f64>,
    values: Vec<f64>,
    pub convex: bool,
    pub nondecreasing: bool,
}

impl OrliczYoung {
    /// Wraps a table of `N` on nonnegative nodes; values may end in `+∞`.
    pub fn from_table(u_nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if u_nodes.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: u_nodes.len(), got: values.len() });
        }
        if u_nodes.len() < 2 {
            return Err(Error::GridTooSmall { needed: 2, got: u_nodes.len() });
        }
        if u_nodes[0] < 0.0 {
            return Err(Error::InvalidParameter { name: "u", value: u_nodes[0], reason: "nodes must be nonnegative" });
        }
        if let Some(i) = (1..u_nodes.len()).find(|&i| u_nodes[i] <= u_nodes[i - 1]) {
            return Err(Error::NotIncreasing { index: i });
        }
        if let Some(&v) = values.iter().find(|v| v.is_nan() || **v == f64::NEG_INFINITY) {
            return Err(Error::NonFinite { at: 0.0, value: v });
        }
        let k = values.iter().take_while(|v| v.is_finite()).count();
        let finite = &values[..k];
        let nondecreasing = finite.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0))
            && values[k..].iter().all(|v| v.is_infinite());
        let convex = k < 3
            || ScalarFunctionGrid::new(u_nodes[..k].to_vec(), finite.to_vec(), Extrapolation::Forbid)
                .map(|g| g.is_convex(1e-9))
                .unwrap_or(false);
        Ok(Self { u_nodes, values, convex, nondecreasing })
    }

    pub fn u_nodes(&self) -> &[f64] {
        &self.u_nodes
    }

    /// `N(u)` at the grid nodes; `+∞` beyond the finite range.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `N(|u|)`, linear between nodes, `+∞` past the last finite node.
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.abs();
        let n = self.u_nodes.len();
        if u > self.u_nodes[n - 1] {
            // convex continuation through the last two finite nodes
            let k = self.finite_len();
            if k < n || k < 2 {
                return f64::INFINITY;
            }
            let s = (self.values[k - 1] - self.values[k - 2]) / (self.u_nodes[k - 1] - self.u_nodes[k - 2]);
            if s == 0.0 {
                return self.values[k - 1];
            }
            return self.values[k - 1] + s * (u - self.u_nodes[k - 1]);
        }
        let i = self.u_nodes.partition_point(|&v| v <= u).clamp(1, n - 1);
        let (a, b) = (self.values[i - 1], self.values[i]);
        if b.is_infinite() {
            return if u <= self.u_nodes[i - 1] { a } else { f64::INFINITY };
        }
        let t = (u - self.u_nodes[i - 1]) / (self.u_nodes[i] - self.u_nodes[i - 1]);
        a + t * (b - a)
    }

    fn finite_len(&self) -> usize {
        self.values.iter().take_while(|v| v.is_finite()).count()
    }

    /// The finite part as a grid, when it has at least two nodes.
    pub fn finite_part(&self) -> Option<ScalarFunctionGrid> {
        let k = self.finite_len();
        ScalarFunctionGrid::new(self.u_nodes[..k].to_vec(), self.values[..k].to_vec(), Extrapolation::Forbid).ok()
    }
}

/// Grids for [`orlicz_from_psi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrliczGrid {
    pub y_nodes: usize,
    pub u_nodes: usize,
    pub u_max: f64,
    pub p_cap: f64,
}

impl Default for OrliczGrid {
    fn default() -> Self {
        Self { y_nodes: 512, u_nodes: 512, u_max: 10.0, p_cap: 400.0 }
    }
}

/// `N(u) = exp(φ*(u)) − 1`, with `φ` the functional inverse of
/// `χ(p) = p / ψ(p)` (`p >= 2`), patched by `C p²` on `[0, 2]` where `4C = χ(2)`.
pub fn orlicz_from_psi(psi: &PsiFunction, grid: &OrliczGrid) -> Result<OrliczYoung> {
    let (lo, hi) = psi.support();
    if lo > 2.0 || hi <= 2.0 {
        return Err(Error::InvalidParameter {
            name: "support",
            value: lo,
            reason: "the ψ support must contain [2, b)",
        });
    }
    let eval_psi = |p: f64| psi.eval(p.max(lo * (1.0 + 1e-12)));
    let chi2 = 2.0 / eval_psi(2.0)?;
    let c = chi2 / 4.0;
    let p_top = if hi.is_finite() { hi * (1.0 - 1e-9) } else { grid.p_cap };
    let chi = |p: f64| -> Result<f64> {
        if p <= 2.0 {
            Ok(c * p * p)
        } else {
            Ok(p / eval_psi(p)?)
        }
    };

    let p_nodes = log_grid(2.0, p_top, grid.y_nodes);
    let mut chi_values = Vec::with_capacity(p_nodes.len());
    for (i, &p) in p_nodes.iter().enumerate() {
        let v = chi(p)?;
        if i > 0 && v <= chi_values[i - 1] {
            return Err(Error::NotMonotone { lo: p_nodes[i - 1], hi: p });
        }
        chi_values.push(v);
    }
    let y_top = chi_values[chi_values.len() - 1];

    // φ on [0, y_top]: square root on the patch, bisection beyond it
    let y_nodes = linear_grid(0.0, y_top, grid.y_nodes);
    let mut phi = Vec::with_capacity(y_nodes.len());
    for &y in &y_nodes {
        if y <= chi2 {
            phi.push((y / c).sqrt());
        } else {
            let j = chi_values.partition_point(|&v| v < y).clamp(1, p_nodes.len() - 1);
            let (a, b) = (p_nodes[j - 1], p_nodes[j]);
            let root = bisect(|p| chi(p).map(|v| v - y).unwrap_or(f64::NAN), a, b, 1e-10);
            phi.push(root);
        }
    }
    let right = if hi.is_infinite() { Extrapolation::Linear } else { Extrapolation::Forbid };
    let phi_grid = ScalarFunctionGrid::with_sides(y_nodes, phi, Extrapolation::Forbid, right)?.smooth();

    // φ is even, so φ*(u) = sup_{y >= 0} (|u| y − φ(y))
    let u_nodes = linear_grid(0.0, grid.u_max, grid.u_nodes);
    let values: Vec<f64> = u_nodes
        .iter()
        .map(|&u| {
            let conj = sup_affine(&phi_grid, u, Some(0.0)).max(0.0);
            if conj.is_infinite() {
                f64::INFINITY
            } else {
                conj.exp_m1()
            }
        })
        .collect();

    OrliczYoung::from_table(u_nodes, values)
}

/// ψ from a tail bound `T(x) <= exp(−h(ln x))`: `ψ(p) = exp(h*(p) / p)`.
pub fn psi_from_tail(h: &ScalarFunctionGrid) -> Result<PsiFunction> {
    psi_from_tail_with(h, &TransformGrid::default())
}

pub fn psi_from_tail_with(h: &ScalarFunctionGrid, grid: &TransformGrid) -> Result<PsiFunction> {
    if h.len() < 3 {
        return Err(Error::GridTooSmall { needed: 3, got: h.len() });
    }
    if let Some(&bad) = h.values().iter().find(|&&v| v <= 0.0) {
        return Err(Error::InvalidParameter { name: "h", value: bad, reason: "must be positive" });
    }
    if let Some((lo, hi)) = h.first_nonconvex(1e-9) {
        return Err(Error::NotConvex { lo, hi });
    }
    for w in 0..h.len() - 1 {
        if h.values[w + 1] <= h.values[w] {
            return Err(Error::NotMonotone { lo: h.nodes[w], hi: h.nodes[w + 1] });
        }
    }
    // beyond the last slope the conjugate would only see the truncated grid
    let p_max = grid.p_cap.min(h.right_slope());
    if p_max <= 1.0 + 1e-6 {
        return Err(Error::InvalidParameter {
            name: "h slope",
            value: p_max,
            reason: "h must grow faster than linearly on its grid",
        });
    }
    let nodes = log_grid(1.0 + 1e-9, p_max, grid.nodes);
    let table: Vec<(f64, f64)> = nodes
        .iter()
        .map(|&p| (p, (sup_affine(h, p, None) / p).exp()))
        .collect();
    PsiFunction::tabulated(&table, 1.0, f64::INFINITY)
}
