//! Finite metric-measure spaces, covering and packing numbers, net
//! hierarchies and ball functions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::rng::stream_rng;

const TRIANGLE_TOL: f64 = 1e-12;
const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 200;
const SAMPLED_TRIPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Metric::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Metric::Manhattan => diffs.sum(),
            Metric::Chebyshev => diffs.fold(0.0, f64::max),
        }
    }
}

/// A finite set `T` with weights `μ_i` and a dense distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMeasureSpace {
    n: usize,
    coords: Option<Vec<Vec<f64>>>,
    weights: Vec<f64>,
    dist: Vec<f64>,
}

impl MetricMeasureSpace {
    /// Builds from an explicit symmetric distance matrix.
    pub fn from_matrix(dist: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let n = dist.len();
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
        }
        let mut flat = Vec::with_capacity(n * n);
        for row in dist {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            flat.extend_from_slice(row);
        }
        let space = Self { n, coords: None, weights, dist: flat };
        space.validate()?;
        Ok(space)
    }

    /// Builds from coordinates under `metric`.
    pub fn from_points(coords: Vec<Vec<f64>>, weights: Vec<f64>, metric: Metric) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
        }
        let dim = coords[0].len();
        if let Some(bad) = coords.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = metric.distance(&coords[i], &coords[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        let space = Self { n, coords: Some(coords), weights, dist };
        space.validate()?;
        Ok(space)
    }

    /// `n` equally spaced points on `[0, 1]` with weights `1/n`.
    pub fn uniform_grid(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        let coords = (0..n)
            .map(|i| vec![if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 }])
            .collect();
        Self::from_points(coords, vec![1.0 / n as f64; n], Metric::Euclidean)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        if let Some(&w) = self.weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter { name: "weight", value: w, reason: "weights must be finite and nonnegative" });
        }
        for i in 0..n {
            if self.d(i, i) != 0.0 {
                return Err(Error::InvalidMetric(format!("d({i},{i}) = {} is not zero", self.d(i, i))));
            }
            for j in 0..n {
                let d = self.d(i, j);
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) = {d} is not a finite nonnegative number")));
                }
                if d != self.d(j, i) {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        let check = |i: usize, j: usize, k: usize| -> Result<()> {
            let excess = self.d(i, k) - self.d(i, j) - self.d(j, k);
            if excess > TRIANGLE_TOL * self.d(i, k).max(1.0) {
                return Err(Error::InvalidMetric(format!(
                    "triangle inequality fails at ({i},{j},{k}) by {excess:e}"
                )));
            }
            Ok(())
        };
        if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
            for i in 0..n {
                for j in 0..n {
                    for k in i + 1..n {
                        check(i, j, k)?;
                    }
                }
            }
        } else {
            let mut rng = stream_rng(0x7472_6961_6e67_6c65, 0);
            for _ in 0..SAMPLED_TRIPLES {
                check(rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n))?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest nonzero pairwise distance, `+∞` when there is none.
    pub fn resolution(&self) -> f64 {
        self.dist.iter().copied().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min)
    }

    /// Heaviest point, lowest id on ties.
    pub fn heaviest_point(&self) -> usize {
        (0..self.n).fold(0, |b, i| if self.weights[i] > self.weights[b] { i } else { b })
    }

    /// Total weight of the closed ball `B(center, δ)`.
    /// Sorted distinct nonzero pairwise distances.
    pub fn distinct_distances(&self) -> Vec<f64> {
        let mut d: Vec<f64> = (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.d(i, j))
            .filter(|&d| d > 0.0)
            .collect();
        d.sort_by(f64::total_cmp);
        d.dedup();
        d
    }

    pub fn ball_weight(&self, center: usize, delta: f64) -> f64 {
        (0..self.n).filter(|&j| self.d(center, j) <= delta).map(|j| self.weights[j]).sum()
    }

    /// `r(T, δ) = max_t μ(B(t, δ))`.
    pub fn ball_function(&self, delta: f64) -> f64 {
        self.ball_function_with(delta, Execution::default())
    }

    pub fn ball_function_with(&self, delta: f64, exec: Execution) -> f64 {
        if delta >= self.diameter() {
            return self.total_weight();
        }
        map_indices(exec, self.n, |i| self.ball_weight(i, delta))
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Whether the closed `ε`-balls around `centers` cover every point.
    pub fn is_cover(&self, centers: &[usize], eps: f64) -> bool {
        (0..self.n).all(|j| centers.iter().any(|&c| self.d(c, j) <= eps))
    }

    /// Farthest-first traversal cover seeded at the heaviest point.
    pub fn farthest_first_cover(&self, eps: f64) -> Vec<usize> {
        let seed = self.heaviest_point();
        let mut centers = vec![seed];
        let mut gap: Vec<f64> = (0..self.n).map(|j| self.d(seed, j)).collect();
        loop {
            let far = (0..self.n).fold(0, |b, j| if gap[j] > gap[b] { j } else { b });
            if gap[far] <= eps {
                return centers;
            }
            centers.push(far);
            for j in 0..self.n {
                gap[j] = gap[j].min(self.d(far, j));
            }
        }
    }

    /// Largest distance to the farthest-first centers after each insertion.
    ///
    /// Entry `k − 1` is the covering radius of the first `k` centers; the
    /// sequence is nonincreasing and ends at 0.
    pub fn farthest_first_radii(&self) -> Vec<f64> {
        let seed = self.heaviest_point();
        let mut gap: Vec<f64> = (0..self.n).map(|j| self.d(seed, j)).collect();
        let mut radii = Vec::with_capacity(self.n);
        loop {
            let far = (0..self.n).fold(0, |b, j| if gap[j] > gap[b] { j } else { b });
            radii.push(gap[far]);
            if gap[far] <= 0.0 {
                return radii;
            }
            for j in 0..self.n {
                gap[j] = gap[j].min(self.d(far, j));
            }
        }
    }

    /// `r(T, δ)` just after each of the given increasing levels, in one sweep.
    pub fn ball_function_table(&self, levels: &[f64]) -> Vec<f64> {
        let mut events: Vec<(f64, usize, f64)> = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    events.push((self.d(i, j), i, self.weights[j]));
                }
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ball = self.weights.clone();
        let mut best = ball.iter().cloned().fold(0.0, f64::max);
        let mut k = 0;
        levels
            .iter()
            .map(|&level| {
                while k < events.len() && events[k].0 <= level {
                    let (_, i, w) = events[k];
                    ball[i] += w;
                    best = best.max(ball[i]);
                    k += 1;
                }
                best
            })
            .collect()
    }

    fn max_coverage_cover(&self, eps: f64) -> Vec<usize> {
        let mut covered = vec![false; self.n];
        let mut left = self.n;
        let mut centers = Vec::new();
        while left > 0 {
            let gains: Vec<usize> = (0..self.n)
                .map(|c| (0..self.n).filter(|&j| !covered[j] && self.d(c, j) <= eps).count())
                .collect();
            let best = (0..self.n).fold(0, |b, c| if gains[c] > gains[b] { c } else { b });
            centers.push(best);
            for j in 0..self.n {
                if !covered[j] && self.d(best, j) <= eps {
                    covered[j] = true;
                    left -= 1;
                }
            }
        }
        centers
    }

    /// Greedy `ε`-cover; the smaller of the farthest-first and max-coverage covers.
    pub fn greedy_cover(&self, eps: f64) -> Vec<usize> {
        let a = self.farthest_first_cover(eps);
        if a.len() == 1 {
            return a;
        }
        let b = self.max_coverage_cover(eps);
        if b.len() < a.len() {
            b
        } else {
            a
        }
    }

    /// Maximal set with pairwise distances `> sep`; the larger of two greedy orders.
    pub fn greedy_packing(&self, sep: f64) -> Vec<usize> {
        let mut by_index: Vec<usize> = Vec::new();
        for j in 0..self.n {
            if by_index.iter().all(|&c| self.d(c, j) > sep) {
                by_index.push(j);
            }
        }
        let seed = self.heaviest_point();
        let mut far_first = vec![seed];
        let mut gap: Vec<f64> = (0..self.n).map(|j| self.d(seed, j)).collect();
        loop {
            let far = (0..self.n).fold(0, |b, j| if gap[j] > gap[b] { j } else { b });
            if gap[far] <= sep {
                break;
            }
            far_first.push(far);
            for j in 0..self.n {
                gap[j] = gap[j].min(self.d(far, j));
            }
        }
        if far_first.len() > by_index.len() {
            far_first
        } else {
            by_index
        }
    }

    /// Bracket `lower <= N(T, d, ε) <= upper`.
    pub fn covering_number(&self, eps: f64) -> CoveringBracket {
        if eps >= self.diameter() {
            return CoveringBracket { eps, upper: 1, lower: 1 };
        }
        CoveringBracket { eps, upper: self.greedy_cover(eps).len(), lower: self.greedy_packing(2.0 * eps).len() }
    }

    /// `ln` of both covering bounds.
    pub fn entropy(&self, eps: f64) -> EntropyValue {
        let c = self.covering_number(eps);
        EntropyValue { eps, upper: (c.upper as f64).ln(), lower: (c.lower as f64).ln() }
    }

    /// Nearest point of `centers` to `t`, lowest id on ties.
    pub fn project(&self, t: usize, centers: &[usize]) -> usize {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for &c in centers {
            let d = self.d(t, c);
            if d < best_d || (d == best_d && c < best) {
                best = c;
                best_d = d;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringBracketCounts {
    pub upper: usize,
    pub lower: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringBracket {
    pub eps: f64,
    pub upper: usize,
    pub lower: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub eps: f64,
    pub upper: f64,
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetLevel {
    pub radius: f64,
    /// Net point ids, ascending.
    pub centers: Vec<usize>,
    /// `θ_n(t)` for every point `t`.
    pub projection: Vec<usize>,
    pub covering_here: CoveringBracketCounts,
    pub covering_next: CoveringBracketCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetHierarchy {
    pub q: f64,
    /// Level radii are `radius0 · q^n`.
    pub radius0: f64,
    pub levels: Vec<NetLevel>,
    pub resolution_limited: bool,
}

impl NetHierarchy {
    /// Largest `d(t, θ_n(t)) / radius_n` over all points and levels.
    pub fn worst_projection_ratio(&self, space: &MetricMeasureSpace) -> f64 {
        self.levels
            .iter()
            .flat_map(|l| (0..space.len()).map(move |t| space.d(t, l.projection[t]) / l.radius))
            .fold(0.0, f64::max)
    }
}

/// Nested-scale nets: level 0 is `{t0}`, level `n` a greedy `radius0 · q^n` cover.
pub fn build_net_hierarchy(space: &MetricMeasureSpace, q: f64, max_levels: usize) -> Result<NetHierarchy> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter { name: "q", value: q, reason: "must lie in (0, 1)" });
    }
    let t0 = space.heaviest_point();
    let radius0 = (0..space.len()).map(|j| space.d(t0, j)).fold(1.0, f64::max);
    let resolution = space.resolution();
    let counts = |eps: f64| {
        let c = space.covering_number(eps);
        CoveringBracketCounts { upper: c.upper, lower: c.lower }
    };
    let mut levels = Vec::new();
    let mut resolution_limited = false;
    for n in 0..max_levels.max(1) {
        let radius = radius0 * q.powi(n as i32);
        let mut centers = if n == 0 { vec![t0] } else { space.greedy_cover(radius) };
        centers.sort_unstable();
        let projection = (0..space.len()).map(|t| space.project(t, &centers)).collect();
        levels.push(NetLevel {
            radius,
            centers,
            projection,
            covering_here: counts(radius),
            covering_next: counts(radius * q),
        });
        if radius < resolution {
            resolution_limited = true;
            break;
        }
    }
    Ok(NetHierarchy { q, radius0, levels, resolution_limited })
}

/// Serializable description of a space: coordinates or a distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SpaceRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub metric: Metric,
    /// Defaults to uniform weights `1/n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Shorthand for an `n`-point uniform grid on `[0, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

impl SpaceRecord {
    pub fn build(&self) -> Result<MetricMeasureSpace> {
        let weights = |n: usize| self.weights.clone().unwrap_or_else(|| vec![1.0 / n as f64; n]);
        match (&self.points, &self.distances, self.grid) {
            (Some(p), None, None) => MetricMeasureSpace::from_points(p.clone(), weights(p.len()), self.metric),
            (None, Some(d), None) => MetricMeasureSpace::from_matrix(d, weights(d.len())),
            (None, None, Some(n)) => {
                let g = MetricMeasureSpace::uniform_grid(n)?;
                match &self.weights {
                    Some(w) => MetricMeasureSpace::from_points(g.coords.unwrap_or_default(), w.clone(), Metric::Euclidean),
                    None => Ok(g),
                }
            }
            _ => Err(Error::InvalidMetric(
                "a space needs exactly one of `points`, `distances` or `grid`".into(),
            )),
        }
    }
}
