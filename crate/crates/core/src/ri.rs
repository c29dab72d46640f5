//! Rearrangement-invariant norms over a finite measure space.
//!
//! All sums run over `(|f_i|, μ_i)` pairs in sorted order, so jointly
//! permuting values and weights never changes a result.

use serde::{Deserialize, Serialize};

use crate::convex::OrliczYoung;
use crate::error::{Error, Result};
use crate::psi::{gls_norm, ExponentGrid, MomentCurve, PsiFunction, PsiRecord};

const GAUGE_REL_TOL: f64 = 1e-10;
const ATOM_TOL: f64 = 1e-12;

/// Young function `N` for an Orlicz space.
#[derive(Debug, Clone)]
pub enum YoungFunction {
    /// `|u|^p`, `p >= 1`.
    Power(f64),
    /// `exp(|u|^m) − 1`, `m >= 1`.
    ExpPower(f64),
    Tabulated(OrliczYoung),
}

impl YoungFunction {
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.abs();
        match self {
            YoungFunction::Power(p) => u.powf(*p),
            YoungFunction::ExpPower(m) => u.powf(*m).exp_m1(),
            YoungFunction::Tabulated(t) => t.eval(u),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            YoungFunction::Power(p) if !(*p >= 1.0 && p.is_finite()) => {
                Err(Error::InvalidParameter { name: "p", value: *p, reason: "power Young function needs p >= 1" })
            }
            YoungFunction::ExpPower(m) if !(*m >= 1.0 && m.is_finite()) => {
                Err(Error::InvalidParameter { name: "m", value: *m, reason: "exponential Young function needs m >= 1" })
            }
            YoungFunction::Tabulated(t) => {
                if t.u_nodes()[0] != 0.0 || t.values()[0] != 0.0 {
                    return Err(Error::InvalidParameter { name: "N(0)", value: t.values()[0], reason: "a Young function vanishes at 0" });
                }
                if !t.convex || !t.nondecreasing {
                    return Err(Error::InvalidParameter {
                        name: "N",
                        value: f64::NAN,
                        reason: "a Young function must be convex and nondecreasing",
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum RiKind {
    /// `p` in `[1, ∞]`.
    Lp(f64),
    Gls(PsiFunction, ExponentGrid),
    Orlicz(YoungFunction),
}

/// An r.i. space over a weighted finite set, with an optional declared
/// family of associate-space functions.
#[derive(Debug, Clone)]
pub struct RiSpace {
    kind: RiKind,
    weights: Vec<f64>,
    dual_family: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalValue {
    pub delta: f64,
    pub value: f64,
    /// The indicator could not be assembled from atoms; `value` is the closed form.
    pub closed_form: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualGeometry {
    /// Pairwise `L1(μ)` distances.
    pub table: Vec<Vec<f64>>,
    pub diameter: f64,
    pub warnings: Vec<String>,
}

impl RiSpace {
    pub fn new(kind: RiKind, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyDomain);
        }
        if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter { name: "weight", value: w, reason: "weights must be finite and nonnegative" });
        }
        match &kind {
            RiKind::Lp(p) if !(*p >= 1.0) => {
                return Err(Error::InvalidParameter { name: "p", value: *p, reason: "Lp needs p >= 1" });
            }
            RiKind::Orlicz(n) => n.validate()?,
            _ => {}
        }
        Ok(Self { kind, weights, dual_family: Vec::new() })
    }

    pub fn with_dual_family(mut self, family: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(g) = family.iter().find(|g| g.len() != self.weights.len()) {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), got: g.len() });
        }
        self.dual_family = family;
        Ok(self)
    }

    pub fn kind(&self) -> &RiKind {
        &self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dual_family(&self) -> &[Vec<f64>] {
        &self.dual_family
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn sorted_pairs(&self, f: &[f64]) -> Result<Vec<(f64, f64)>> {
        if f.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), got: f.len() });
        }
        if let Some((i, &v)) = f.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { at: i as f64, value: v });
        }
        let mut pairs: Vec<(f64, f64)> = f
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(v, &w)| (v.abs(), w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Ok(pairs)
    }

    /// Norm of the function with point values `f`.
    pub fn norm(&self, f: &[f64]) -> Result<f64> {
        let pairs = self.sorted_pairs(f)?;
        let top = pairs.iter().map(|x| x.0).fold(0.0, f64::max);
        if top == 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            RiKind::Lp(p) => Ok(lp_of_pairs(&pairs, *p)),
            RiKind::Gls(psi, grid) => {
                let (v, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
                gls_norm(&MomentCurve::from_weighted(&v, &w), psi, grid)
            }
            RiKind::Orlicz(n) => luxemburg(|lambda| pairs.iter().map(|(v, w)| w * n.eval(v / lambda)).sum(), top),
        }
    }

    /// `φ(L, δ)`, the norm of an indicator of measure `δ`.
    pub fn fundamental_function(&self, delta: f64) -> Result<FundamentalValue> {
        let total = self.total_weight();
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter { name: "delta", value: delta, reason: "must be positive" });
        }
        if delta > total * (1.0 + ATOM_TOL) {
            return Err(Error::MeasureTooLarge { delta, total });
        }
        // heaviest atoms first, lowest id on ties
        let mut order: Vec<usize> = (0..self.weights.len()).collect();
        order.sort_by(|&a, &b| self.weights[b].total_cmp(&self.weights[a]).then(a.cmp(&b)));
        let mut indicator = vec![0.0; self.weights.len()];
        let mut mass = 0.0;
        for i in order {
            let w = self.weights[i];
            if w > 0.0 && mass + w <= delta + ATOM_TOL {
                indicator[i] = 1.0;
                mass += w;
            }
        }
        if (mass - delta).abs() <= ATOM_TOL {
            return Ok(FundamentalValue { delta, value: self.norm(&indicator)?, closed_form: false });
        }
        let value = match &self.kind {
            RiKind::Lp(p) => {
                if p.is_infinite() {
                    1.0
                } else {
                    delta.powf(1.0 / p)
                }
            }
            RiKind::Gls(psi, grid) => gls_norm(&MomentCurve::new(1.0, f64::INFINITY, move |p| delta.powf(1.0 / p)), psi, grid)?,
            RiKind::Orlicz(n) => luxemburg(|lambda| delta * n.eval(1.0 / lambda), 1.0)?,
        };
        Ok(FundamentalValue { delta, value, closed_form: true })
    }

    /// `l_g(f) = Σ μ_i f_i g_i`.
    pub fn pairing(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.weights).map(|((a, b), w)| a * b * w).sum()
    }

    /// `max_g |l_g(f)|` over the declared family.
    pub fn dual_sup(&self, f: &[f64]) -> Option<f64> {
        self.dual_family.iter().map(|g| self.pairing(f, g).abs()).reduce(f64::max)
    }

    /// Associate-space norm, available for `Lp`.
    pub fn associate_norm(&self, g: &[f64]) -> Option<f64> {
        match self.kind {
            RiKind::Lp(p) => {
                let q = conjugate_exponent(p);
                let pairs = self.sorted_pairs(g).ok()?;
                Some(lp_of_pairs(&pairs, q))
            }
            _ => None,
        }
    }

    /// `L1(μ)` distance table of the declared family, optionally closed under `g ↦ −g`.
    pub fn dual_geometry(&self, include_negatives: bool) -> Result<DualGeometry> {
        if self.dual_family.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let mut warnings = Vec::new();
        for (i, g) in self.dual_family.iter().enumerate() {
            if let Some(a) = self.associate_norm(g) {
                if (a - 1.0).abs() > 1e-9 {
                    warnings.push(format!("dual member {i} has associate norm {a}, not 1"));
                }
            }
        }
        let mut members: Vec<Vec<f64>> = self.dual_family.clone();
        if include_negatives {
            members.extend(self.dual_family.iter().map(|g| g.iter().map(|v| -v).collect::<Vec<_>>()));
        }
        let m = members.len();
        let mut table = vec![vec![0.0; m]; m];
        let mut diameter = 0.0_f64;
        for i in 0..m {
            for j in i + 1..m {
                let d: f64 = members[i]
                    .iter()
                    .zip(&members[j])
                    .zip(&self.weights)
                    .map(|((a, b), w)| w * (a - b).abs())
                    .sum();
                table[i][j] = d;
                table[j][i] = d;
                diameter = diameter.max(d);
            }
        }
        Ok(DualGeometry { table, diameter, warnings })
    }
}

/// `p' = p / (p − 1)`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn lp_of_pairs(pairs: &[(f64, f64)], p: f64) -> f64 {
    let top = pairs.iter().map(|x| x.0).fold(0.0, f64::max);
    if top == 0.0 || p.is_infinite() {
        return top;
    }
    let s: f64 = pairs.iter().map(|(v, w)| w * (v / top).powf(p)).sum();
    top * s.powf(1.0 / p)
}

/// `inf{λ > 0 : F(λ) <= 1}` for nonincreasing `F`, starting the bracket at `scale`.
fn luxemburg(modular: impl Fn(f64) -> f64, scale: f64) -> Result<f64> {
    let mut hi = scale;
    let mut steps = 0;
    while !(modular(hi) <= 1.0) {
        hi *= 2.0;
        steps += 1;
        if steps > 2000 || !hi.is_finite() {
            return Err(Error::GaugeUnbounded);
        }
    }
    let mut lo = hi;
    steps = 0;
    while modular(lo) <= 1.0 {
        lo *= 0.5;
        steps += 1;
        if steps > 2000 || lo == 0.0 {
            return Err(Error::GaugeUnbounded);
        }
    }
    // F(lo) > 1 >= F(hi)
    for _ in 0..400 {
        if hi - lo <= GAUGE_REL_TOL * 1e-2 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if modular(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Serializable Young function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum YoungRecord {
    Power { p: f64 },
    ExpPower { m: f64 },
    Table { u: Vec<f64>, n: Vec<f64> },
}

impl YoungRecord {
    pub fn build(&self) -> Result<YoungFunction> {
        Ok(match self {
            YoungRecord::Power { p } => YoungFunction::Power(*p),
            YoungRecord::ExpPower { m } => YoungFunction::ExpPower(*m),
            YoungRecord::Table { u, n } => YoungFunction::Tabulated(OrliczYoung::from_table(u.clone(), n.clone())?),
        })
    }
}

/// Serializable r.i. space kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RiRecord {
    /// `p = null` means `p = ∞`.
    Lp { p: Option<f64> },
    Gls {
        psi: PsiRecord,
        #[serde(default)]
        grid: Option<ExponentGrid>,
    },
    Orlicz { young: YoungRecord },
}

impl RiRecord {
    pub fn build(&self, weights: Vec<f64>) -> Result<RiSpace> {
        let kind = match self {
            RiRecord::Lp { p } => RiKind::Lp(p.unwrap_or(f64::INFINITY)),
            RiRecord::Gls { psi, grid } => RiKind::Gls(PsiFunction::from_record(psi)?, grid.unwrap_or_default()),
            RiRecord::Orlicz { young } => RiKind::Orlicz(young.build()?),
        };
        RiSpace::new(kind, weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::log_grid;
    use approx::assert_relative_eq;

    fn prob(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    fn spaces(n: usize) -> Vec<RiSpace> {
        vec![
            RiSpace::new(RiKind::Lp(1.0), prob(n)).unwrap(),
            RiSpace::new(RiKind::Lp(3.0), prob(n)).unwrap(),
            RiSpace::new(RiKind::Lp(f64::INFINITY), prob(n)).unwrap(),
            RiSpace::new(RiKind::Gls(PsiFunction::power(2.0).unwrap(), ExponentGrid::default()), prob(n)).unwrap(),
            RiSpace::new(RiKind::Orlicz(YoungFunction::ExpPower(2.0)), prob(n)).unwrap(),
        ]
    }

    #[test]
    fn zero_has_zero_norm() {
        for s in spaces(5) {
            assert_eq!(s.norm(&[0.0; 5]).unwrap(), 0.0);
        }
    }

    #[test]
    fn indicator_in_lp() {
        let s = RiSpace::new(RiKind::Lp(2.5), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let v = s.norm(&[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_relative_eq!(v, 0.4f64.powf(1.0 / 2.5), max_relative = 1e-14);
    }

    #[test]
    fn square_orlicz_is_l2() {
        let w = vec![0.1, 0.2, 0.3, 0.4];
        let f = [1.5, -0.2, 3.0, 0.7];
        let orlicz = RiSpace::new(RiKind::Orlicz(YoungFunction::Power(2.0)), w.clone()).unwrap();
        let l2 = RiSpace::new(RiKind::Lp(2.0), w).unwrap();
        assert_relative_eq!(orlicz.norm(&f).unwrap(), l2.norm(&f).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn flat_young_function_is_reported() {
        let flat = OrliczYoung::from_table(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let s = RiSpace::new(RiKind::Orlicz(YoungFunction::Tabulated(flat)), prob(2)).unwrap();
        assert!(matches!(s.norm(&[1.0, 1.0]), Err(Error::GaugeUnbounded)));
    }

    #[test]
    fn fundamental_function_lp_duality() {
        let w = prob(10);
        for p in [1.5, 2.0, 3.0] {
            let a = RiSpace::new(RiKind::Lp(p), w.clone()).unwrap();
            let b = RiSpace::new(RiKind::Lp(conjugate_exponent(p)), w.clone()).unwrap();
            for delta in [0.1, 0.5, 0.9] {
                let fa = a.fundamental_function(delta).unwrap();
                let fb = b.fundamental_function(delta).unwrap();
                assert!(!fa.closed_form);
                assert!((fa.value * fb.value - delta).abs() < 1e-12);
            }
        }
        let one = RiSpace::new(RiKind::Lp(4.0), w).unwrap();
        assert_relative_eq!(one.fundamental_function(1.0).unwrap().value, 1.0, max_relative = 1e-14);
        assert!(matches!(one.fundamental_function(1.5), Err(Error::MeasureTooLarge { .. })));
    }

    #[test]
    fn fundamental_function_closed_form_flag() {
        let s = RiSpace::new(RiKind::Lp(2.0), prob(3)).unwrap();
        let f = s.fundamental_function(0.5).unwrap();
        assert!(f.closed_form);
        assert_relative_eq!(f.value, 0.5f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn gls_fundamental_function_matches_dense_grid() {
        let s = RiSpace::new(RiKind::Gls(PsiFunction::power(2.0).unwrap(), ExponentGrid::default()), prob(2)).unwrap();
        let oracle = log_grid(1.0 + 1e-9, 400.0, 400_000)
            .into_iter()
            .map(|p| 0.5f64.powf(1.0 / p) / p.sqrt())
            .fold(0.0, f64::max);
        let v = s.fundamental_function(0.5).unwrap();
        assert_relative_eq!(v.value, oracle, max_relative = 1e-8);
    }

    #[test]
    fn dual_geometry_examples() {
        let s = RiSpace::new(RiKind::Lp(2.0), prob(4)).unwrap();
        let one = s.clone().with_dual_family(vec![vec![1.0; 4]]).unwrap();
        let g = one.dual_geometry(false).unwrap();
        assert_eq!(g.diameter, 0.0);
        assert!(g.warnings.is_empty());
        let g = one.dual_geometry(true).unwrap();
        assert_relative_eq!(g.diameter, 2.0, max_relative = 1e-15);
        let bad = s.with_dual_family(vec![vec![3.0; 4]]).unwrap();
        assert_eq!(bad.dual_geometry(false).unwrap().warnings.len(), 1);
    }

    #[test]
    fn record_round_trip() {
        let r: RiRecord = serde_json::from_str(r#"{"kind": "orlicz", "young": {"kind": "exp-power", "m": 2}}"#).unwrap();
        assert!(r.build(prob(3)).is_ok());
        let r: RiRecord = serde_json::from_str(r#"{"kind": "lp", "p": null}"#).unwrap();
        assert_eq!(r.build(prob(2)).unwrap().norm(&[1.0, -4.0]).unwrap(), 4.0);
        assert!(RiSpace::new(RiKind::Lp(0.5), prob(2)).is_err());
    }
}
