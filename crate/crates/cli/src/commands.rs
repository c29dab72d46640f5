//! Command implementations. Each returns an [`Outcome`] that the caller
//! turns into a report and plot tables.

use anyhow::{anyhow, bail, Context, Result};
use glsfield::certify::{
    certify_integral, certify_series, clt_certify_integral, clt_certify_series, clt_psi, CertificateStatus, CertifyOptions,
    EntropyModel, Theorem,
};
use glsfield::convex::TailBoundCurve;
use glsfield::entropy::{build_net_hierarchy, MetricMeasureSpace};
use glsfield::exec::Execution;
use glsfield::mc::{confidence_region, coverage_experiment, ParametricIntegralProblem, RegionOptions};
use glsfield::numeric::{linear_grid, log_grid};
use glsfield::process::{
    clt_empirical_check, empirical_mixed_norm, natural_distance_matrix, sup_pointwise_norm, CltCheck, MomentSource, ProcessModel,
};
use glsfield::psi::PsiFunction;
use glsfield::ri::{RiKind, RiRecord, RiSpace};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::scenario::{DistanceSource, EntropyRecord, LacunaryBlock, ProblemRecord, ProcessRecord, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Certified,
    Diverged,
    ResolutionLimited,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Success => "success",
            Status::Certified => "certified",
            Status::Diverged => "diverged",
            Status::ResolutionLimited => "resolution-limited",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success | Status::Certified => 0,
            Status::Diverged => 2,
            Status::ResolutionLimited => 3,
        }
    }
}

/// Numeric text table; one row per line under a `#` header.
pub struct Table {
    pub name: &'static str,
    pub header: String,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn pairs(name: &'static str, header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self { name, header: header.to_string(), rows: rows.into_iter().map(|(a, b)| vec![a, b]).collect() }
    }

    fn column(name: &'static str, header: &str, values: &[f64]) -> Self {
        Self { name, header: header.to_string(), rows: values.iter().map(|&v| vec![v]).collect() }
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {}\n", self.header);
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub notes: Vec<String>,
    pub tables: Vec<Table>,
}

impl Outcome {
    fn success(result: Value) -> Self {
        Self { status: Status::Success, result, notes: Vec::new(), tables: Vec::new() }
    }
}

const EXEC: Execution = Execution::Parallel;

fn psi_of(s: &Scenario) -> Result<PsiFunction> {
    let record = s.psi.as_ref().ok_or_else(|| anyhow!("missing [psi] block"))?;
    Ok(PsiFunction::from_record(record)?)
}

fn space_of(s: &Scenario) -> Result<MetricMeasureSpace> {
    let record = s.space.as_ref().ok_or_else(|| anyhow!("missing [space] block"))?;
    Ok(record.build()?)
}

fn seed_of(s: &Scenario) -> Result<u64> {
    s.seed.ok_or_else(|| anyhow!("missing seed"))
}

fn ri_of(s: &Scenario, weights: Vec<f64>) -> Result<RiSpace> {
    let record = s.ri.as_ref().ok_or_else(|| anyhow!("missing [ri] block"))?;
    Ok(record.build(weights)?)
}

/// First coordinate of every point of the declared space.
fn coordinates(space: &MetricMeasureSpace) -> Result<Vec<f64>> {
    let coords = space
        .coords()
        .ok_or_else(|| anyhow!("[process] needs a space declared by `points` or `grid`, not by distances"))?;
    Ok(coords.iter().map(|c| c[0]).collect())
}

fn process_of(s: &Scenario, space: &MetricMeasureSpace, psi: Option<&PsiFunction>) -> Result<ProcessModel> {
    let block = s.process.as_ref().ok_or_else(|| anyhow!("missing [process] block"))?;
    let model = match &block.model {
        ProcessRecord::Gaussian { kernel, scale } => ProcessModel::gaussian_kernel(&coordinates(space)?, *kernel, *scale)?,
        ProcessRecord::Covariance { matrix } => {
            let m = matrix.len();
            if m != space.len() || matrix.iter().any(|r| r.len() != m) {
                bail!("[process.model] covariance must be {0} x {0}", space.len());
            }
            ProcessModel::gaussian(nalgebra_matrix(matrix))?
        }
        ProcessRecord::Bounded { terms, law } => ProcessModel::smooth_sine(&coordinates(space)?, *terms, *law)?,
        ProcessRecord::Lacunary { amplitudes } => ProcessModel::lacunary_dyadic(&coordinates(space)?, amplitudes)?,
        ProcessRecord::Deterministic { values } => {
            if values.len() != space.len() {
                bail!("[process.model] deterministic values need {} entries, got {}", space.len(), values.len());
            }
            ProcessModel::deterministic(values.clone())
        }
    };
    if !block.normalize {
        return Ok(model);
    }
    let psi = psi.ok_or_else(|| anyhow!("normalizing a process needs a [psi] block"))?;
    let sup = sup_pointwise_norm(&model, psi).context("normalizing the process")?;
    if sup <= 0.0 {
        bail!("cannot normalize a process whose pointwise norms all vanish");
    }
    Ok(model.scaled(1.0 / sup))
}

fn nalgebra_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let m = rows.len();
    DMatrix::from_fn(m, m, |i, j| rows[i][j])
}

fn certificate_status(status: CertificateStatus) -> Status {
    match status {
        CertificateStatus::Certified => Status::Certified,
        CertificateStatus::Diverged => Status::Diverged,
        CertificateStatus::ResolutionLimited => Status::ResolutionLimited,
    }
}

pub fn certify(s: &Scenario) -> Result<Outcome> {
    let block = s.certify.as_ref().ok_or_else(|| anyhow!("missing [certify] block"))?;
    let psi = psi_of(s)?;
    let clt = matches!(block.theorem, Theorem::CltSeries | Theorem::CltIntegral);
    let opts = CertifyOptions { exec: EXEC, ..CertifyOptions::default() };
    let mut notes = Vec::new();
    let (model, diameter) = match &block.model {
        EntropyRecord::PowerLaw { kappa, s } => (EntropyModel::power_law(*kappa, *s)?, None),
        EntropyRecord::LogCorrected { s, beta } => (EntropyModel::log_corrected(*s, *beta)?, None),
        EntropyRecord::Empirical { distance, replicas, ball_distance } => {
            let space = space_of(s)?;
            let natural = if *distance == DistanceSource::Natural || *ball_distance == Some(DistanceSource::Natural) {
                let process = process_of(s, &space, Some(&psi))?;
                let psi_d = if clt { clt_psi(&psi, block.mean_zero)?.0 } else { psi.clone() };
                let source = match replicas {
                    Some(r) => MomentSource::MonteCarlo { replicas: *r, seed: seed_of(s)? },
                    None => MomentSource::Oracle,
                };
                let d = natural_distance_matrix(&process, &psi_d, source, EXEC)?;
                notes.push(if clt {
                    "natural distances use the increment norm in the Rosenthal-transformed space".to_string()
                } else {
                    "natural distances use the declared process and psi".to_string()
                });
                Some(MetricMeasureSpace::from_matrix(&d, space.weights().to_vec())?)
            } else {
                None
            };
            let pick = |source: DistanceSource| match source {
                DistanceSource::Space => &space,
                DistanceSource::Natural => natural.as_ref().expect("built above"),
            };
            let n_space = pick(*distance);
            let r_space = pick(ball_distance.unwrap_or(*distance));
            let model = if std::ptr::eq(n_space, r_space) {
                EntropyModel::empirical(n_space)?
            } else {
                notes.push("ball function and covering numbers use different distances".into());
                EntropyModel::empirical_split(n_space, r_space, EXEC)?
            };
            (model, Some(n_space.diameter()))
        }
        EntropyRecord::DualFamily => {
            let space = space_of(s)?;
            let family = block.dual_family.clone().ok_or_else(|| anyhow!("[certify] needs `dual-family`"))?;
            let ri = ri_of(s, space.weights().to_vec())?.with_dual_family(family)?;
            let geometry = ri.dual_geometry(false)?;
            notes.extend(geometry.warnings.iter().cloned());
            let (model, d) = EntropyModel::from_dual_geometry(&geometry)?;
            (model, Some(d))
        }
    };
    let d_max = || -> Result<f64> {
        block
            .d_max
            .or(diameter)
            .ok_or_else(|| anyhow!("[certify] integral theorems with an analytic model need `d-max`"))
    };
    let report = match block.theorem {
        Theorem::EntropySeries => certify_series(&model, &psi, &opts)?,
        Theorem::EntropyIntegral => certify_integral(&model, d_max()?, &psi, &opts)?,
        Theorem::CltSeries => clt_certify_series(&model, &psi, block.mean_zero, &opts)?,
        Theorem::CltIntegral => clt_certify_integral(&model, d_max()?, &psi, block.mean_zero, &opts)?,
    };
    if report.mixed_norm_bound.is_some() {
        notes.push("the mixed-norm bound assumes sup_t ||xi(t)|| = 1 in the declared psi space".into());
    }
    if model.is_empirical() {
        notes.push("finite space: the series is exact but only resolves scales above the smallest distance".into());
    }
    let mut tables = Vec::new();
    if let Some(curve) = &report.tail_curve {
        tables.push(Table::pairs("tail", "x tail_bound", curve.iter().copied()));
    }
    notes.extend(report.notes.iter().cloned());
    Ok(Outcome { status: certificate_status(report.status), result: serde_json::to_value(&report)?, notes, tables })
}

pub fn tailbound(s: &Scenario) -> Result<Outcome> {
    let block = s.tailbound.as_ref().ok_or_else(|| anyhow!("missing [tailbound] block"))?;
    let curve = TailBoundCurve::new(psi_of(s)?, block.norm)?;
    let rows = curve.table(block.factor, block.points)?;
    let result = json!({ "norm": block.norm, "threshold": curve.threshold(), "rows": rows });
    let mut out = Outcome::success(result);
    out.tables.push(Table::pairs("tail", "x tail_bound", rows));
    Ok(out)
}

pub fn entropy(s: &Scenario) -> Result<Outcome> {
    let space = space_of(s)?;
    let block = s.entropy.clone().unwrap_or(crate::scenario::EntropyBlock {
        eps: None,
        points: 24,
        q: None,
        max_levels: 32,
    });
    let diameter = space.diameter();
    let eps = match &block.eps {
        Some(e) => e.clone(),
        None if diameter > 0.0 => {
            let lo = space.resolution().min(diameter).max(diameter * 1e-3);
            log_grid(lo, diameter, block.points.max(2))
        }
        None => vec![0.0],
    };
    let rows: Vec<Value> = eps
        .iter()
        .map(|&e| {
            let c = space.covering_number(e);
            json!({ "eps": e, "upper": c.upper, "lower": c.lower, "ball": space.ball_function(e) })
        })
        .collect();
    let mut result = json!({
        "points": space.len(),
        "diameter": diameter,
        "resolution": space.resolution(),
        "rows": rows,
    });
    if let Some(q) = block.q {
        let nets = build_net_hierarchy(&space, q, block.max_levels)?;
        let levels: Vec<Value> = nets
            .levels
            .iter()
            .map(|l| json!({ "radius": l.radius, "centers": l.centers.len(), "covering_here": l.covering_here, "covering_next": l.covering_next }))
            .collect();
        result["nets"] = json!({
            "q": nets.q,
            "radius0": nets.radius0,
            "resolution_limited": nets.resolution_limited,
            "worst_projection_ratio": nets.worst_projection_ratio(&space),
            "levels": levels,
        });
    }
    let mut out = Outcome::success(result);
    out.tables.push(Table::pairs("covering", "eps covering_upper", eps.iter().map(|&e| (e, space.covering_number(e).upper as f64))));
    out.tables.push(Table::pairs("ball", "delta ball_function", eps.iter().map(|&e| (e, space.ball_function(e)))));
    Ok(out)
}

pub fn mixed_norm(s: &Scenario) -> Result<Outcome> {
    let space = space_of(s)?;
    let psi = psi_of(s)?;
    let process = process_of(s, &space, Some(&psi))?;
    let ri = ri_of(s, space.weights().to_vec())?;
    let replicas = s.mixed_norm.as_ref().map_or(10_000, |b| b.replicas);
    let est = empirical_mixed_norm(&process, &ri, &psi, replicas, seed_of(s)?, EXEC)?;
    let mut out = Outcome::success(serde_json::to_value(&est)?);
    out.notes.push(format!("empirical moments used up to p = ln(replicas) = {:.3}", est.p_cap));
    if s.mixed_norm.as_ref().is_some_and(|b| b.dump_norms) {
        out.tables.push(Table::column("norms", "replica_norm", &est.norms));
    }
    Ok(out)
}

fn clt_outcome(check: CltCheck) -> Result<Outcome> {
    let table = Table::pairs("ks", "n ks_distance", check.rows.iter().map(|r| (r.n as f64, r.ks_distance)));
    let mut out = Outcome::success(serde_json::to_value(&check)?);
    out.tables.push(table);
    out.notes.push("the Gaussian limit is checked only through finite norms of its simulated replicas".into());
    Ok(out)
}

pub fn clt_check(s: &Scenario) -> Result<Outcome> {
    let space = space_of(s)?;
    let process = process_of(s, &space, s.psi.as_ref().map(PsiFunction::from_record).transpose()?.as_ref())?;
    let ri = ri_of(s, space.weights().to_vec())?;
    let block = s.clt_check.as_ref().ok_or_else(|| anyhow!("missing [clt-check] block"))?;
    clt_outcome(clt_empirical_check(&process, &ri, &block.n, block.replicas, seed_of(s)?, EXEC)?)
}

fn problem_of(s: &Scenario) -> Result<(ParametricIntegralProblem, RiSpace)> {
    let block = s.mc.as_ref().ok_or_else(|| anyhow!("missing [mc] block"))?;
    let problem = match &block.problem {
        ProblemRecord::CosTx { grid_points, t_max } => ParametricIntegralProblem::cos_tx(linear_grid(0.0, *t_max, *grid_points))?,
    };
    let m = problem.grid().len();
    let weights = vec![1.0 / m as f64; m];
    let ri = match &s.ri {
        Some(r) => r.build(weights)?,
        None => RiRecord::Lp { p: Some(2.0) }.build(weights)?,
    };
    Ok((problem, ri))
}

fn region_options(s: &Scenario) -> RegionOptions {
    let block = s.mc.as_ref().expect("checked by problem_of");
    RegionOptions { limit_replicas: block.limit_replicas, covariance: block.covariance, exec: EXEC }
}

const MC_NOTE: &str = "u0 comes from simulating the Gaussian limit; validity at finite n is not asserted";

pub fn mc_estimate(s: &Scenario) -> Result<Outcome> {
    let (problem, ri) = problem_of(s)?;
    let block = s.mc.as_ref().expect("checked by problem_of");
    let region = confidence_region(&problem, block.n, &ri, block.delta, seed_of(s)?, None, &region_options(s))?;
    let mut result = json!({ "t": problem.grid(), "region": region });
    if let Some(truth) = problem.truth() {
        let diff: Vec<f64> = truth.iter().zip(&region.estimate).map(|(a, b)| a - b).collect();
        result["truth"] = json!(truth);
        result["error_norm"] = json!(ri.norm(&diff)?);
        result["covered"] = json!(region.contains(truth, &ri)?);
    }
    let table = Table::pairs("estimate", "t estimate", problem.grid().iter().copied().zip(region.estimate.iter().copied()));
    let mut out = Outcome::success(result);
    out.notes.extend(region.warnings.iter().cloned());
    out.notes.push(MC_NOTE.into());
    out.tables.push(table);
    Ok(out)
}

pub fn mc_coverage(s: &Scenario) -> Result<Outcome> {
    let (problem, ri) = problem_of(s)?;
    let block = s.mc.as_ref().expect("checked by problem_of");
    let cov = coverage_experiment(&problem, block.n, &ri, block.delta, block.repetitions, seed_of(s)?, &region_options(s))?;
    let mut out = Outcome::success(serde_json::to_value(&cov)?);
    if block.n < 100 {
        out.notes.push(format!("n = {} is small for the Gaussian approximation; coverage is reported without a verdict", block.n));
    }
    out.notes.push(MC_NOTE.into());
    Ok(out)
}

pub fn demo_lacunary(s: &Scenario) -> Result<Outcome> {
    let block = s.lacunary.clone().unwrap_or(LacunaryBlock {
        terms: 8,
        grid_points: 256,
        amplitudes: None,
        n: vec![1, 4, 16, 64],
        replicas: 1000,
    });
    let m = block.grid_points;
    let coords: Vec<f64> = (0..m).map(|i| 2.0 * std::f64::consts::PI * i as f64 / m as f64).collect();
    let amplitudes = block.amplitudes.clone().unwrap_or_else(|| (1..=block.terms).map(|k| 1.0 / k as f64).collect());
    let process = ProcessModel::lacunary_dyadic(&coords, &amplitudes)?;
    let weights = vec![1.0 / m as f64; m];
    let ri = match &s.ri {
        Some(r) => r.build(weights)?,
        None => RiSpace::new(RiKind::Lp(f64::INFINITY), weights)?,
    };
    let mut out = clt_outcome(clt_empirical_check(&process, &ri, &block.n, block.replicas, seed_of(s)?, EXEC)?)?;
    out.notes.push(
        "demonstration only: random lacunary trigonometric series with frequencies 2^k and Rademacher signs; distances are reported without a verdict"
            .into(),
    );
    Ok(out)
}

pub fn run(command: &str, s: &Scenario) -> Result<Outcome> {
    match command {
        "certify" => certify(s),
        "tailbound" => tailbound(s),
        "entropy" => entropy(s),
        "mixed-norm" => mixed_norm(s),
        "clt-check" => clt_check(s),
        "mc-estimate" => mc_estimate(s),
        "mc-coverage" => mc_coverage(s),
        "demo-lacunary" => demo_lacunary(s),
        other => Err(anyhow!("unknown command `{other}`")),
    }
}
