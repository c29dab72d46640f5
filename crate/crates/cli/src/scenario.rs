//! Scenario schema, loading with overrides, and validation.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use glsfield::certify::Theorem;
use glsfield::entropy::SpaceRecord;
use glsfield::mc::CovarianceSource;
use glsfield::process::{CoefficientLaw, Kernel};
use glsfield::psi::{PsiFunction, PsiRecord};
use glsfield::ri::RiRecord;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<PsiRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ri: Option<RiRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tailbound: Option<TailBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed_norm: Option<MixedNormBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clt_check: Option<CltBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lacunary: Option<LacunaryBlock>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// File stem for the report and its tables; defaults to the command name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ProcessBlock {
    pub model: ProcessRecord,
    /// Rescale so that `sup_t ||ξ(t)||_{Gψ} = 1`.
    #[serde(default)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum ProcessRecord {
    Gaussian {
        kernel: Kernel,
        #[serde(default = "one")]
        scale: f64,
    },
    Covariance {
        matrix: Vec<Vec<f64>>,
    },
    /// `Σ_k c_k √2 sin(kπt)/k` with i.i.d. standardized coefficients.
    Bounded {
        terms: usize,
        law: CoefficientLaw,
    },
    /// Frequencies `2^k`, Rademacher signs.
    Lacunary {
        amplitudes: Vec<f64>,
    },
    Deterministic {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CertifyBlock {
    #[serde(default = "default_theorem")]
    pub theorem: Theorem,
    pub model: EntropyRecord,
    /// Upper integration limit for the integral theorems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<f64>,
    #[serde(default = "yes")]
    pub mean_zero: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_family: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum EntropyRecord {
    PowerLaw {
        kappa: f64,
        s: f64,
    },
    LogCorrected {
        s: f64,
        beta: f64,
    },
    /// Step tables of the declared space, under its own distance or under the
    /// natural distance of the declared process.
    Empirical {
        #[serde(default)]
        distance: DistanceSource,
        /// Monte Carlo replicas for natural distances; closed-form moments when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicas: Option<usize>,
        /// Distance for the ball function; defaults to `distance`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ball_distance: Option<DistanceSource>,
    },
    /// `L1` geometry of the declared dual family.
    DualFamily,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceSource {
    #[default]
    Space,
    Natural,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TailBlock {
    pub norm: f64,
    #[serde(default = "default_factor")]
    pub factor: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct EntropyBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default = "default_entropy_points")]
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default = "default_levels")]
    pub max_levels: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct MixedNormBlock {
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub dump_norms: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CltBlock {
    pub n: Vec<usize>,
    #[serde(default = "default_clt_replicas")]
    pub replicas: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum ProblemRecord {
    /// `cos(t x)` with `x ~ U[0, 1]` on a uniform grid of `[0, t-max]`.
    CosTx {
        #[serde(default = "default_mc_grid")]
        grid_points: usize,
        #[serde(default = "two_pi")]
        t_max: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct McBlock {
    pub problem: ProblemRecord,
    pub n: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_replicas")]
    pub limit_replicas: usize,
    #[serde(default)]
    pub covariance: CovarianceSource,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct LacunaryBlock {
    #[serde(default = "default_terms")]
    pub terms: usize,
    #[serde(default = "default_lacunary_grid")]
    pub grid_points: usize,
    /// Defaults to `a_k = 1/k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
    #[serde(default = "default_lacunary_n")]
    pub n: Vec<usize>,
    #[serde(default = "default_lacunary_replicas")]
    pub replicas: usize,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_theorem() -> Theorem {
    Theorem::EntropySeries
}
fn default_factor() -> f64 {
    20.0
}
fn default_points() -> usize {
    32
}
fn default_entropy_points() -> usize {
    24
}
fn default_levels() -> usize {
    32
}
fn default_replicas() -> usize {
    10_000
}
fn default_clt_replicas() -> usize {
    2000
}
fn default_mc_grid() -> usize {
    33
}
fn two_pi() -> f64 {
    2.0 * PI
}
fn default_delta() -> f64 {
    0.05
}
fn default_repetitions() -> usize {
    500
}
fn default_terms() -> usize {
    8
}
fn default_lacunary_grid() -> usize {
    256
}
fn default_lacunary_n() -> Vec<usize> {
    vec![1, 4, 16, 64]
}
fn default_lacunary_replicas() -> usize {
    1000
}

/// Commands that draw random numbers and therefore need a seed.
pub fn is_stochastic(command: &str, scenario: &Scenario) -> bool {
    match command {
        "mixed-norm" | "clt-check" | "mc-estimate" | "mc-coverage" | "demo-lacunary" => true,
        "certify" => matches!(
            scenario.certify.as_ref().map(|c| &c.model),
            Some(EntropyRecord::Empirical { distance: DistanceSource::Natural, replicas: Some(_), .. })
        ),
        _ => false,
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{assignment}` must look like key.path=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override key `{key}` has an empty segment");
    }
    let mut cursor = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| anyhow!("override key `{key}`: `{part}` is not a table"))?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Reads a scenario file and applies `key.path=value` overrides.
pub fn load(path: &Path, overrides: &[String]) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read scenario {}", path.display()))?;
    if overrides.is_empty() {
        return toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()));
    }
    let mut table: toml::Table = toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| anyhow!("{} (after overrides): {e}", path.display()))
}

fn require<T>(block: &Option<T>, name: &str, command: &str, out: &mut Vec<String>) {
    if block.is_none() {
        out.push(format!("command `{command}` needs a [{name}] block"));
    }
}

/// Schema and cross-reference diagnostics for running `command`; empty means runnable.
pub fn diagnostics(scenario: &Scenario, command: &str) -> Vec<String> {
    let mut out = Vec::new();
    if is_stochastic(command, scenario) && scenario.seed.is_none() {
        out.push(format!(
            "missing seed: command `{command}` is stochastic; set `seed` in the scenario, pass --seed or export GLSFIELD_SEED"
        ));
    }
    if let Some(space) = &scenario.space {
        if let Err(e) = space.build() {
            out.push(format!("[space]: {e}"));
        }
    }
    if let Some(psi) = &scenario.psi {
        if let Err(e) = PsiFunction::from_record(psi) {
            out.push(format!("[psi]: {e}"));
        }
    }
    if let Some(ri) = &scenario.ri {
        if let Err(e) = ri.build(vec![1.0]) {
            out.push(format!("[ri]: {e}"));
        }
    }
    if let Some(t) = scenario.threads {
        if t == 0 {
            out.push("threads must be at least 1".into());
        }
    }
    if let Some(c) = &scenario.certify {
        match c.model {
            EntropyRecord::PowerLaw { kappa, s } => {
                if !(kappa > 0.0 && kappa < 1.0 + s) {
                    out.push(format!(
                        "[certify.model] power-law needs 0 < kappa < 1 + s for a convergent series (kappa = {kappa}, s = {s})"
                    ));
                }
                if !(s >= 0.0) {
                    out.push(format!("[certify.model] power-law needs s >= 0 (s = {s})"));
                }
            }
            EntropyRecord::LogCorrected { s, beta } => {
                if !(beta > 1.0) {
                    out.push(format!("[certify.model] log-corrected needs beta > 1 for a convergent series (beta = {beta})"));
                }
                if !(s >= 0.0) {
                    out.push(format!("[certify.model] log-corrected needs s >= 0 (s = {s})"));
                }
            }
            EntropyRecord::Empirical { distance, ball_distance, .. } => {
                if scenario.space.is_none() {
                    out.push("[certify.model] empirical model needs a [space] block".into());
                }
                let natural = distance == DistanceSource::Natural || ball_distance == Some(DistanceSource::Natural);
                if natural && scenario.process.is_none() {
                    out.push("[certify.model] natural distance needs a [process] block".into());
                }
            }
            EntropyRecord::DualFamily => {
                if c.dual_family.is_none() {
                    out.push("[certify] dual-family model needs `dual-family`".into());
                }
                if scenario.ri.is_none() || scenario.space.is_none() {
                    out.push("[certify] dual-family model needs [ri] and [space] blocks".into());
                }
            }
        }
        let integral = matches!(c.theorem, Theorem::EntropyIntegral | Theorem::CltIntegral);
        let analytic = matches!(c.model, EntropyRecord::PowerLaw { .. } | EntropyRecord::LogCorrected { .. });
        if integral && analytic && c.d_max.is_none() {
            out.push("[certify] integral theorems with an analytic model need `d-max`".into());
        }
    }
    if let Some(p) = &scenario.process {
        if scenario.space.is_none() {
            out.push("[process] needs a [space] block for its grid".into());
        }
        if let ProcessRecord::Bounded { terms: 0, .. } = p.model {
            out.push("[process.model] bounded field needs terms >= 1".into());
        }
    }
    if let Some(m) = &scenario.mc {
        if !(m.delta > 0.0 && m.delta <= 0.5) {
            out.push(format!("[mc] delta must lie in (0, 0.5] (delta = {})", m.delta));
        }
        if m.limit_replicas < 1000 {
            out.push(format!("[mc] limit-replicas must be at least 1000 (got {})", m.limit_replicas));
        }
    }
    match command {
        "validate" => {
            let stochastic = scenario.mixed_norm.is_some()
                || scenario.clt_check.is_some()
                || scenario.mc.is_some()
                || scenario.lacunary.is_some()
                || is_stochastic("certify", scenario);
            if stochastic && scenario.seed.is_none() {
                out.push("missing seed: the scenario declares stochastic blocks; set `seed`, pass --seed or export GLSFIELD_SEED".into());
            }
        }
        "certify" => {
            require(&scenario.certify, "certify", command, &mut out);
            require(&scenario.psi, "psi", command, &mut out);
        }
        "tailbound" => {
            require(&scenario.tailbound, "tailbound", command, &mut out);
            require(&scenario.psi, "psi", command, &mut out);
        }
        "entropy" => {
            require(&scenario.space, "space", command, &mut out);
        }
        "mixed-norm" => {
            require(&scenario.process, "process", command, &mut out);
            require(&scenario.ri, "ri", command, &mut out);
            require(&scenario.psi, "psi", command, &mut out);
        }
        "clt-check" => {
            require(&scenario.process, "process", command, &mut out);
            require(&scenario.ri, "ri", command, &mut out);
            require(&scenario.clt_check, "clt-check", command, &mut out);
        }
        "mc-estimate" | "mc-coverage" => {
            require(&scenario.mc, "mc", command, &mut out);
        }
        "demo-lacunary" => {}
        other => out.push(format!("unknown command `{other}`")),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Scenario {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn overrides_follow_dotted_paths() {
        let mut t: toml::Table = toml::from_str("[certify.model]\nkind = \"power-law\"\nkappa = 1.0\ns = 1.0\n").unwrap();
        apply_override(&mut t, "certify.model.kappa=0.5").unwrap();
        apply_override(&mut t, "seed=9").unwrap();
        apply_override(&mut t, "output.name=run").unwrap();
        let s: Scenario = toml::Value::Table(t).try_into().unwrap();
        assert_eq!(s.seed, Some(9));
        assert_eq!(s.output.unwrap().name.as_deref(), Some("run"));
        assert!(matches!(s.certify.unwrap().model, EntropyRecord::PowerLaw { kappa, .. } if kappa == 0.5));
        assert!(apply_override(&mut toml::Table::new(), "novalue").is_err());
    }

    #[test]
    fn convergence_constraints_are_diagnosed() {
        let bad = parse(
            "[psi]\nkind = \"power\"\nm = 2.0\n[certify.model]\nkind = \"power-law\"\nkappa = 2.5\ns = 1.0\n",
        );
        let d = diagnostics(&bad, "certify");
        assert_eq!(d.len(), 1);
        assert!(d[0].contains("kappa < 1 + s"));
        let bad = parse("[psi]\nkind = \"power\"\nm = 2.0\n[certify.model]\nkind = \"log-corrected\"\ns = 1.0\nbeta = 1.0\n");
        assert!(diagnostics(&bad, "certify")[0].contains("beta > 1"));
        let ok = parse("[psi]\nkind = \"power\"\nm = 2.0\n[certify.model]\nkind = \"power-law\"\nkappa = 1.0\ns = 1.0\n");
        assert!(diagnostics(&ok, "certify").is_empty());
    }

    #[test]
    fn stochastic_commands_need_a_seed() {
        let s = parse("[mc]\nn = 100\n[mc.problem]\nkind = \"cos-tx\"\n");
        assert!(diagnostics(&s, "mc-estimate")[0].starts_with("missing seed"));
        assert!(toml::from_str::<Scenario>("bogus = 1\n").is_err());
    }
}
