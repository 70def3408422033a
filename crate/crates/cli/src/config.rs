//! Experiment configuration files (TOML).
//!
//! Required sections: `[space]`, `[weights]`, `[distribution]`, `[run]`
//! (with a mandatory `seed`). Optional: `[polynomial]`, `[deltas]`,
//! `[[targets]]`, `[mixing]`, `[output]`. Unknown keys are rejected.

use hyperorbit_core::delta::{DeltaRule, EpsRule, Side};
use hyperorbit_core::distributions::{DistributionSpec, TailKnot};
use hyperorbit_core::shift::{PolynomialSpec, SeriesKind, WeightRule};
use hyperorbit_core::{ScalarField, SpaceSpec, TruncatedVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceSpec,
    pub weights: WeightRule,
    pub distribution: DistributionConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub polynomial: Option<PolynomialConfig>,
    #[serde(default)]
    pub deltas: Option<DeltaConfig>,
    #[serde(default)]
    pub targets: Vec<TargetConfig>,
    #[serde(default)]
    pub mixing: Option<MixingConfig>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    Gaussian {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        variance: f64,
        #[serde(default)]
        field: ScalarField,
    },
    Uniform {
        bound: f64,
        #[serde(default)]
        field: ScalarField,
    },
    /// The annulus density built from `[deltas]`.
    Annulus {
        #[serde(default)]
        field: ScalarField,
    },
    /// `knots = [[t, P(|X| ≥ t)], …]`
    CustomTail {
        knots: Vec<[f64; 2]>,
        #[serde(default)]
        field: ScalarField,
    },
}

fn one() -> f64 {
    1.0
}

impl DistributionConfig {
    pub fn field(&self) -> ScalarField {
        match self {
            DistributionConfig::Gaussian { field, .. }
            | DistributionConfig::Uniform { field, .. }
            | DistributionConfig::Annulus { field }
            | DistributionConfig::CustomTail { field, .. } => *field,
        }
    }

    /// The distribution, except for the annulus density which needs thresholds.
    pub fn build_direct(&self) -> hyperorbit_core::Result<Option<DistributionSpec>> {
        Ok(Some(match self {
            DistributionConfig::Gaussian { mean, variance, field } => DistributionSpec::gaussian(*mean, *variance, *field)?,
            DistributionConfig::Uniform { bound, field } => DistributionSpec::uniform(*bound, *field)?,
            DistributionConfig::CustomTail { knots, field } => DistributionSpec::custom_tail(
                knots.iter().map(|[t, prob]| TailKnot { t: *t, prob: *prob }).collect(),
                *field,
            )?,
            DistributionConfig::Annulus { .. } => return Ok(None),
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    #[default]
    Unilateral,
    Bilateral,
    Polynomial,
    Fhc,
}

/// Which series condition gates the `u_n` family before sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    #[default]
    SqrtLog,
    Plain,
    Waived,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub family: FamilyKind,
    #[serde(default)]
    pub gate: GateKind,
    /// Series, tail-sum and search horizon.
    #[serde(default = "default_horizon")]
    pub horizon: i64,
    /// Remainder tolerance for series and tail-sum certificates.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_kinds")]
    pub series_kinds: Vec<SeriesKind>,
    #[serde(default = "default_window")]
    pub n_window: i64,
    #[serde(default = "default_orbit")]
    pub n_orbit: i64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Independent vectors for space averages and direct ball estimates.
    #[serde(default = "default_space_reps")]
    pub space_reps: usize,
    /// Monte-Carlo replicas for the windowed ball probability.
    #[serde(default = "default_space_reps")]
    pub mc_reps: usize,
    /// FHC blocks.
    #[serde(default = "default_blocks")]
    pub blocks: u32,
}

fn default_horizon() -> i64 {
    2000
}
fn default_tol() -> f64 {
    1e-2
}
fn default_kinds() -> Vec<SeriesKind> {
    vec![SeriesKind::Plain, SeriesKind::SqrtLog]
}
fn default_window() -> i64 {
    60
}
fn default_orbit() -> i64 {
    1000
}
fn default_replicas() -> usize {
    8
}
fn default_space_reps() -> usize {
    20_000
}
fn default_blocks() -> u32 {
    8
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialConfig {
    /// `[a_1, a_2, …]` of `P(z) = Σ a_k z^k`, with `a_1 ≠ 0`.
    pub coefficients: Vec<f64>,
    #[serde(default = "default_poly_n")]
    pub n_max: usize,
}

fn default_poly_n() -> usize {
    20
}

impl PolynomialConfig {
    pub fn spec(&self) -> hyperorbit_core::Result<PolynomialSpec> {
        PolynomialSpec::new(self.coefficients.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeltaConfig {
    User {
        #[serde(default)]
        integer_indexed: bool,
        rule: DeltaRule,
    },
    Builder {
        eps: EpsRule,
        #[serde(default = "plus")]
        side: Side,
        horizon: i64,
    },
    Symmetrized {
        plus: EpsRule,
        minus: EpsRule,
        horizon: i64,
    },
}

fn plus() -> Side {
    Side::Plus
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// Real parts of the center's coefficients starting at index `lo`.
    pub center: Vec<f64>,
    #[serde(default)]
    pub imag: Vec<f64>,
    #[serde(default)]
    pub lo: i64,
    pub radius: f64,
}

impl TargetConfig {
    pub fn center_vector(&self) -> hyperorbit_core::Result<TruncatedVector> {
        let len = self.center.len().max(self.imag.len());
        let coeffs = (0..len)
            .map(|i| {
                hyperorbit_core::Scalar::new(
                    self.center.get(i).copied().unwrap_or(0.0),
                    self.imag.get(i).copied().unwrap_or(0.0),
                )
            })
            .collect();
        TruncatedVector::new(self.lo, coeffs)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MixingConfig {
    /// Index into `[[targets]]` for `A` (the event on `T^n v`).
    #[serde(default)]
    pub a: usize,
    /// Index into `[[targets]]` for `B` (the event on `v`).
    #[serde(default)]
    pub b: usize,
    pub n_grid: Vec<i64>,
    pub reps: usize,
    pub window: i64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of a `[section]` or `[[section]]` header.
pub fn section_line(text: &str, section: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim();
        t == format!("[{section}]") || t == format!("[[{section}]]")
    })
    .map(|i| i + 1)
}

fn at(text: &str, section: &str, msg: impl std::fmt::Display) -> ConfigError {
    match section_line(text, section) {
        Some(line) => ConfigError(format!("line {line} [{section}]: {msg}")),
        None => ConfigError(format!("[{section}]: {msg}")),
    }
}

/// Parses and validates a configuration. Parse errors carry the toml
/// crate's line/column report; semantic errors name the section's line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
    let r = &cfg.run;
    if r.horizon < 16 {
        return Err(at(text, "run", format!("horizon must be ≥ 16, got {}", r.horizon)));
    }
    if !(r.tol > 0.0) {
        return Err(at(text, "run", "tol must be positive"));
    }
    if r.n_window < 1 || r.n_orbit < 0 || r.replicas == 0 || r.space_reps == 0 || r.mc_reps == 0 || r.blocks == 0 {
        return Err(at(text, "run", "window, replica and block counts must be positive"));
    }
    if r.series_kinds.is_empty() {
        return Err(at(text, "run", "series_kinds must not be empty"));
    }
    if r.family == FamilyKind::Polynomial && cfg.polynomial.is_none() {
        return Err(at(text, "run", "family = \"polynomial\" needs a [polynomial] section"));
    }
    if let Some(p) = &cfg.polynomial {
        p.spec().map_err(|e| at(text, "polynomial", e))?;
    }
    if matches!(cfg.distribution, DistributionConfig::Annulus { .. }) && cfg.deltas.is_none() {
        return Err(at(text, "distribution", "family = \"annulus\" needs a [deltas] section"));
    }
    cfg.distribution.build_direct().map_err(|e| at(text, "distribution", e))?;
    if let Some(d) = &cfg.deltas {
        match d {
            DeltaConfig::User { rule, integer_indexed } => {
                hyperorbit_core::delta::DeltaSequence::user(rule.clone(), *integer_indexed).map_err(|e| at(text, "deltas", e))?;
            }
            DeltaConfig::Builder { horizon, .. } | DeltaConfig::Symmetrized { horizon, .. } if *horizon < 1 => {
                return Err(at(text, "deltas", "builder horizon must be ≥ 1"));
            }
            _ => {}
        }
    }
    for (i, t) in cfg.targets.iter().enumerate() {
        if !(t.radius > 0.0) {
            return Err(at(text, "targets", format!("target {i}: radius must be positive")));
        }
        t.center_vector().map_err(|e| at(text, "targets", format!("target {i}: {e}")))?;
    }
    if let Some(m) = &cfg.mixing {
        if m.a >= cfg.targets.len() || m.b >= cfg.targets.len() {
            return Err(at(text, "mixing", "a and b must index [[targets]] entries"));
        }
        if m.reps < 2 || m.window < 1 || m.n_grid.is_empty() || m.n_grid.iter().any(|n| *n < 0) {
            return Err(at(text, "mixing", "need reps ≥ 2, window ≥ 1 and a non-empty grid of n ≥ 0"));
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[space]
family = "lp"
p = 2.0

[weights]
rule = "constant"
value = 2.0

[distribution]
family = "gaussian"

[run]
seed = 7
"#;

    #[test]
    fn minimal_config_is_valid() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.space, SpaceSpec::lp(2.0).unwrap());
        assert_eq!(cfg.weights, WeightRule::Constant { value: 2.0 });
        assert_eq!(cfg.run.seed, 7);
        assert_eq!(cfg.run.family, FamilyKind::Unilateral);
    }

    #[test]
    fn p_below_one_is_rejected() {
        let err = parse_config(&MINIMAL.replace("p = 2.0", "p = 0.5")).unwrap_err();
        assert!(err.0.contains("line"), "{err}");
    }

    #[test]
    fn missing_seed_is_rejected() {
        let err = parse_config(&MINIMAL.replace("seed = 7", "")).unwrap_err();
        assert!(err.0.contains("seed"), "{err}");
        assert!(err.0.contains("line"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config(&MINIMAL.replace("seed = 7", "seed = 7\nsed = 3")).is_err());
        assert!(parse_config(&format!("{MINIMAL}\n[extra]\nx = 1\n")).is_err());
    }

    #[test]
    fn semantic_errors_name_the_section_line() {
        let text = format!("{MINIMAL}\n[[targets]]\ncenter = [1.0]\nradius = -1.0\n");
        let err = parse_config(&text).unwrap_err();
        let line = section_line(&text, "targets").unwrap();
        assert!(err.0.starts_with(&format!("line {line} [targets]")), "{err}");
    }

    #[test]
    fn nested_delta_rules_parse() {
        let text = format!(
            "{}\n[deltas]\nsource = \"user\"\n[deltas.rule]\nrule = \"linear\"\na = 1.0\nb = 1.0\n",
            MINIMAL.replace("family = \"gaussian\"", "family = \"annulus\"")
        );
        let cfg = parse_config(&text).unwrap();
        assert!(matches!(cfg.deltas, Some(DeltaConfig::User { rule: DeltaRule::Linear { .. }, .. })));
        let builder = format!("{MINIMAL}\n[deltas]\nsource = \"builder\"\nhorizon = 20\n[deltas.eps]\nrule = \"geometric\"\nscale = 1.0\nratio = 0.5\n");
        assert!(matches!(parse_config(&builder).unwrap().deltas, Some(DeltaConfig::Builder { side: Side::Plus, .. })));
    }

    #[test]
    fn annulus_without_deltas_is_rejected() {
        let err = parse_config(&MINIMAL.replace("family = \"gaussian\"", "family = \"annulus\"")).unwrap_err();
        assert!(err.0.contains("[distribution]"));
    }
}
