//! Pipeline wiring shared by the commands, certificates, manifests and
//! exit codes.

use crate::config::{parse_config, DeltaConfig, DistributionConfig, ExperimentConfig, FamilyKind, GateKind};
use hyperorbit_core::delta::{build_delta, symmetrize_delta, DeltaSequence, Side, StaircaseRecord};
use hyperorbit_core::distributions::{build_annulus_density, DistributionSpec};
use hyperorbit_core::export::{svg_line_plot, Series, Table};
use hyperorbit_core::fhc::{assemble, FhcConstruction, FhcOptions};
use hyperorbit_core::random_vectors::{CertificateGate, UFamily};
use hyperorbit_core::shift::{check_series_condition, SeriesKind, WeightSequence};
use hyperorbit_core::{Error, SpaceSpec, Verdict};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    DensityCheck,
    SeriesCheck,
    DeltaBuild,
    Sample,
    LowerDensity,
    Mixing,
    BallBound,
    FhcBuild,
    PolyBasis,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DensityCheck => "density-check",
            Command::SeriesCheck => "series-check",
            Command::DeltaBuild => "delta-build",
            Command::Sample => "sample",
            Command::LowerDensity => "lower-density",
            Command::Mixing => "mixing",
            Command::BallBound => "ball-bound",
            Command::FhcBuild => "fhc-build",
            Command::PolyBasis => "poly-basis",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub plot: bool,
    pub seed_override: Option<u64>,
    pub horizon: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(String),
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Runtime(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertRecord {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub certificates: Vec<CertRecord>,
    pub failing: Vec<String>,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    pub values: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

impl RunOutcome {
    /// 0 when every certificate passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.manifest.failing.is_empty() {
            0
        } else {
            1
        }
    }
}

/// Per-run state handed to the commands.
pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    pub horizon: i64,
    pub out: PathBuf,
    pub plot: bool,
    certificates: Vec<CertRecord>,
    outputs: Vec<String>,
    notes: Vec<String>,
    values: serde_json::Map<String, serde_json::Value>,
}

/// Stops a command after a failing prerequisite certificate.
pub struct Halt;

pub type Step<T> = Result<std::result::Result<T, Halt>, RunError>;

impl Ctx {
    pub fn certify(&mut self, name: &str, verdict: Verdict, detail: impl Into<String>) {
        self.certificates.push(CertRecord { name: name.into(), verdict, detail: detail.into() });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn value(&mut self, key: &str, v: impl Serialize) {
        self.values.insert(key.into(), serde_json::to_value(v).unwrap_or(serde_json::Value::Null));
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> Result<(), RunError> {
        table.write(&self.out.join(name))?;
        self.outputs.push(name.into());
        Ok(())
    }

    pub fn write_plot(&mut self, name: &str, title: &str, x: &str, y: &str, series: &[Series]) -> Result<(), RunError> {
        if self.plot {
            std::fs::write(self.out.join(name), svg_line_plot(title, x, y, series)).map_err(Error::from)?;
            self.outputs.push(name.into());
        }
        Ok(())
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.cfg.space
    }

    pub fn bilateral(&self) -> bool {
        self.cfg.run.family == FamilyKind::Bilateral
    }

    pub fn weights(&self) -> Result<WeightSequence, RunError> {
        WeightSequence::new(self.cfg.weights.clone(), self.bilateral()).map_err(|e| RunError::Config(format!("[weights]: {e}")))
    }

    /// Runs the configured series check and records it as `family_gate`.
    fn gate(&mut self, w: &WeightSequence) -> Step<CertificateGate> {
        let kind = match self.cfg.run.gate {
            GateKind::Waived => {
                self.note("series-condition gate waived by configuration");
                return Ok(Ok(CertificateGate::Waived));
            }
            GateKind::Plain => SeriesKind::Plain,
            GateKind::SqrtLog => SeriesKind::SqrtLog,
        };
        let cert = check_series_condition(self.space(), w, kind, self.horizon, self.cfg.run.tol)?;
        let detail = format!("{kind:?} series at horizon {}: {}", self.horizon, cert.witness.clone().unwrap_or_default());
        self.certify("family_gate", cert.verdict, detail);
        if cert.verdict == Verdict::Fail {
            return Ok(Err(Halt));
        }
        Ok(Ok(CertificateGate::Checked(cert.verdict)))
    }

    pub fn fhc(&mut self, w: &WeightSequence) -> Result<FhcConstruction, RunError> {
        Ok(assemble(self.space(), w, self.cfg.run.blocks, FhcOptions::default())?)
    }

    /// The `u_n` family of `[run] family`, gated by its series certificate.
    pub fn family(&mut self) -> Step<UFamily> {
        let w = self.weights()?;
        if self.cfg.run.family == FamilyKind::Fhc {
            let c = self.fhc(&w)?;
            let verdict = if c.all_hold() { Verdict::Pass } else { Verdict::Fail };
            self.certify("fhc_ledger", verdict, format!("{} ledger rows", c.ledger().len()));
            if verdict == Verdict::Fail {
                return Ok(Err(Halt));
            }
            return Ok(Ok(UFamily::fhc(c, CertificateGate::Checked(verdict))?));
        }
        let gate = match self.gate(&w)? {
            Ok(g) => g,
            Err(h) => return Ok(Err(h)),
        };
        Ok(Ok(match self.cfg.run.family {
            FamilyKind::Unilateral => UFamily::unilateral(w, gate)?,
            FamilyKind::Bilateral => UFamily::bilateral(w, gate)?,
            FamilyKind::Polynomial => {
                let p = self.cfg.polynomial.as_ref().expect("validated");
                UFamily::polynomial(w, p.spec()?, p.n_max, gate)?
            }
            FamilyKind::Fhc => unreachable!(),
        }))
    }

    /// Thresholds from `[deltas]`, building staircases against `family`
    /// when configured. Records the staircase for export.
    pub fn deltas(&mut self, family: Option<&UFamily>) -> Result<Option<(DeltaSequence, Vec<StaircaseRecord>)>, RunError> {
        let Some(d) = self.cfg.deltas.clone() else { return Ok(None) };
        Ok(Some(match d {
            DeltaConfig::User { integer_indexed, rule } => (DeltaSequence::user(rule, integer_indexed)?, vec![]),
            DeltaConfig::Builder { eps, side, horizon } => {
                let family = family.ok_or_else(|| RunError::Config("[deltas]: the builder needs a u_n family".into()))?;
                let (d, rec) = build_delta(self.space(), &eps, family, side, horizon)?;
                (d, vec![rec])
            }
            DeltaConfig::Symmetrized { plus, minus, horizon } => {
                let family = family.ok_or_else(|| RunError::Config("[deltas]: the builder needs a u_n family".into()))?;
                let (dp, rp) = build_delta(self.space(), &plus, family, Side::Plus, horizon)?;
                let (dm, rm) = build_delta(self.space(), &minus, family, Side::Minus, horizon)?;
                (symmetrize_delta(&dp, &dm)?, vec![rp, rm])
            }
        }))
    }

    /// The coefficient distribution; the annulus density is built from
    /// `deltas` and records a `divergence` certificate.
    pub fn distribution(&mut self, deltas: Option<&DeltaSequence>) -> Step<DistributionSpec> {
        if let Some(d) = self.cfg.distribution.build_direct().map_err(|e| RunError::Config(format!("[distribution]: {e}")))? {
            return Ok(Ok(d));
        }
        let DistributionConfig::Annulus { field } = self.cfg.distribution else { unreachable!() };
        let deltas = deltas.ok_or_else(|| RunError::Config("[distribution]: annulus density needs [deltas]".into()))?;
        match build_annulus_density(deltas, field) {
            Ok(spec) => {
                self.certify("divergence", Verdict::Pass, deltas.divergence().message().to_string());
                Ok(Ok(DistributionSpec::Annulus(spec)))
            }
            Err(Error::DivergenceRequired { witness }) => {
                let verdict = match deltas.divergence() {
                    hyperorbit_core::delta::Divergence::Bounded(_) => Verdict::Fail,
                    _ => Verdict::Inconclusive,
                };
                self.certify("divergence", verdict, witness);
                Ok(Err(Halt))
            }
            Err(e) => Err(e.into()),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Parses `config_text`, runs `command` and writes CSVs plus `manifest.json`.
pub fn run(config_text: &str, command: Command, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let cfg = parse_config(config_text).map_err(|e| RunError::Config(e.0))?;
    let seed = opts.seed_override.unwrap_or(cfg.run.seed);
    let horizon = opts.horizon.unwrap_or(cfg.run.horizon);
    if horizon < 16 {
        return Err(RunError::Config(format!("--horizon must be ≥ 16, got {horizon}")));
    }
    let out = opts
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.dir.as_ref().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| RunError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    let mut ctx = Ctx {
        cfg,
        seed,
        horizon,
        out: out.clone(),
        plot: opts.plot,
        certificates: vec![],
        outputs: vec![],
        notes: vec![],
        values: serde_json::Map::new(),
    };
    crate::commands::dispatch(&mut ctx, command)?;
    let failing = ctx.certificates.iter().filter(|c| !c.verdict.is_pass()).map(|c| c.name.clone()).collect();
    let manifest = Manifest {
        command: command.name().into(),
        version: VERSION.into(),
        seed,
        config_sha256: sha256_hex(config_text.as_bytes()),
        certificates: ctx.certificates,
        failing,
        outputs: ctx.outputs,
        notes: ctx.notes,
        values: ctx.values,
    };
    write_manifest(&out, &manifest)?;
    Ok(RunOutcome { manifest, out_dir: out })
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(m).map_err(|e| RunError::Runtime(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text + "\n").map_err(|e| RunError::Runtime(e.to_string()))
}
