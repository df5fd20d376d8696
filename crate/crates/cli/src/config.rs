//! Run configuration: one JSON document drives every subcommand.
//!
//! `p`, `eps`, `seed` and `override_p_range` live at the top level and are
//! copied into the `eigen` and `solve` sections on resolution, so the
//! resolved document (the one that gets hashed and stored in manifests) is
//! always self-consistent.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use pdirac_core::critical::SolveConfig;
use pdirac_core::eigen::EigenConfig;
use pdirac_core::{build_gamma, check_p_range, DiracOperator, Energy, Nonlinearity, TorusModel, TorusModelSpec};
use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

use crate::CliError;

/// Published JSON schema for [`RunConfig`].
pub const SCHEMA: &str = include_str!("../schema/run_config.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    #[default]
    MountainPass,
    GlobalMinimize,
    Fountain,
    DualFountain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DumpFormat {
    Json,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub count: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { count: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Not part of the config hash: where results land does not change them.
    pub dir: Option<PathBuf>,
    pub dump_fields: Option<DumpFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: TorusModelSpec,
    pub p: f64,
    /// `None` picks the default regularization for `p`.
    pub eps: Option<f64>,
    pub nonlinearity: Nonlinearity,
    pub override_p_range: bool,
    pub seed: u64,
    pub spectrum: SpectrumSection,
    pub eigen: EigenConfig,
    pub method: Method,
    pub solve: SolveConfig,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: TorusModelSpec { m: 3, grid: vec![8; 3], lengths: None, twist: vec![0.5; 3] },
            p: 2.0,
            eps: None,
            nonlinearity: Nonlinearity::power(1.0, 4.0).expect("valid default nonlinearity"),
            override_p_range: false,
            seed: 0,
            spectrum: SpectrumSection::default(),
            eigen: EigenConfig::default(),
            method: Method::default(),
            solve: SolveConfig::default(),
            output: OutputSection::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub override_p_range: bool,
}

/// A model and operator built from a validated config.
pub struct Setup {
    pub model: Arc<TorusModel>,
    pub dirac: Arc<DiracOperator>,
}

impl RunConfig {
    /// Reads either a run config or a manifest written by a previous run
    /// (recognized by its `config_hash` key).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let value = match value {
            serde_json::Value::Object(mut map) if map.contains_key("config_hash") => {
                map.remove("config").ok_or_else(|| CliError::Config("manifest has no config".into()))?
            }
            v => v,
        };
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Applies flags, propagates the shared fields into the solver
    /// sections and validates the result.
    pub fn resolve(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output.dir = Some(out.clone());
        }
        self.override_p_range |= o.override_p_range;
        self.eigen.p = self.p;
        self.eigen.eps = self.eps;
        self.eigen.seed = self.seed;
        self.eigen.allow_p_outside_range = self.override_p_range;
        self.solve.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let model = self.torus()?;
        let m = model.m();
        if model.twist().iter().all(|&d| d == 0.0) && !self.override_p_range {
            return Err(CliError::Config(
                "all twists are periodic, so D has harmonic spinors; pass --override-p-range to explore it anyway".into(),
            ));
        }
        check_p_range(self.p, m, self.override_p_range)?;
        if let Some(eps) = self.eps {
            if !(eps >= 0.0) {
                return Err(CliError::Config(format!("eps must be >= 0, got {eps}")));
            }
        }
        self.nonlinearity.validated()?;
        if self.spectrum.count == 0 {
            return Err(CliError::Config("spectrum.count must be >= 1".into()));
        }
        self.eigen.validate(m)?;
        self.solve.validate()?;
        if self.solve.galerkin_k == 0 {
            return Err(CliError::Config("solve.galerkin_k must be >= 1".into()));
        }
        Ok(())
    }

    pub fn torus(&self) -> Result<TorusModel, CliError> {
        Ok(TorusModel::try_from(self.model.clone())?)
    }

    pub fn setup(&self) -> Result<Setup, CliError> {
        let model = Arc::new(self.torus()?);
        let dirac = Arc::new(DiracOperator::new(model.clone(), build_gamma(model.m())?)?);
        Ok(Setup { model, dirac })
    }

    pub fn energy(&self, dirac: &Arc<DiracOperator>) -> Result<Energy, CliError> {
        Ok(Energy::new(dirac.clone(), self.p, self.eps, self.nonlinearity, self.override_p_range)?)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Compact JSON of the config without the output directory.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output.dir = None;
        serde_json::to_string(&c).expect("config serializes")
    }

    /// Git blob hash of [`Self::canonical_json`].
    pub fn hash(&self) -> String {
        git_blob_hash(self.canonical_json().as_bytes())
    }
}

/// `sha1("blob <len>\0" ++ bytes)`, as `git hash-object` computes it.
pub fn git_blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    format!("{:x}", h.finalize())
}
