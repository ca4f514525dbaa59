use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use speckle_core::learn::{Architecture, TrainConfig};
use speckle_core::synth::{
    build_aperture_sweep, build_focus_sweep, build_incoherent_baseline, build_nlos, ApertureSweepParams,
    FocusSweepParams, IncoherentBaselineParams, NlosParams, ScenarioConfig,
};

use crate::error::{CliError, CliResult};

/// Scenario selected by `kind`, with builder parameters alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    FocusSweep(FocusSweepParams),
    ApertureSweep(ApertureSweepParams),
    Nlos(NlosParams),
    IncoherentBaseline(IncoherentBaselineParams),
    /// A fully spelled-out scenario.
    Explicit { config: ScenarioConfig },
}

impl ScenarioSpec {
    pub fn build(&self, seed: Option<u64>) -> CliResult<ScenarioConfig> {
        let mut cfg = match self {
            ScenarioSpec::FocusSweep(p) => build_focus_sweep(p),
            ScenarioSpec::ApertureSweep(p) => build_aperture_sweep(p),
            ScenarioSpec::Nlos(p) => build_nlos(p),
            ScenarioSpec::IncoherentBaseline(p) => build_incoherent_baseline(p),
            ScenarioSpec::Explicit { config } => config.validate().map(|_| config.clone()),
        }
        .map_err(|e| CliError::Config(format!("scenario: {e}")))?;
        if let Some(s) = seed {
            cfg.master_seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub train_fraction: f64,
    /// Share of the training side held out for early stopping.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Contents of the `--config` file. Every section is optional; commands
/// read the sections they need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Option<ScenarioSpec>,
    /// IDX directory or image file of the digit source.
    #[serde(default)]
    pub digits: Option<PathBuf>,
    #[serde(default = "default_per_class")]
    pub per_class: usize,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub train: TrainConfig,
    /// Classifier layout; the default convolutional net when absent.
    #[serde(default)]
    pub architecture: Option<Architecture>,
}

fn default_per_class() -> usize {
    512
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            digits: None,
            per_class: default_per_class(),
            split: SplitConfig::default(),
            train: TrainConfig::default(),
            architecture: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("at `{path}`: {}", e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Config("config is not UTF-8".into()))?;
        Ok((Self::parse(text)?, bytes))
    }

    fn validate(&self) -> CliResult<()> {
        let s = &self.split;
        if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
            return Err(CliError::Config(format!("split.train_fraction {} outside (0, 1)", s.train_fraction)));
        }
        if !(s.validation_fraction > 0.0 && s.validation_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "split.validation_fraction {} outside (0, 1)",
                s.validation_fraction
            )));
        }
        if self.per_class == 0 {
            return Err(CliError::Config("per_class must be positive".into()));
        }
        self.train.validate().map_err(|e| CliError::Config(format!("train: {e}")))?;
        if let Some(a) = &self.architecture {
            a.validate().map_err(|e| CliError::Config(format!("architecture: {e}")))?;
        }
        Ok(())
    }
}
