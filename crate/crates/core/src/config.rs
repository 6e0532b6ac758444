//! TOML configuration file shared by the `synth` and `run` commands.
//!
//! ```toml
//! [experiment]      # required by `run`
//! num_ioi = 20
//! ...
//! [hyperparams]     # required by `run`
//! tail_threshold = 0.01
//! ...
//! [synthetic]       # required by `synth`
//! num_identities = 40
//! ...
//! ```
//!
//! Every field of a present section is required and unknown keys are
//! rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, SyntheticUniverseSpec};
use crate::types::HyperParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub num_ioi: usize,
    pub universe_size: usize,
    pub dataset_size: usize,
    pub laps: usize,
    pub subsequences: usize,
    pub initial_frames: usize,
    pub seed: u64,
    pub adapt: bool,
    pub test_unknowns: bool,
    pub baseline_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<ExperimentSection>,
    pub hyperparams: Option<HyperParams>,
    pub synthetic: Option<SyntheticUniverseSpec>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig> {
        let e = self
            .experiment
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("missing section [experiment]".into()))?;
        let hyperparams = self
            .hyperparams
            .clone()
            .ok_or_else(|| Error::InvalidConfig("missing section [hyperparams]".into()))?;
        let cfg = ExperimentConfig {
            num_ioi: e.num_ioi,
            universe_size: e.universe_size,
            dataset_size: e.dataset_size,
            laps: e.laps,
            subsequences: e.subsequences,
            initial_frames: e.initial_frames,
            seed: e.seed,
            adapt: e.adapt,
            test_unknowns: e.test_unknowns,
            baseline_threshold: e.baseline_threshold,
            hyperparams,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn synthetic_spec(&self) -> Result<SyntheticUniverseSpec> {
        let s = self
            .synthetic
            .clone()
            .ok_or_else(|| Error::InvalidConfig("missing section [synthetic]".into()))?;
        s.validate()?;
        Ok(s)
    }

    /// Render a complete file for the given settings.
    pub fn from_parts(cfg: &ExperimentConfig, synthetic: Option<SyntheticUniverseSpec>) -> Self {
        ConfigFile {
            experiment: Some(ExperimentSection {
                num_ioi: cfg.num_ioi,
                universe_size: cfg.universe_size,
                dataset_size: cfg.dataset_size,
                laps: cfg.laps,
                subsequences: cfg.subsequences,
                initial_frames: cfg.initial_frames,
                seed: cfg.seed,
                adapt: cfg.adapt,
                test_unknowns: cfg.test_unknowns,
                baseline_threshold: cfg.baseline_threshold,
            }),
            hyperparams: Some(cfg.hyperparams.clone()),
            synthetic,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}
