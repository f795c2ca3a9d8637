//! Experiment configuration: one TOML document describing every stage.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::episodes::EpisodePlan;
use crate::autoencoder::{AeConfig, CaeTrainConfig};
use crate::error::{Error, Result};
use crate::gate::{DetectorKind, GateConfig, RuntimeConfig};
use crate::lqr::LqrSpec;
use crate::rnn::{CellKind, HeadTrainConfig, RnnConfig, RnnTrainConfig};
use crate::sim::{GridSpec, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub grid: GridSpec,
    /// Seed of the train/validation position split.
    pub split_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            split_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaeSection {
    pub model: AeConfig,
    pub train: CaeTrainConfig,
    pub seed: u64,
}

impl Default for CaeSection {
    fn default() -> Self {
        Self {
            model: AeConfig::default(),
            train: CaeTrainConfig {
                epochs: 60,
                ..CaeTrainConfig::default()
            },
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RnnSection {
    /// `model.kind` is the cell used for switching evaluation.
    pub model: RnnConfig,
    pub train: RnnTrainConfig,
    /// Cells trained and compared by the task evaluation.
    pub task_cells: Vec<CellKind>,
}

impl Default for RnnSection {
    fn default() -> Self {
        Self {
            model: RnnConfig::default(),
            train: RnnTrainConfig {
                epochs: 800,
                batch_size: 2,
                ..RnnTrainConfig::default()
            },
            task_cells: vec![CellKind::Lstm],
        }
    }
}

/// Validation grid for the gate slope and threshold factor, shared by every
/// detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningConfig {
    pub enabled: bool,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Episodes per validation pairing during the search.
    pub per_pairing: usize,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            betas: vec![10.0, 30.0, 100.0, 300.0, 1000.0],
            gammas: vec![1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 12.0, 15.0],
            per_pairing: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    /// Detector used by `run-task` and the task evaluation.
    pub detector: DetectorKind,
    pub data: DataConfig,
    pub sim: SimConfig,
    pub cae: CaeSection,
    pub rnn: RnnSection,
    pub head: HeadTrainConfig,
    pub lqr: LqrSpec,
    pub gate: GateConfig,
    pub tuning: TuningConfig,
    pub runtime: RuntimeConfig,
    pub episodes: EpisodePlan,
    /// Also write one CSV per evaluated episode.
    pub episode_csv: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seeds: vec![11, 22, 33],
            detector: DetectorKind::Prev,
            data: DataConfig::default(),
            sim: SimConfig::default(),
            cae: CaeSection::default(),
            rnn: RnnSection::default(),
            head: HeadTrainConfig::default(),
            lqr: LqrSpec::default(),
            gate: GateConfig::default(),
            tuning: TuningConfig::default(),
            runtime: RuntimeConfig::default(),
            episodes: EpisodePlan::default(),
            episode_csv: false,
        }
    }
}

impl ExperimentConfig {
    /// Few epochs everywhere, one seed and a coarse grid; exercises every
    /// stage quickly.
    pub fn smoke() -> Self {
        let mut c = Self::default();
        c.seeds = vec![11];
        c.runtime.horizon = 150;
        c.episodes.per_pairing = 1;
        c.cae.train.epochs = 5;
        c.rnn.train.epochs = 5;
        c.head.epochs = 5;
        c.tuning.betas = vec![30.0];
        c.tuning.gammas = vec![3.0, 10.0];
        c.tuning.per_pairing = 1;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_string(self)?;
        let digest = Sha256::digest(json.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// RNN configuration for `kind` with data-dependent widths filled in.
    pub fn rnn_model(&self, kind: CellKind) -> RnnConfig {
        RnnConfig {
            kind,
            joints: self.sim.arm.channel_count(),
            features: self.cae.model.features(),
            ..self.rnn.model.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        self.sim.validate()?;
        self.cae.model.validate().map_err(|e| Error::Config(e.to_string()))?;
        let pixels = self.sim.raster.width * self.sim.raster.height;
        if self.cae.model.input() != pixels {
            return Err(Error::Config(format!(
                "cae.model.layers[0] = {} but rasters have {pixels} pixels",
                self.cae.model.input()
            )));
        }
        let m = &self.rnn.model;
        if m.joints != self.sim.arm.channel_count() || m.features != self.cae.model.features() {
            return Err(Error::Config(format!(
                "rnn.model joints/features = {}/{} must match the arm channels {} and autoencoder features {}",
                m.joints,
                m.features,
                self.sim.arm.channel_count(),
                self.cae.model.features()
            )));
        }
        self.rnn_model(m.kind).validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.rnn.task_cells.is_empty() {
            return Err(Error::Config("rnn.task_cells must not be empty".into()));
        }
        if self.lqr.states() != self.sim.arm.joint_count() {
            return Err(Error::Config(format!(
                "lqr plant has {} states but the arm has {} joints",
                self.lqr.states(),
                self.sim.arm.joint_count()
            )));
        }
        let g = &self.gate;
        if !(g.beta > 0.0 && g.gamma > 0.0) {
            return Err(Error::Config("gate.beta and gate.gamma must be positive".into()));
        }
        if g.history != m.history {
            return Err(Error::Config(format!(
                "gate.history ({}) must equal rnn.model.history ({})",
                g.history, m.history
            )));
        }
        if g.window == 0 || g.sm_axes == 0 || g.sm_axes >= g.window {
            return Err(Error::Config("gate.window must exceed gate.sm_axes > 0".into()));
        }
        if g.calibration_trials < 5 {
            return Err(Error::Config("gate.calibration_trials must be at least 5".into()));
        }
        let t = &self.tuning;
        if t.enabled && (t.betas.is_empty() || t.gammas.is_empty() || t.per_pairing == 0) {
            return Err(Error::Config("tuning grid must be non-empty".into()));
        }
        if t.betas.iter().chain(&t.gammas).any(|v| !(*v > 0.0)) {
            return Err(Error::Config("tuning values must be positive".into()));
        }
        if self.episodes.per_pairing == 0 || self.episodes.duration == 0 {
            return Err(Error::Config("episodes.per_pairing and episodes.duration must be positive".into()));
        }
        let th = &self.runtime.thresholds;
        if !(0.0 < th.switch_off && th.switch_off < th.switch_on && th.switch_on < 1.0) {
            return Err(Error::Config("thresholds need 0 < switch_off < switch_on < 1".into()));
        }
        Ok(())
    }
}
