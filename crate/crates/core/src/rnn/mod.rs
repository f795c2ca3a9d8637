//! Recurrent task model: LSTM, GRU or multiple-timescale RNN cells with a
//! shared learned initial state, a `tanh` readout of the next joints and
//! features, and a linear head that recalls the last `N` joint vectors.

mod cell;
mod head;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use head::{
    collect_head_samples, head_loss_and_gradient, per_lag_loss, train_previous_head, write_per_lag_csv, HeadSample,
    HeadTrainConfig, HeadTraining,
};
pub use train::{
    closure_stats, sequence_loss_and_gradient, train_task, ClosureStats, RnnTrainConfig, RnnTraining, TaskSequence,
};

use crate::checkpoint;
use crate::error::{Error, Result};
use crate::numerics::{gemv_acc, squared_distance, Matrix, ParamSet, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Lstm,
    Gru,
    Mtrnn,
}

impl CellKind {
    pub const ALL: [CellKind; 3] = [CellKind::Lstm, CellKind::Gru, CellKind::Mtrnn];

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
            CellKind::Mtrnn => "mtrnn",
        }
    }
}

impl std::str::FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            "mtrnn" => Ok(CellKind::Mtrnn),
            other => Err(Error::Invalid(format!("unknown cell kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RnnConfig {
    pub kind: CellKind,
    /// Joint channels including the gripper.
    pub joints: usize,
    pub features: usize,
    /// LSTM/GRU hidden width.
    pub hidden: usize,
    pub fast: usize,
    pub fast_tau: f64,
    pub slow: usize,
    pub slow_tau: f64,
    /// Depth `N` of the recalled joint history.
    pub history: usize,
}

impl Default for RnnConfig {
    fn default() -> Self {
        Self {
            kind: CellKind::Lstm,
            joints: 4,
            features: 8,
            hidden: 64,
            fast: 24,
            fast_tau: 2.0,
            slow: 8,
            slow_tau: 30.0,
            history: 10,
        }
    }
}

impl RnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.joints == 0 || self.features == 0 || self.history == 0 {
            return Err(Error::Invalid("joints, features and history must be >= 1".into()));
        }
        match self.kind {
            CellKind::Lstm | CellKind::Gru if self.hidden == 0 => {
                Err(Error::Invalid("hidden size must be >= 1".into()))
            }
            CellKind::Mtrnn if self.fast == 0 || self.slow == 0 => {
                Err(Error::Invalid("MTRNN layer sizes must be >= 1".into()))
            }
            CellKind::Mtrnn if !(self.fast_tau >= 1.0 && self.slow_tau >= 1.0) => {
                Err(Error::Invalid(format!("time constants must be >= 1, got {} / {}", self.fast_tau, self.slow_tau)))
            }
            _ => Ok(()),
        }
    }

    /// Width of the input and of the prediction.
    pub fn io(&self) -> usize {
        self.joints + self.features
    }

    pub fn state_dim(&self) -> usize {
        match self.kind {
            CellKind::Lstm => 2 * self.hidden,
            CellKind::Gru => self.hidden,
            CellKind::Mtrnn => self.fast + self.slow,
        }
    }

    /// Width of the layer read by both output heads.
    pub fn context_dim(&self) -> usize {
        match self.kind {
            CellKind::Lstm | CellKind::Gru => self.hidden,
            CellKind::Mtrnn => self.fast,
        }
    }
}

/// Backbone (cell, readout, initial state) and previous-trajectory head are
/// kept in separate parameter sets so head training cannot touch the backbone.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    pub config: RnnConfig,
    pub backbone: ParamSet,
    pub head: ParamSet,
}

/// Result of one cell step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: Vec<f64>,
    pub context: Vec<f64>,
    /// Predicted next joints followed by next features, each in (-1, 1).
    pub output: Vec<f64>,
}

impl StepOutput {
    pub fn joints<'a>(&'a self, cfg: &RnnConfig) -> &'a [f64] {
        &self.output[..cfg.joints]
    }

    pub fn features<'a>(&'a self, cfg: &RnnConfig) -> &'a [f64] {
        &self.output[cfg.joints..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feed {
    /// Recorded inputs at every step.
    Teacher,
    /// The first recorded input, then the model's own predictions.
    ClosedLoop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOutput {
    pub outputs: Vec<Vec<f64>>,
    /// State after each step; `states[T-1]` is the final state.
    pub states: Vec<Vec<f64>>,
    pub contexts: Vec<Vec<f64>>,
}

impl SequenceOutput {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("non-empty sequence")
    }
}

const CHECKPOINT_BACKBONE: &str = "rnn-backbone";
const CHECKPOINT_HEAD: &str = "rnn-head";

impl RnnParams {
    /// Seeded uniform weights, zero biases (LSTM forget bias 1), zero initial
    /// state and zero head.
    pub fn init(config: RnnConfig, rng: &mut SeededRng) -> Result<Self> {
        config.validate()?;
        let (s, c, o) = (config.state_dim(), config.context_dim(), config.io());
        let mut backbone = ParamSet::new();
        backbone.push("c0", Matrix::zeros(s, 1)?);
        let a = 1.0 / (c as f64).sqrt();
        backbone.push("w_out", Matrix::from_fn(o, c, |_, _| rng.uniform_range(-a, a))?);
        backbone.push("b_out", Matrix::zeros(o, 1)?);
        cell::push_cell_blocks(&mut backbone, &config, rng)?;
        let head = Self::zero_head(&config)?;
        Ok(Self { config, backbone, head })
    }

    fn zero_head(config: &RnnConfig) -> Result<ParamSet> {
        let mut head = ParamSet::new();
        head.push("w_prev", Matrix::zeros(config.history * config.joints, config.context_dim())?);
        head.push("b_prev", Matrix::zeros(config.history * config.joints, 1)?);
        Ok(head)
    }

    /// Every block set to zero.
    pub fn zeroed(config: RnnConfig) -> Result<Self> {
        let mut p = Self::init(config, &mut SeededRng::new(0))?;
        p.backbone = p.backbone.zeros_like();
        p.head = p.head.zeros_like();
        Ok(p)
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.backbone.get(cell::C0).as_slice().to_vec()
    }

    /// One recurrent step on `input = [m_t; f_t]`.
    pub fn step(&self, state: &[f64], input: &[f64]) -> Result<StepOutput> {
        if state.len() != self.config.state_dim() {
            return Err(Error::shape("cell_forward: state", self.config.state_dim(), state.len()));
        }
        if input.len() != self.config.io() {
            return Err(Error::shape("cell_forward: input", self.config.io(), input.len()));
        }
        let tr = cell::forward(self, state, input);
        Ok(StepOutput {
            state: tr.state,
            context: tr.ctx,
            output: tr.out,
        })
    }

    /// Runs from the learned initial state for `inputs.len()` steps.
    pub fn sequence_forward(&self, inputs: &[Vec<f64>], feed: Feed) -> Result<SequenceOutput> {
        self.sequence_forward_from(&self.initial_state(), inputs, feed)
    }

    pub fn sequence_forward_from(&self, start: &[f64], inputs: &[Vec<f64>], feed: Feed) -> Result<SequenceOutput> {
        if inputs.is_empty() {
            return Err(Error::Invalid("sequence_forward on an empty sequence".into()));
        }
        let mut state = start.to_vec();
        let mut out = SequenceOutput {
            outputs: Vec::with_capacity(inputs.len()),
            states: Vec::with_capacity(inputs.len()),
            contexts: Vec::with_capacity(inputs.len()),
        };
        let mut x = inputs[0].clone();
        for (t, recorded) in inputs.iter().enumerate() {
            if feed == Feed::Teacher || t == 0 {
                x.clone_from(recorded);
            }
            let s = self.step(&state, &x).map_err(|e| e.at_step(t))?;
            state.clone_from(&s.state);
            x.clone_from(&s.output);
            out.outputs.push(s.output);
            out.states.push(s.state);
            out.contexts.push(s.context);
        }
        Ok(out)
    }

    /// Recalled joint vectors for lags `1..=N`, row `n-1` holding lag `n`.
    pub fn predict_previous(&self, context: &[f64]) -> Result<Vec<Vec<f64>>> {
        if context.len() != self.config.context_dim() {
            return Err(Error::shape("predict_previous: context", self.config.context_dim(), context.len()));
        }
        let mut flat = self.head.get(1).as_slice().to_vec();
        gemv_acc(&mut flat, self.head.get(0), context);
        Ok(flat.chunks(self.config.joints).map(<[f64]>::to_vec).collect())
    }

    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        checkpoint::save_params(&dir.join(format!("{stem}.backbone.bin")), CHECKPOINT_BACKBONE, &self.backbone)?;
        checkpoint::save_params(&dir.join(format!("{stem}.head.bin")), CHECKPOINT_HEAD, &self.head)
    }

    pub fn save_backbone(&self, path: &Path) -> Result<()> {
        checkpoint::save_params(path, CHECKPOINT_BACKBONE, &self.backbone)
    }

    pub fn save_head(&self, path: &Path) -> Result<()> {
        checkpoint::save_params(path, CHECKPOINT_HEAD, &self.head)
    }

    /// Loads a backbone; the head is zero unless `head_path` is given.
    pub fn load(config: RnnConfig, backbone_path: &Path, head_path: Option<&Path>) -> Result<Self> {
        let mut p = Self::init(config, &mut SeededRng::new(0))?;
        let bb = checkpoint::load_params(backbone_path, CHECKPOINT_BACKBONE)?;
        checkpoint::check_layout(&bb, &p.backbone, backbone_path)?;
        p.backbone = bb;
        if let Some(hp) = head_path {
            let head = checkpoint::load_params(hp, CHECKPOINT_HEAD)?;
            checkpoint::check_layout(&head, &p.head, hp)?;
            p.head = head;
        }
        Ok(p)
    }
}

/// Eq. 2 for one sequence: summed squared prediction errors of joints and
/// features plus the squared gap between initial and final state.
pub fn task_loss(predictions: &[Vec<f64>], targets: &[Vec<f64>], c0: &[f64], c_t: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::shape("task_loss: steps", targets.len(), predictions.len()));
    }
    if c0.len() != c_t.len() {
        return Err(Error::shape("task_loss: state", c0.len(), c_t.len()));
    }
    let mut total = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        if p.len() != t.len() {
            return Err(Error::shape("task_loss: prediction", t.len(), p.len()));
        }
        total += squared_distance(p, t);
    }
    Ok(total + squared_distance(c0, c_t))
}

#[cfg(test)]
mod tests;
