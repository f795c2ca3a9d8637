//! Switching between the learned and the optimal controller: anomaly
//! scores, the sigmoid gate, command blending, input adjustment,
//! calibration, baseline detectors and the closed-loop runtime.

mod baseline;
mod calibrate;
mod record;
mod runtime;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub use baseline::{joint_windows, knn_score, sm_score, BaselineDetector, ChannelWindows, KnnDetector, SmDetector};
pub use calibrate::{calibrate, calibrate_baseline};
pub use record::{EpisodeOutcome, EpisodeRecord, OutcomeThresholds, StepLog};
pub use runtime::{run_episode, run_episode_traced, scaled_home, Controller, Detector, EpisodeSpec, Models, RuntimeConfig, Tick};

use crate::error::{Error, Result};
use crate::numerics::{sigmoid, squared_distance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// Recalled joint history from the recurrent context.
    Prev,
    /// Nearest training window of each joint.
    Knn,
    /// Residual from a two-axis subspace of each joint's training windows.
    Sm,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [DetectorKind::Prev, DetectorKind::Knn, DetectorKind::Sm];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Prev => "prev",
            DetectorKind::Knn => "knn",
            DetectorKind::Sm => "sm",
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prev" => Ok(DetectorKind::Prev),
            "knn" => Ok(DetectorKind::Knn),
            "sm" => Ok(DetectorKind::Sm),
            other => Err(Error::Invalid(format!("unknown detector `{other}`"))),
        }
    }
}

/// How the calibration baseline is summarized across lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    PerLag,
    Pooled,
}

/// Form of the command blend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlendMode {
    /// `(1 − α) Δm^R + Δm^L`.
    Unscaled,
    /// `(1 − α) Δm^R + α Δm^L`.
    Convex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    pub history: usize,
    pub beta: f64,
    pub gamma: f64,
    pub calibration: CalibrationMode,
    pub blend: BlendMode,
    /// Window length of the baseline detectors.
    pub window: usize,
    /// Subspace axes of the SM baseline.
    pub sm_axes: usize,
    pub calibration_trials: usize,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            history: 10,
            beta: 30.0,
            gamma: 3.0,
            calibration: CalibrationMode::PerLag,
            blend: BlendMode::Unscaled,
            window: 10,
            sm_axes: 2,
            calibration_trials: 5,
        }
    }
}

/// The most recent actual joint vectors, newest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    capacity: usize,
    items: VecDeque<Vec<f64>>,
}

impl History {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, m: Vec<f64>) {
        if self.capacity == 0 {
            return;
        }
        if self.items.len() == self.capacity {
            self.items.pop_back();
        }
        self.items.push_front(m);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Entry `lag` steps back, `lag >= 1`.
    pub fn lag(&self, lag: usize) -> Option<&Vec<f64>> {
        lag.checked_sub(1).and_then(|i| self.items.get(i))
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }
}

/// Per-lag squared error between recalled and actual joints, averaged over
/// coordinates; lags beyond the history occupancy are `None`.
pub fn score_previous(predicted: &[Vec<f64>], history: &History) -> Result<Vec<Option<f64>>> {
    predicted
        .iter()
        .enumerate()
        .map(|(i, p)| match history.lag(i + 1) {
            None => Ok(None),
            Some(actual) if actual.len() != p.len() => Err(Error::shape("score_previous", actual.len(), p.len())),
            Some(actual) => Ok(Some(squared_distance(p, actual) / p.len() as f64)),
        })
        .collect()
}

/// `max_n sigmoid(β (l_n − γ l̄_n))` over scored entries, `None` when nothing
/// is scored.
pub fn compute_alpha(beta: f64, gamma: f64, calibration: &[f64], scores: &[Option<f64>]) -> Result<Option<f64>> {
    let mut alpha: Option<f64> = None;
    for (n, l) in scores.iter().enumerate() {
        let Some(l) = l else { continue };
        let lbar = calibration.get(n).copied().ok_or(Error::MissingCalibration(n + 1))?;
        let a = sigmoid(beta * (l - gamma * lbar));
        alpha = Some(alpha.map_or(a, |b| b.max(a)));
    }
    Ok(alpha)
}

pub fn blend_command(alpha: f64, rnn: &[f64], lqr: &[f64], mode: BlendMode) -> Result<Vec<f64>> {
    if rnn.len() != lqr.len() {
        return Err(Error::shape("blend_command", rnn.len(), lqr.len()));
    }
    let w = match mode {
        BlendMode::Unscaled => 1.0,
        BlendMode::Convex => alpha,
    };
    Ok(rnn.iter().zip(lqr).map(|(r, l)| (1.0 - alpha) * r + w * l).collect())
}

/// `x ← (1 − α) x + α x^R` for the joint and feature groups.
pub fn adjust_inputs(alpha: f64, m: &[f64], f: &[f64], m_pred: &[f64], f_pred: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if m.len() != m_pred.len() {
        return Err(Error::shape("adjust_inputs: joints", m.len(), m_pred.len()));
    }
    if f.len() != f_pred.len() {
        return Err(Error::shape("adjust_inputs: features", f.len(), f_pred.len()));
    }
    let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (1.0 - alpha) * x + alpha * y).collect();
    Ok((mix(m, m_pred), mix(f, f_pred)))
}
