use serde::{Deserialize, Serialize};

use super::cell::{self, Trace};
use super::{task_loss, Feed, RnnParams};
use crate::autoencoder::AeParams;
use crate::error::{Error, Result};
use crate::numerics::{adam_step, squared_distance, AdamConfig, AdamState, ParamSet, SeededRng};
use crate::sim::{augment, AugmentConfig};

/// One subtask demonstration in model units.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSequence {
    pub id: String,
    /// Scaled joints (gripper last), `T x joints`.
    pub joints: Vec<Vec<f64>>,
    /// Encoded features, `T x features`.
    pub features: Vec<Vec<f64>>,
    /// Source rasters, used to re-encode jittered observations. May be empty.
    pub rasters: Vec<Vec<f64>>,
}

impl TaskSequence {
    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// `[m_t; f_t]` for every step.
    pub fn frames(&self) -> Vec<Vec<f64>> {
        self.joints
            .iter()
            .zip(&self.features)
            .map(|(m, f)| [m.as_slice(), f.as_slice()].concat())
            .collect()
    }

    fn check(&self, p: &RnnParams) -> Result<()> {
        let c = &p.config;
        if self.joints.len() < 2 || self.features.len() != self.joints.len() {
            return Err(Error::Invalid(format!(
                "sequence `{}` needs >= 2 aligned steps (joints {}, features {})",
                self.id,
                self.joints.len(),
                self.features.len()
            )));
        }
        if self.joints[0].len() != c.joints || self.features[0].len() != c.features {
            return Err(Error::shape(
                format!("sequence `{}` channels", self.id),
                format!("{}+{}", c.joints, c.features),
                format!("{}+{}", self.joints[0].len(), self.features[0].len()),
            ));
        }
        Ok(())
    }
}

/// Eq. 2 and its gradient for inputs `x_0..x_{T-2}` and targets
/// `x_1..x_{T-1}` under teacher forcing.
pub fn sequence_loss_and_gradient(p: &RnnParams, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<(f64, ParamSet)> {
    let mut grads = p.backbone.zeros_like();
    let loss = accumulate_sequence(p, inputs, targets, 1.0, &mut grads)?;
    Ok((loss, grads))
}

fn accumulate_sequence(p: &RnnParams, inputs: &[Vec<f64>], targets: &[Vec<f64>], weight: f64, grads: &mut ParamSet) -> Result<f64> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::shape("sequence loss: steps", inputs.len().max(1), targets.len()));
    }
    let c0 = p.initial_state();
    let mut traces: Vec<Trace> = Vec::with_capacity(inputs.len());
    let mut state = c0.clone();
    for x in inputs {
        if x.len() != p.config.io() {
            return Err(Error::shape("sequence loss: input", p.config.io(), x.len()));
        }
        let tr = cell::forward(p, &state, x);
        state.clone_from(&tr.state);
        traces.push(tr);
    }
    let outputs: Vec<Vec<f64>> = traces.iter().map(|t| t.out.clone()).collect();
    let loss = task_loss(&outputs, targets, &c0, &state)?;

    let mut d_state: Vec<f64> = state.iter().zip(&c0).map(|(s, c)| 2.0 * weight * (s - c)).collect();
    {
        let g0 = grads.get_mut(cell::C0).as_mut_slice();
        for (g, (c, s)) in g0.iter_mut().zip(c0.iter().zip(&state)) {
            *g += 2.0 * weight * (c - s);
        }
    }
    for (tr, y) in traces.iter().zip(targets).rev() {
        let d_out: Vec<f64> = tr.out.iter().zip(y).map(|(o, t)| 2.0 * weight * (o - t)).collect();
        let d_ctx = cell::output_backward(p, tr, &d_out, grads);
        cell::backward(p, tr, &mut d_state, &d_ctx, grads, None);
    }
    for (g, d) in grads.get_mut(cell::C0).as_mut_slice().iter_mut().zip(&d_state) {
        *g += d;
    }
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RnnTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub augment: AugmentConfig,
}

impl Default for RnnTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1500,
            batch_size: 4,
            adam: AdamConfig::default(),
            augment: AugmentConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RnnTraining {
    pub params: RnnParams,
    /// Mean clean Eq. 2 loss per sequence before training and after each epoch.
    pub loss_curve: Vec<f64>,
}

fn clean_loss(p: &RnnParams, data: &[TaskSequence]) -> Result<f64> {
    let mut total = 0.0;
    for s in data {
        let frames = s.frames();
        let n = frames.len() - 1;
        let out = p.sequence_forward(&frames[..n], Feed::Teacher)?;
        total += task_loss(&out.outputs, &frames[1..], &p.initial_state(), out.final_state())?;
    }
    Ok(total / data.len() as f64)
}

fn augmented_inputs(
    s: &TaskSequence,
    cfg: &AugmentConfig,
    encoder: Option<&AeParams>,
    rng: &mut SeededRng,
) -> Result<Vec<Vec<f64>>> {
    let n = s.len() - 1;
    let (joints, rasters) = augment(&s.joints[..n], &s.rasters[..n.min(s.rasters.len())], cfg, rng);
    let features = match encoder {
        Some(ae) if cfg.intensity_jitter > 0.0 && rasters.len() == n => {
            rasters.iter().map(|r| ae.encode(r)).collect::<Result<Vec<_>>>()?
        }
        _ => s.features[..n].to_vec(),
    };
    Ok(joints
        .iter()
        .zip(&features)
        .map(|(m, f)| [m.as_slice(), f.as_slice()].concat())
        .collect())
}

/// Minibatch Adam with full-sequence backpropagation through time. Inputs
/// carry joint noise and, when `encoder` is given, features re-encoded from
/// intensity-jittered rasters; targets are always clean.
pub fn train_task(
    init: RnnParams,
    data: &[TaskSequence],
    cfg: &RnnTrainConfig,
    encoder: Option<&AeParams>,
    rng: &mut SeededRng,
) -> Result<RnnTraining> {
    if data.is_empty() {
        return Err(Error::Invalid("no training sequences".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Invalid("batch size must be >= 1".into()));
    }
    for s in data {
        s.check(&init)?;
    }
    let targets: Vec<Vec<Vec<f64>>> = data.iter().map(|s| s.frames()[1..].to_vec()).collect();
    let mut params = init;
    let mut adam = AdamState::new(&params.backbone, cfg.adam)?;
    let first = clean_loss(&params, data)?;
    if !first.is_finite() {
        return Err(Error::Diverged { epoch: 0, loss: first });
    }
    let mut curve = vec![first];
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let mut grads = params.backbone.zeros_like();
            let w = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let inputs = augmented_inputs(&data[i], &cfg.augment, encoder, rng)?;
                accumulate_sequence(&params, &inputs, &targets[i], w, &mut grads)?;
            }
            if grads.first_non_finite().is_some() {
                return Err(Error::Diverged { epoch, loss: f64::NAN });
            }
            adam_step(&mut params.backbone, &grads, &mut adam)?;
        }
        let loss = clean_loss(&params, data)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        curve.push(loss);
    }
    Ok(RnnTraining { params, loss_curve: curve })
}

/// How tightly teacher-forced replays return to the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureStats {
    /// Mean `‖c0 − c_T‖²` over sequences.
    pub gap: f64,
    /// Mean over sequences of the per-step mean `‖c_t − c0‖²`.
    pub spread: f64,
}

impl ClosureStats {
    pub fn ratio(&self) -> f64 {
        self.gap / self.spread
    }
}

pub fn closure_stats(p: &RnnParams, data: &[TaskSequence]) -> Result<ClosureStats> {
    if data.is_empty() {
        return Err(Error::Invalid("closure statistics need at least one sequence".into()));
    }
    let c0 = p.initial_state();
    let (mut gap, mut spread) = (0.0, 0.0);
    for s in data {
        let frames = s.frames();
        let out = p.sequence_forward(&frames[..frames.len() - 1], Feed::Teacher)?;
        gap += squared_distance(&c0, out.final_state());
        spread += out.states.iter().map(|c| squared_distance(c, &c0)).sum::<f64>() / out.states.len() as f64;
    }
    let n = data.len() as f64;
    Ok(ClosureStats {
        gap: gap / n,
        spread: spread / n,
    })
}
