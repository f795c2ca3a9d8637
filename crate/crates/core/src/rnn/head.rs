use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Feed, RnnParams, TaskSequence};
use crate::error::{Error, Result};
use crate::numerics::{adam_step, gemv_acc, outer_acc, AdamConfig, AdamState, ParamSet, SeededRng};

/// A context vector with the joint vectors it should recall. `targets[n-1]`
/// is `m_{t-n}`, or `None` when that step precedes the recording.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadSample {
    pub context: Vec<f64>,
    pub targets: Vec<Option<Vec<f64>>>,
}

/// Teacher-forced replay of each recording with the frozen backbone; one
/// sample per step, taken after the step's input is consumed.
pub fn collect_head_samples(p: &RnnParams, recordings: &[TaskSequence]) -> Result<Vec<HeadSample>> {
    let n = p.config.history;
    let mut out = Vec::new();
    for rec in recordings {
        if rec.is_empty() {
            return Err(Error::Invalid(format!("recording `{}` is empty", rec.id)));
        }
        let replay = p.sequence_forward(&rec.frames(), Feed::Teacher)?;
        for (t, ctx) in replay.contexts.into_iter().enumerate() {
            let targets = (1..=n).map(|lag| t.checked_sub(lag).map(|s| rec.joints[s].clone())).collect();
            out.push(HeadSample { context: ctx, targets });
        }
    }
    Ok(out)
}

fn predict(head: &ParamSet, ctx: &[f64]) -> Vec<f64> {
    let mut y = head.get(1).as_slice().to_vec();
    gemv_acc(&mut y, head.get(0), ctx);
    y
}

/// Mean over lags of the per-lag loss, each being the mean over valid samples
/// of the mean squared error across joint channels. Lags without any valid
/// sample are left out of the average.
pub fn head_loss_and_gradient(head: &ParamSet, joints: usize, samples: &[&HeadSample]) -> Result<(f64, ParamSet)> {
    let lags = samples.first().map_or(0, |s| s.targets.len());
    let mut counts = vec![0usize; lags];
    for s in samples {
        for (n, t) in s.targets.iter().enumerate() {
            counts[n] += usize::from(t.is_some());
        }
    }
    let active = counts.iter().filter(|&&c| c > 0).count();
    if active == 0 {
        return Err(Error::Invalid("no valid previous-trajectory targets".into()));
    }
    let mut grads = head.zeros_like();
    let mut loss = 0.0;
    let mut d = vec![0.0; lags * joints];
    for s in samples {
        let y = predict(head, &s.context);
        d.fill(0.0);
        for (n, target) in s.targets.iter().enumerate() {
            let Some(target) = target else { continue };
            let w = 1.0 / (active as f64 * counts[n] as f64 * joints as f64);
            for j in 0..joints {
                let e = y[n * joints + j] - target[j];
                loss += w * e * e;
                d[n * joints + j] = 2.0 * w * e;
            }
        }
        outer_acc(grads.get_mut(0), &d, &s.context);
        for (g, v) in grads.get_mut(1).as_mut_slice().iter_mut().zip(&d) {
            *g += v;
        }
    }
    Ok((loss, grads))
}

/// Loss per lag `n = 1..=N` over every valid sample.
pub fn per_lag_loss(p: &RnnParams, samples: &[HeadSample]) -> Result<Vec<f64>> {
    let m = p.config.joints;
    let lags = p.config.history;
    let mut sum = vec![0.0; lags];
    let mut count = vec![0usize; lags];
    for s in samples {
        let y = predict(&p.head, &s.context);
        for (n, target) in s.targets.iter().enumerate() {
            if let Some(target) = target {
                let e: f64 = (0..m).map(|j| (y[n * m + j] - target[j]).powi(2)).sum::<f64>() / m as f64;
                sum[n] += e;
                count[n] += 1;
            }
        }
    }
    if count.contains(&0) {
        return Err(Error::Invalid("some lag has no valid samples".into()));
    }
    Ok(sum.iter().zip(&count).map(|(s, c)| s / *c as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for HeadTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 64,
            adam: AdamConfig {
                learning_rate: 0.003,
                ..AdamConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeadTraining {
    /// Input parameters with only the head replaced.
    pub params: RnnParams,
    /// Full-set loss before training and after each epoch.
    pub loss_curve: Vec<f64>,
    pub per_lag: Vec<f64>,
}

/// Trains the previous-trajectory head on precomputed contexts. The backbone
/// is never read for writing.
pub fn train_previous_head(
    params: &RnnParams,
    samples: &[HeadSample],
    cfg: &HeadTrainConfig,
    rng: &mut SeededRng,
) -> Result<HeadTraining> {
    if samples.is_empty() {
        return Err(Error::Invalid("no samples for the previous-trajectory head".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Invalid("batch size must be >= 1".into()));
    }
    let m = params.config.joints;
    let all: Vec<&HeadSample> = samples.iter().collect();
    let mut head = params.head.clone();
    let mut adam = AdamState::new(&head, cfg.adam)?;
    let mut curve = vec![head_loss_and_gradient(&head, m, &all)?.0];
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&HeadSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let Ok((_, grads)) = head_loss_and_gradient(&head, m, &batch) else {
                continue;
            };
            adam_step(&mut head, &grads, &mut adam).map_err(|_| Error::Diverged { epoch, loss: f64::NAN })?;
        }
        let loss = head_loss_and_gradient(&head, m, &all)?.0;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        curve.push(loss);
    }
    let mut trained = params.clone();
    trained.head = head;
    let per_lag = per_lag_loss(&trained, samples)?;
    Ok(HeadTraining {
        params: trained,
        loss_curve: curve,
        per_lag,
    })
}

pub fn write_per_lag_csv(path: &Path, per_lag: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "n,loss")?;
    for (i, l) in per_lag.iter().enumerate() {
        writeln!(f, "{},{l:e}", i + 1)?;
    }
    Ok(())
}
