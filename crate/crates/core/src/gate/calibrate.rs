use super::baseline::{joint_windows, BaselineDetector};
use super::{CalibrationMode, DetectorKind, GateConfig};
use crate::error::{Error, Result};
use crate::numerics::{pca_fit, squared_distance, SeededRng};
use crate::rnn::{Feed, RnnParams, TaskSequence};

/// Nominal recall error `l̄_n` from teacher-forced replays of `trials`
/// recordings drawn without replacement.
pub fn calibrate(
    params: &RnnParams,
    recordings: &[TaskSequence],
    trials: usize,
    mode: CalibrationMode,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::Invalid("calibration needs at least one trial".into()));
    }
    if recordings.len() < trials {
        return Err(Error::Invalid(format!(
            "calibration needs {trials} recordings, got {}",
            recordings.len()
        )));
    }
    let lags = params.config.history;
    let m = params.config.joints;
    let mut sum = vec![0.0; lags];
    let mut count = vec![0usize; lags];
    for i in rng.choose_indices(recordings.len(), trials) {
        let rec = &recordings[i];
        let replay = params.sequence_forward(&rec.frames(), Feed::Teacher)?;
        for (t, ctx) in replay.contexts.iter().enumerate() {
            let recalled = params.predict_previous(ctx)?;
            for (n, p) in recalled.iter().enumerate() {
                if let Some(s) = t.checked_sub(n + 1) {
                    sum[n] += squared_distance(p, &rec.joints[s]) / m as f64;
                    count[n] += 1;
                }
            }
        }
    }
    if let Some(n) = count.iter().position(|&c| c == 0) {
        return Err(Error::Invalid(format!("calibration recordings are too short for lag {}", n + 1)));
    }
    let per_lag: Vec<f64> = sum.iter().zip(&count).map(|(s, c)| s / *c as f64).collect();
    Ok(match mode {
        CalibrationMode::PerLag => per_lag,
        CalibrationMode::Pooled => {
            let pooled = sum.iter().sum::<f64>() / count.iter().sum::<usize>() as f64;
            vec![pooled; lags]
        }
    })
}

/// Fits a baseline detector on all recordings and returns it with the
/// per-channel mean score of each window under a model fitted on the
/// recordings outside its group. Recordings sharing a group label (for
/// instance the same object position) are held out together.
pub fn calibrate_baseline(
    recordings: &[Vec<Vec<f64>>],
    groups: &[usize],
    kind: DetectorKind,
    cfg: &GateConfig,
) -> Result<(BaselineDetector, Vec<f64>)> {
    if groups.len() != recordings.len() {
        return Err(Error::shape("calibrate_baseline: groups", recordings.len(), groups.len()));
    }
    let mut labels = groups.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::Invalid("leave-one-group-out calibration needs at least 2 groups".into()));
    }
    let channels = joint_windows(recordings, cfg.window)?;
    let mut lbar = Vec::with_capacity(channels.len());
    for ch in &channels {
        let mut total = 0.0;
        for &g in &labels {
            let (held, kept): (Vec<usize>, Vec<usize>) =
                (0..ch.windows.len()).partition(|&i| groups[ch.source[i]] == g);
            if kept.is_empty() || held.is_empty() {
                continue;
            }
            match kind {
                DetectorKind::Knn => {
                    for &i in &held {
                        let q = &ch.windows[i];
                        let best = kept
                            .iter()
                            .map(|&k| squared_distance(q, &ch.windows[k]))
                            .fold(f64::INFINITY, f64::min);
                        total += best.sqrt();
                    }
                }
                DetectorKind::Sm => {
                    let train: Vec<Vec<f64>> = kept.iter().map(|&k| ch.windows[k].clone()).collect();
                    let pca = pca_fit(&train, cfg.sm_axes)?;
                    for &i in &held {
                        total += pca.residual_sq(&ch.windows[i])?;
                    }
                }
                DetectorKind::Prev => return Err(Error::Invalid("not a window baseline".into())),
            }
        }
        lbar.push(total / ch.windows.len() as f64);
    }
    let detector = match kind {
        DetectorKind::Knn => BaselineDetector::knn(recordings, cfg.window)?,
        _ => BaselineDetector::sm(recordings, cfg.window, cfg.sm_axes)?,
    };
    Ok((detector, lbar))
}
