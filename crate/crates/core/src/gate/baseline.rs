use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{pca_fit, squared_distance, Pca};

/// Stride-1 windows of one channel, oldest value first, tagged with the index
/// of the recording they were cut from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelWindows {
    pub windows: Vec<Vec<f64>>,
    pub source: Vec<usize>,
}

/// Per-channel windows of length `window` over every recording.
pub fn joint_windows(recordings: &[Vec<Vec<f64>>], window: usize) -> Result<Vec<ChannelWindows>> {
    if window == 0 {
        return Err(Error::Invalid("window size must be >= 1".into()));
    }
    let channels = recordings
        .iter()
        .find_map(|r| r.first().map(Vec::len))
        .ok_or_else(|| Error::Invalid("no recordings to cut windows from".into()))?;
    let mut out = vec![
        ChannelWindows {
            windows: Vec::new(),
            source: Vec::new(),
        };
        channels
    ];
    for (ri, rec) in recordings.iter().enumerate() {
        if let Some(bad) = rec.iter().find(|m| m.len() != channels) {
            return Err(Error::shape("joint_windows: channels", channels, bad.len()));
        }
        for start in 0..rec.len().saturating_sub(window - 1) {
            for (j, cw) in out.iter_mut().enumerate() {
                cw.windows.push(rec[start..start + window].iter().map(|m| m[j]).collect());
                cw.source.push(ri);
            }
        }
    }
    if out[0].windows.is_empty() {
        return Err(Error::Invalid(format!("no recording is at least {window} steps long")));
    }
    Ok(out)
}

/// Euclidean distance to the nearest training window.
pub fn knn_score(query: &[f64], training: &[Vec<f64>]) -> Result<f64> {
    let first = training.first().ok_or_else(|| Error::Invalid("no training windows".into()))?;
    if first.len() != query.len() {
        return Err(Error::shape("knn_score: window", first.len(), query.len()));
    }
    let mut best = f64::INFINITY;
    for w in training {
        if w.len() != query.len() {
            return Err(Error::shape("knn_score: training window", query.len(), w.len()));
        }
        best = best.min(squared_distance(query, w));
    }
    Ok(best.sqrt())
}

/// Squared residual after projecting onto the fitted affine subspace.
pub fn sm_score(query: &[f64], basis: Option<&Pca>) -> Result<f64> {
    let pca = basis.ok_or(Error::Unfitted)?;
    pca.residual_sq(query)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnDetector {
    pub channels: Vec<ChannelWindows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmDetector {
    pub axes: usize,
    pub bases: Vec<Pca>,
}

/// A window-based anomaly scorer with one model per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaselineDetector {
    Knn(KnnDetector),
    Sm(SmDetector),
}

impl BaselineDetector {
    pub fn knn(recordings: &[Vec<Vec<f64>>], window: usize) -> Result<Self> {
        Ok(Self::Knn(KnnDetector {
            channels: joint_windows(recordings, window)?,
        }))
    }

    pub fn sm(recordings: &[Vec<Vec<f64>>], window: usize, axes: usize) -> Result<Self> {
        let channels = joint_windows(recordings, window)?;
        let bases = channels
            .iter()
            .map(|c| pca_fit(&c.windows, axes))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Sm(SmDetector { axes, bases }))
    }

    pub fn window(&self) -> usize {
        match self {
            Self::Knn(k) => k.channels[0].windows[0].len(),
            Self::Sm(s) => s.bases[0].mean.len(),
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            Self::Knn(k) => k.channels.len(),
            Self::Sm(s) => s.bases.len(),
        }
    }

    /// Score of one channel's window.
    pub fn score(&self, channel: usize, window: &[f64]) -> Result<f64> {
        match self {
            Self::Knn(k) => knn_score(window, &k.channels[channel].windows),
            Self::Sm(s) => sm_score(window, s.bases.get(channel)),
        }
    }

    /// Scores of every channel for the most recent `window` samples, oldest
    /// first; `None` until enough samples exist.
    pub fn score_recent(&self, recent: &[Vec<f64>]) -> Result<Option<Vec<f64>>> {
        let w = self.window();
        if recent.len() < w {
            return Ok(None);
        }
        let tail = &recent[recent.len() - w..];
        (0..self.channels())
            .map(|j| {
                let win: Vec<f64> = tail.iter().map(|m| m[j]).collect();
                self.score(j, &win)
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}
