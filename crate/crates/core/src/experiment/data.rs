//! Conversion of raw demonstrations into model-unit sequences.

use crate::autoencoder::AeParams;
use crate::error::Result;
use crate::rnn::TaskSequence;
use crate::sim::{Dataset, Split, Trajectory};

pub fn encode_trajectory(t: &Trajectory, ds: &Dataset, ae: &AeParams) -> Result<TaskSequence> {
    Ok(TaskSequence {
        id: t.id.clone(),
        joints: t.scaled_joints(&ds.norm),
        features: t.rasters.iter().map(|r| ae.encode(r)).collect::<Result<_>>()?,
        rasters: t.rasters.clone(),
    })
}

/// One sequence per subtask demonstration.
pub fn subtask_sequences(ds: &Dataset, split: Split, ae: &AeParams) -> Result<Vec<TaskSequence>> {
    let src = match split {
        Split::Train => &ds.train,
        Split::Validation => &ds.validation,
    };
    src.iter().map(|t| encode_trajectory(t, ds, ae)).collect()
}

/// Pick followed by place for each pairing, as one continuous recording.
pub fn episode_recordings(ds: &Dataset, split: Split, ae: &AeParams) -> Result<Vec<TaskSequence>> {
    ds.pairings(split)
        .into_iter()
        .map(|(pick, place)| {
            let mut a = encode_trajectory(pick, ds, ae)?;
            let b = encode_trajectory(place, ds, ae)?;
            a.id = format!("{}+{}", a.id, b.id);
            a.joints.extend(b.joints);
            a.features.extend(b.features);
            a.rasters.extend(b.rasters);
            Ok(a)
        })
        .collect()
}

/// Object-position label of each pairing, in `pairings(split)` order.
pub fn position_groups(ds: &Dataset, split: Split) -> Vec<usize> {
    let mut seen: Vec<(f64, f64)> = Vec::new();
    ds.pairings(split)
        .into_iter()
        .map(|(pick, _)| match seen.iter().position(|&p| p == pick.object) {
            Some(i) => i,
            None => {
                seen.push(pick.object);
                seen.len() - 1
            }
        })
        .collect()
}
