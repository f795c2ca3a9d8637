//! Evaluation episode construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::EpisodeSpec;
use crate::numerics::SeededRng;
use crate::sim::{Dataset, DisturbanceEvent, SimConfig, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    None,
    A,
    B,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::None, Condition::A, Condition::B];

    pub fn name(self) -> &'static str {
        match self {
            Condition::None => "none",
            Condition::A => "a",
            Condition::B => "b",
        }
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Condition::None),
            "a" => Ok(Condition::A),
            "b" => Ok(Condition::B),
            other => Err(Error::Invalid(format!("unknown disturbance `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodePlan {
    pub duration: usize,
    /// Onsets are drawn uniformly from `[lo, hi)` of each subtask's nominal
    /// span, as fractions of its length.
    pub onset_band: (f64, f64),
    /// Episodes per validation pairing; they alternate the disturbed subtask.
    pub per_pairing: usize,
}

impl Default for EpisodePlan {
    fn default() -> Self {
        Self {
            duration: 10,
            onset_band: (0.2, 0.8),
            per_pairing: 2,
        }
    }
}

/// Pick-and-place episodes over the held-out positions. Every episode has
/// its own onset and teleport stream derived from `(seed, stream, index)`.
pub fn episode_specs(
    ds: &Dataset,
    condition: Condition,
    seed: u64,
    stream: &str,
    plan: &EpisodePlan,
    sim: &SimConfig,
) -> Result<Vec<EpisodeSpec>> {
    let (lo, hi) = plan.onset_band;
    if !(0.0..=1.0).contains(&lo) || !(lo < hi && hi <= 1.0) {
        return Err(Error::Config(format!("onset band ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1")));
    }
    let (pick_len, place_len) = (sim.demo.pick_len(), sim.demo.place_len());
    let mut out = Vec::new();
    for (i, (pick, _)) in ds.pairings(Split::Validation).into_iter().enumerate() {
        for k in 0..plan.per_pairing {
            let index = i * plan.per_pairing + k;
            let subtask = k % 2;
            let mut rng = SeededRng::derive(seed, &format!("{stream}/episode/{index}"));
            let (start, len) = if subtask == 0 { (0, pick_len) } else { (pick_len, place_len) };
            let a = (lo * len as f64).ceil() as usize;
            let b = ((hi * len as f64).ceil() as usize).max(a + 1);
            let onset = start + a + rng.below(b - a);
            let teleport_seed = rng.next_u64();
            let disturbance = match condition {
                Condition::None => None,
                Condition::A => Some(DisturbanceEvent::teleport(onset, plan.duration, teleport_seed, &sim.arm)?),
                Condition::B => Some(DisturbanceEvent::freeze(onset, plan.duration)?),
            };
            out.push(EpisodeSpec {
                id: format!("{}_{}_{index:03}", condition.name(), pick.id.trim_end_matches("_t1")),
                object: pick.object,
                vacant_slot: pick.slot,
                disturbance,
            });
        }
    }
    Ok(out)
}
