use serde::{Deserialize, Serialize};

use super::ArmConfig;
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DisturbanceKind {
    /// Kind A: the arm is moved to a random posture and held there.
    Teleport,
    /// Kind B: the arm stops for the hold duration.
    Freeze,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceEvent {
    pub kind: DisturbanceKind,
    pub onset: usize,
    pub duration: usize,
    /// Target posture for teleports.
    pub posture: Option<Vec<f64>>,
}

const MAX_REJECTIONS: usize = 100_000;

impl DisturbanceEvent {
    pub fn freeze(onset: usize, duration: usize) -> Result<Self> {
        if duration == 0 {
            return Err(Error::Invalid("disturbance duration must be >= 1".into()));
        }
        Ok(Self {
            kind: DisturbanceKind::Freeze,
            onset,
            duration,
            posture: None,
        })
    }

    /// Posture drawn uniformly inside the joint limits, rejecting draws whose
    /// effector leaves the workspace.
    pub fn teleport(onset: usize, duration: usize, seed: u64, arm: &ArmConfig) -> Result<Self> {
        if duration == 0 {
            return Err(Error::Invalid("disturbance duration must be >= 1".into()));
        }
        let mut rng = SeededRng::new(seed);
        for _ in 0..MAX_REJECTIONS {
            let q: Vec<f64> = arm
                .joint_limits
                .iter()
                .map(|&(lo, hi)| rng.uniform_range(lo, hi))
                .collect();
            let (x, y) = arm.effector(&q);
            if arm.in_workspace(x, y) {
                return Ok(Self {
                    kind: DisturbanceKind::Teleport,
                    onset,
                    duration,
                    posture: Some(q),
                });
            }
        }
        Err(Error::Invalid("no teleport posture inside the workspace".into()))
    }

    pub fn is_active(&self, t: usize) -> bool {
        t >= self.onset && t < self.onset + self.duration
    }

    pub fn end(&self) -> usize {
        self.onset + self.duration
    }
}
