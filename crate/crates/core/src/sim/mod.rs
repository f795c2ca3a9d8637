//! Deterministic planar-arm world: kinematics, scripted demonstrations,
//! raster observations, disturbances and dataset construction.

mod dataset;
mod demo;
mod disturbance;
mod kinematics;
mod render;

pub use dataset::{
    augment, build_dataset, AugmentConfig, Dataset, GridSpec, NormStats, Split, Trajectory, TrajectoryRecord,
};
pub use demo::{generate_demonstration, minimum_jerk, DemoConfig};
pub use disturbance::{DisturbanceEvent, DisturbanceKind};
pub use kinematics::{forward_kinematics, inverse_kinematics, link_points, Pose};
pub use render::{render_observation, RasterConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry and limits of the planar arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmConfig {
    pub link_lengths: Vec<f64>,
    pub joint_limits: Vec<(f64, f64)>,
    /// `+1` or `-1`: which inverse-kinematics branch demonstrations use.
    pub elbow_sign: f64,
    /// Canonical initial posture shared by every subtask.
    pub home: Vec<f64>,
    /// `(x_min, x_max, y_min, y_max)` in meters.
    pub workspace: (f64, f64, f64, f64),
    /// Largest joint change per step, radians.
    pub max_joint_step: f64,
    pub max_gripper_step: f64,
}

impl Default for ArmConfig {
    fn default() -> Self {
        let mut cfg = Self {
            link_lengths: vec![0.35, 0.30, 0.20],
            joint_limits: vec![(-0.5, 2.1), (1.0, 2.8), (-2.3, 0.4)],
            elbow_sign: 1.0,
            home: vec![0.0; 3],
            workspace: (-0.6, 0.6, -0.1, 1.1),
            max_joint_step: 0.5,
            max_gripper_step: 2.0,
        };
        cfg.home = inverse_kinematics(0.0, 0.45, std::f64::consts::FRAC_PI_2, &cfg)
            .expect("default home posture is reachable");
        cfg
    }
}

impl ArmConfig {
    pub fn joint_count(&self) -> usize {
        self.link_lengths.len()
    }

    /// Joint channels plus the gripper channel.
    pub fn channel_count(&self) -> usize {
        self.joint_count() + 1
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.joint_count();
        if d < 2 {
            return Err(Error::Config(format!("arm needs at least 2 joints, got {d}")));
        }
        if self.joint_limits.len() != d || self.home.len() != d {
            return Err(Error::Config("joint_limits and home must have one entry per link".into()));
        }
        if self.link_lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config("link lengths must be positive".into()));
        }
        if self.joint_limits.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(Error::Config("joint limits must be proper intervals".into()));
        }
        let (x0, x1, y0, y1) = self.workspace;
        if !(x0 < x1 && y0 < y1) {
            return Err(Error::Config("workspace bounds must be proper intervals".into()));
        }
        if !(self.elbow_sign == 1.0 || self.elbow_sign == -1.0) {
            return Err(Error::Config("elbow_sign must be +1 or -1".into()));
        }
        self.check_joints(&self.home)
    }

    pub fn check_joints(&self, joints: &[f64]) -> Result<()> {
        if joints.len() != self.joint_count() {
            return Err(Error::shape("joint vector", self.joint_count(), joints.len()));
        }
        for (i, (&q, &(lo, hi))) in joints.iter().zip(&self.joint_limits).enumerate() {
            if !(lo..=hi).contains(&q) {
                return Err(Error::JointLimit { joint: i, value: q, lo, hi });
            }
        }
        Ok(())
    }

    pub fn in_workspace(&self, x: f64, y: f64) -> bool {
        let (x0, x1, y0, y1) = self.workspace;
        (x0..=x1).contains(&x) && (y0..=y1).contains(&y)
    }

    pub fn clamp_joints(&self, joints: &mut [f64]) {
        for (q, &(lo, hi)) in joints.iter_mut().zip(&self.joint_limits) {
            *q = q.clamp(lo, hi);
        }
    }

    pub fn effector(&self, joints: &[f64]) -> (f64, f64) {
        let p = kinematics::forward_kinematics_unchecked(joints, &self.link_lengths);
        (p.x, p.y)
    }
}

/// Table and shelf layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    /// Shelf slot centers and the effector orientation used to reach each.
    pub slots: [(f64, f64, f64); 2],
    /// Effector orientation for table grasps.
    pub table_orientation: f64,
    /// Back-off distance of pre-grasp / pre-place poses, meters.
    pub approach_offset: f64,
    pub grasp_radius: f64,
    pub object_radius: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            slots: [(-0.5, 0.3, std::f64::consts::PI), (0.5, 0.3, 0.0)],
            table_orientation: std::f64::consts::FRAC_PI_2,
            approach_offset: 0.08,
            grasp_radius: 0.04,
            object_radius: 0.05,
        }
    }
}

/// Everything the world needs to step and render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SimConfig {
    pub arm: ArmConfig,
    pub scene: SceneConfig,
    pub raster: RasterConfig,
    pub demo: DemoConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.arm.validate()?;
        if self.raster.width == 0 || self.raster.height == 0 {
            return Err(Error::Config("raster dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Full world state. The gripper is `-1` open, `+1` closed.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub joints: Vec<f64>,
    pub gripper: f64,
    pub object: (f64, f64),
    pub held: bool,
    /// Slot occupancy; one slot starts occupied by a static object.
    pub slots: [bool; 2],
    /// Slot the task object was released into.
    pub placed_in: Option<usize>,
    pub t: usize,
}

impl WorldState {
    /// Arm at home, gripper open, task object on the table and the slot other
    /// than `vacant_slot` already occupied.
    pub fn initial(cfg: &SimConfig, object: (f64, f64), vacant_slot: usize) -> Result<Self> {
        if vacant_slot > 1 {
            return Err(Error::Invalid(format!("slot must be 0 or 1, got {vacant_slot}")));
        }
        let mut slots = [true, true];
        slots[vacant_slot] = false;
        Ok(Self {
            joints: cfg.arm.home.clone(),
            gripper: -1.0,
            object,
            held: false,
            slots,
            placed_in: None,
            t: 0,
        })
    }

    /// Joints followed by the gripper channel.
    pub fn channels(&self) -> Vec<f64> {
        let mut v = self.joints.clone();
        v.push(self.gripper);
        v
    }

    pub fn vacant_slot(&self) -> Option<usize> {
        self.slots.iter().position(|&o| !o)
    }
}

/// Advances the world by one tick.
///
/// `command` holds joint deltas followed by a gripper delta, in radians and
/// gripper units; each entry is saturated at the configured per-step bound.
pub fn step(state: &WorldState, command: &[f64], disturbance: Option<&DisturbanceEvent>, cfg: &SimConfig) -> Result<WorldState> {
    let d = cfg.arm.joint_count();
    if command.len() != d + 1 {
        return Err(Error::shape("step command", d + 1, command.len()));
    }
    let mut next = state.clone();
    next.t = state.t + 1;

    if let Some(ev) = disturbance.filter(|e| e.is_active(state.t)) {
        match ev.kind {
            DisturbanceKind::Freeze => return Ok(next),
            DisturbanceKind::Teleport => {
                next.joints.copy_from_slice(ev.posture.as_deref().expect("teleport event carries a posture"));
                if next.held {
                    next.object = cfg.arm.effector(&next.joints);
                }
                return Ok(next);
            }
        }
    }

    let bound = cfg.arm.max_joint_step;
    for (q, dq) in next.joints.iter_mut().zip(&command[..d]) {
        *q += dq.clamp(-bound, bound);
    }
    cfg.arm.clamp_joints(&mut next.joints);
    let gb = cfg.arm.max_gripper_step;
    next.gripper = (state.gripper + command[d].clamp(-gb, gb)).clamp(-1.0, 1.0);

    let eff = cfg.arm.effector(&next.joints);
    let near = |p: (f64, f64)| ((p.0 - eff.0).powi(2) + (p.1 - eff.1).powi(2)).sqrt() <= cfg.scene.grasp_radius;
    if state.gripper <= 0.0 && next.gripper > 0.0 && !next.held && near(next.object) {
        next.held = true;
        if let Some(s) = next.placed_in.take() {
            next.slots[s] = false;
        }
    } else if state.gripper > 0.0 && next.gripper <= 0.0 && next.held {
        next.held = false;
        next.object = eff;
        for (i, &(sx, sy, _)) in cfg.scene.slots.iter().enumerate() {
            if !next.slots[i] && near((sx, sy)) {
                next.slots[i] = true;
                next.placed_in = Some(i);
                next.object = (sx, sy);
                break;
            }
        }
    }
    if next.held {
        next.object = eff;
    }
    Ok(next)
}
