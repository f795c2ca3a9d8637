use serde::{Deserialize, Serialize};

use super::dataset::{Split, Trajectory};
use super::kinematics::inverse_kinematics;
use super::render::render_observation;
use super::{step, SimConfig, WorldState};
use crate::error::{Error, Result};

/// Step counts of the scripted demonstration segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoConfig {
    /// home→pre-grasp, pre-grasp→grasp, close, grasp→lift, lift→home.
    pub pick_segments: [usize; 5],
    /// home→pre-place, pre-place→place, release, place→retreat, retreat→home.
    pub place_segments: [usize; 5],
    /// Steps spent at rest in the initial posture at the end of each subtask.
    pub hold_steps: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        // 29 + 10 + 1 = 40 and 37 + 10 + 1 = 48 samples
        Self {
            pick_segments: [9, 5, 3, 4, 8],
            place_segments: [11, 5, 3, 5, 13],
            hold_steps: 10,
        }
    }
}

impl DemoConfig {
    pub fn pick_len(&self) -> usize {
        self.pick_segments.iter().sum::<usize>() + self.hold_steps + 1
    }

    pub fn place_len(&self) -> usize {
        self.place_segments.iter().sum::<usize>() + self.hold_steps + 1
    }
}

/// Minimum-jerk profile from `a` to `b` over `steps` ticks, excluding `a` and
/// including `b`. Velocity and acceleration vanish at both ends.
pub fn minimum_jerk(a: &[f64], b: &[f64], steps: usize) -> Vec<Vec<f64>> {
    (1..=steps)
        .map(|k| {
            let tau = k as f64 / steps as f64;
            let s = tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
            a.iter().zip(b).map(|(x, y)| x + (y - x) * s).collect()
        })
        .collect()
}

struct Waypoint {
    joints: Vec<f64>,
    gripper: f64,
    steps: usize,
}

fn plan(start: &[f64], waypoints: &[Waypoint], hold: usize) -> Vec<Vec<f64>> {
    let mut samples = vec![start.to_vec()];
    for w in waypoints {
        let mut target = w.joints.clone();
        target.push(w.gripper);
        let from = samples.last().expect("non-empty").clone();
        samples.extend(minimum_jerk(&from, &target, w.steps));
    }
    let last = samples.last().expect("non-empty").clone();
    samples.extend(std::iter::repeat(last).take(hold));
    samples
}

fn execute(world: WorldState, planned: &[Vec<f64>], cfg: &SimConfig) -> Result<(WorldState, Vec<Vec<f64>>)> {
    let d = cfg.arm.joint_count();
    let mut w = world;
    let mut rasters = vec![render_observation(&w, cfg)];
    for pair in planned.windows(2) {
        let cmd: Vec<f64> = pair[1].iter().zip(&pair[0]).map(|(b, a)| b - a).collect();
        w = step(&w, &cmd, None, cfg)?;
        for (q, p) in w.joints.iter().zip(&pair[1][..d]) {
            if (q - p).abs() > 1e-9 {
                return Err(Error::Invalid("demonstration exceeds the per-step joint bound".into()));
            }
        }
        w.joints.copy_from_slice(&pair[1][..d]);
        w.gripper = pair[1][d];
        if w.held {
            w.object = cfg.arm.effector(&w.joints);
        }
        rasters.push(render_observation(&w, cfg));
    }
    Ok((w, rasters))
}

/// Scripted pick (subtask 1) and place (subtask 2) demonstrations.
///
/// Both subtasks start and end in the canonical initial posture; each ends
/// with `hold_steps` ticks at rest.
pub fn generate_demonstration(object: (f64, f64), place_slot: usize, cfg: &SimConfig) -> Result<(Trajectory, Trajectory)> {
    if place_slot > 1 {
        return Err(Error::Invalid(format!("place slot must be 0 or 1, got {place_slot}")));
    }
    let arm = &cfg.arm;
    let scene = &cfg.scene;
    let home = arm.home.clone();
    let home_eff = arm.effector(&home);
    if ((object.0 - home_eff.0).powi(2) + (object.1 - home_eff.1).powi(2)).sqrt() < scene.approach_offset {
        return Err(Error::Invalid("object at the home effector position: zero-length motion segment".into()));
    }

    let phi = scene.table_orientation;
    let (ux, uy) = (phi.cos(), phi.sin());
    let off = scene.approach_offset;
    let grasp = inverse_kinematics(object.0, object.1, phi, arm)?;
    let pre_grasp = inverse_kinematics(object.0 - off * ux, object.1 - off * uy, phi, arm)?;

    let (sx, sy, sphi) = scene.slots[place_slot];
    let place = inverse_kinematics(sx, sy, sphi, arm)?;
    let pre_place = inverse_kinematics(sx - off * sphi.cos(), sy - off * sphi.sin(), sphi, arm)?;

    let seg = &cfg.demo.pick_segments;
    let pick_plan = plan(
        &[home.as_slice(), &[-1.0]].concat(),
        &[
            Waypoint { joints: pre_grasp.clone(), gripper: -1.0, steps: seg[0] },
            Waypoint { joints: grasp.clone(), gripper: -1.0, steps: seg[1] },
            Waypoint { joints: grasp, gripper: 1.0, steps: seg[2] },
            Waypoint { joints: pre_grasp, gripper: 1.0, steps: seg[3] },
            Waypoint { joints: home.clone(), gripper: 1.0, steps: seg[4] },
        ],
        cfg.demo.hold_steps,
    );
    let seg = &cfg.demo.place_segments;
    let place_plan = plan(
        &[home.as_slice(), &[1.0]].concat(),
        &[
            Waypoint { joints: pre_place.clone(), gripper: 1.0, steps: seg[0] },
            Waypoint { joints: place.clone(), gripper: 1.0, steps: seg[1] },
            Waypoint { joints: place, gripper: -1.0, steps: seg[2] },
            Waypoint { joints: pre_place, gripper: -1.0, steps: seg[3] },
            Waypoint { joints: home, gripper: -1.0, steps: seg[4] },
        ],
        cfg.demo.hold_steps,
    );

    let world = WorldState::initial(cfg, object, place_slot)?;
    let (after_pick, pick_rasters) = execute(world, &pick_plan, cfg)?;
    if !after_pick.held {
        return Err(Error::Invalid("pick demonstration did not grasp the object".into()));
    }
    let mut start_place = after_pick;
    start_place.t = 0;
    let (after_place, place_rasters) = execute(start_place, &place_plan, cfg)?;
    if after_place.placed_in != Some(place_slot) {
        return Err(Error::Invalid("place demonstration did not fill the vacant slot".into()));
    }

    let pick = Trajectory {
        id: String::new(),
        subtask: 1,
        object,
        slot: place_slot,
        split: Split::Train,
        joints: pick_plan,
        rasters: pick_rasters,
    };
    let place = Trajectory {
        id: String::new(),
        subtask: 2,
        object,
        slot: place_slot,
        split: Split::Train,
        joints: place_plan,
        rasters: place_rasters,
    };
    Ok((pick, place))
}
