use serde::{Deserialize, Serialize};

use super::kinematics::link_points;
use super::{SimConfig, WorldState};

/// Grayscale top-down camera over the arm workspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RasterConfig {
    pub width: usize,
    pub height: usize,
    pub link_half_width: f64,
    pub link_intensity: f64,
    pub object_intensity: f64,
    pub gripper_marker_radius: f64,
    pub gripper_intensity: f64,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            width: 16,
            height: 16,
            link_half_width: 0.015,
            link_intensity: 0.5,
            object_intensity: 1.0,
            gripper_marker_radius: 0.035,
            gripper_intensity: 0.75,
        }
    }
}

impl RasterConfig {
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

/// Anti-aliased coverage of a shape whose signed distance at the pixel center is `d`.
#[inline]
fn coverage(signed_inside: f64, pixel: f64) -> f64 {
    (0.5 + signed_inside / pixel).clamp(0.0, 1.0)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + t * vx, a.1 + t * vy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Row-major raster (row 0 at the top of the workspace), values in `[0, 1]`.
///
/// Draws arm links as segments, the task object and any static shelf object as
/// filled discs, and a marker at the effector scaled by gripper closure.
pub fn render_observation(state: &WorldState, cfg: &SimConfig) -> Vec<f64> {
    let r = &cfg.raster;
    let (x0, x1, y0, y1) = cfg.arm.workspace;
    let sx = (x1 - x0) / r.width as f64;
    let sy = (y1 - y0) / r.height as f64;
    let pixel = sx.min(sy);

    let pts = link_points(&state.joints, &cfg.arm.link_lengths);
    let eff = *pts.last().expect("arm has links");
    let mut discs: Vec<((f64, f64), f64, f64)> = Vec::with_capacity(4);
    discs.push((state.object, cfg.scene.object_radius, r.object_intensity));
    for (i, &(px, py, _)) in cfg.scene.slots.iter().enumerate() {
        // the task object itself is already drawn when it sits in a slot
        if state.slots[i] && state.placed_in != Some(i) {
            discs.push(((px, py), cfg.scene.object_radius, r.object_intensity));
        }
    }
    let closure = ((state.gripper + 1.0) * 0.5).clamp(0.0, 1.0);
    discs.push((eff, r.gripper_marker_radius, r.gripper_intensity * closure));

    let mut out = vec![0.0; r.pixels()];
    for row in 0..r.height {
        let py = y1 - (row as f64 + 0.5) * sy;
        for col in 0..r.width {
            let px = x0 + (col as f64 + 0.5) * sx;
            let mut v: f64 = 0.0;
            for w in pts.windows(2) {
                let d = segment_distance((px, py), w[0], w[1]);
                v = v.max(r.link_intensity * coverage(r.link_half_width - d, pixel));
            }
            for &(c, rad, inten) in &discs {
                let d = ((px - c.0).powi(2) + (py - c.1).powi(2)).sqrt();
                v = v.max(inten * coverage(rad - d, pixel));
            }
            out[row * r.width + col] = v;
        }
    }
    out
}
