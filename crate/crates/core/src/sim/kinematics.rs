use super::ArmConfig;
use crate::error::{Error, Result};

/// Effector pose in the arm plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Sum of joint angles (not wrapped).
    pub orientation: f64,
}

/// Planar chain composition: every joint rotates all distal links.
pub fn forward_kinematics(joints: &[f64], cfg: &ArmConfig) -> Result<Pose> {
    cfg.check_joints(joints)?;
    Ok(forward_kinematics_unchecked(joints, &cfg.link_lengths))
}

pub(crate) fn forward_kinematics_unchecked(joints: &[f64], links: &[f64]) -> Pose {
    let (mut x, mut y, mut theta) = (0.0, 0.0, 0.0);
    for (q, l) in joints.iter().zip(links) {
        theta += q;
        x += l * theta.cos();
        y += l * theta.sin();
    }
    Pose { x, y, orientation: theta }
}

/// Joint positions of every link endpoint, base first.
pub fn link_points(joints: &[f64], links: &[f64]) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(joints.len() + 1);
    let (mut x, mut y, mut theta) = (0.0, 0.0, 0.0);
    pts.push((x, y));
    for (q, l) in joints.iter().zip(links) {
        theta += q;
        x += l * theta.cos();
        y += l * theta.sin();
        pts.push((x, y));
    }
    pts
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a % two_pi;
    if w > std::f64::consts::PI {
        w -= two_pi;
    } else if w <= -std::f64::consts::PI {
        w += two_pi;
    }
    w
}

/// Closed-form inverse kinematics on the configured elbow branch.
///
/// Two joints solve position only. With three or more joints the third joint
/// sets the effector orientation and any further joints stay straight (their
/// links extend the third).
pub fn inverse_kinematics(x: f64, y: f64, orientation: f64, cfg: &ArmConfig) -> Result<Vec<f64>> {
    let d = cfg.joint_count();
    let l1 = cfg.link_lengths[0];
    let l2 = cfg.link_lengths[1];
    let (wx, wy) = if d >= 3 {
        let tail: f64 = cfg.link_lengths[2..].iter().sum();
        (x - tail * orientation.cos(), y - tail * orientation.sin())
    } else {
        (x, y)
    };
    let c2 = (wx * wx + wy * wy - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if !(-1.0..=1.0).contains(&c2) {
        return Err(Error::Unreachable { x, y });
    }
    let q2 = cfg.elbow_sign * c2.acos();
    let q1 = wy.atan2(wx) - (l2 * q2.sin()).atan2(l1 + l2 * q2.cos());
    let mut q = vec![wrap_angle(q1), q2];
    if d >= 3 {
        q.push(wrap_angle(orientation - q1 - q2));
        q.extend(std::iter::repeat(0.0).take(d - 3));
    }
    if cfg.check_joints(&q).is_err() {
        return Err(Error::Unreachable { x, y });
    }
    Ok(q)
}
