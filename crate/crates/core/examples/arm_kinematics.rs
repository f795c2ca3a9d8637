//! Forward and inverse kinematics of the planar arm, plus one rendered frame.

use hybrid_recovery::sim::{forward_kinematics, GridSpec, inverse_kinematics, render_observation, SimConfig, WorldState};

fn main() -> hybrid_recovery::Result<()> {
    let cfg = SimConfig::default();
    let home = forward_kinematics(&cfg.arm.home, &cfg.arm)?;
    println!("home posture {:?}", cfg.arm.home);
    println!("effector at ({:.3}, {:.3}), orientation {:.3}", home.x, home.y, home.orientation);

    let phi = cfg.scene.table_orientation;
    for (_, _, (x, y)) in grid_samples() {
        let q = inverse_kinematics(x, y, phi, &cfg.arm)?;
        let back = forward_kinematics(&q, &cfg.arm)?;
        println!(
            "target ({x:+.2}, {y:.2}) -> joints [{:+.3}, {:+.3}, {:+.3}] -> ({:+.4}, {:.4})",
            q[0], q[1], q[2], back.x, back.y
        );
    }

    let world = WorldState::initial(&cfg, (-0.05, 0.62), 0)?;
    let raster = render_observation(&world, &cfg);
    let (w, h) = (cfg.raster.width, cfg.raster.height);
    println!("\nobservation {w}x{h}:");
    for row in raster.chunks(w) {
        let line: String = row
            .iter()
            .map(|v| match *v {
                v if v > 0.66 => '#',
                v if v > 0.33 => '+',
                v if v > 0.05 => '.',
                _ => ' ',
            })
            .collect();
        println!("|{line}|");
    }
    Ok(())
}

fn grid_samples() -> Vec<(usize, usize, (f64, f64))> {
    let all = GridSpec::default().positions();
    vec![all[0], all[all.len() / 2], all[all.len() - 1]]
}
