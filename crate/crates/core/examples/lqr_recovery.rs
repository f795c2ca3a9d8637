//! Solves the discrete Riccati equation and drives a posture back to target.

use hybrid_recovery::lqr::{LqrPlant, LqrSpec};

fn main() -> hybrid_recovery::Result<()> {
    let spec = LqrSpec::default();
    let target = vec![0.2, 0.5, 0.8];
    let plant = LqrPlant::solved(spec, target.clone())?;
    println!("gain K =\n{}", plant.gain()?);
    let mut m = vec![0.9, 0.1, 0.3];
    for t in 0..=40 {
        if t % 5 == 0 {
            let err = m.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            println!("t={t:2} m=[{:.4}, {:.4}, {:.4}] max error {err:.2e} V={:.3e}", m[0], m[1], m[2], plant.lyapunov(&m)?);
        }
        let u = plant.command(&m)?;
        for (x, du) in m.iter_mut().zip(u) {
            *x += du;
        }
    }
    Ok(())
}
