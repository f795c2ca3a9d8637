//! Switching weight as a function of recall error, and the blended command.

use hybrid_recovery::gate::{blend_command, compute_alpha, BlendMode};

fn main() -> hybrid_recovery::Result<()> {
    let calibration = [0.01, 0.02, 0.03];
    let (beta, gamma) = (100.0, 3.0);
    println!("beta {beta}, gamma {gamma}, calibration {calibration:?}");
    for scale in [0.0, 1.0, 2.0, 3.0, 4.0, 6.0] {
        let scores: Vec<Option<f64>> = calibration.iter().map(|c| Some(scale * c)).collect();
        let alpha = compute_alpha(beta, gamma, &calibration, &scores)?.expect("scored");
        println!("  errors = {scale:.0} x nominal -> alpha {alpha:.4}");
    }
    let partial = [Some(0.5), None, None];
    println!("only lag 1 scored: alpha {:.4}", compute_alpha(beta, gamma, &calibration, &partial)?.unwrap());

    let rnn = [0.02, -0.01, 0.00, 0.1];
    let lqr = [-0.05, 0.04, 0.01, 0.0];
    for alpha in [0.0, 0.5, 1.0] {
        let u = blend_command(alpha, &rnn, &lqr, BlendMode::Unscaled)?;
        let v = blend_command(alpha, &rnn, &lqr, BlendMode::Convex)?;
        println!("alpha {alpha}: unscaled {u:?}\n           convex   {v:?}");
    }
    Ok(())
}
