//! Analytic BPTT gradients against central differences for each cell type.

use hybrid_recovery::numerics::{finite_difference_gradient, max_relative_error, SeededRng};
use hybrid_recovery::rnn::{sequence_loss_and_gradient, CellKind, RnnConfig, RnnParams};

fn main() -> hybrid_recovery::Result<()> {
    let mut rng = SeededRng::new(5);
    for kind in [CellKind::Lstm, CellKind::Gru, CellKind::Mtrnn] {
        let cfg = RnnConfig {
            kind,
            joints: 2,
            features: 2,
            hidden: 3,
            fast: 3,
            slow: 2,
            history: 2,
            ..RnnConfig::default()
        };
        let p = RnnParams::init(cfg, &mut rng)?;
        let seq: Vec<Vec<f64>> = (0..6).map(|_| (0..4).map(|_| rng.uniform_range(-0.8, 0.8)).collect()).collect();
        let (inputs, targets) = (&seq[..5], &seq[1..]);
        let (_, analytic) = sequence_loss_and_gradient(&p, inputs, targets)?;
        let numeric = finite_difference_gradient(
            |b| {
                let q = RnnParams { backbone: b.clone(), ..p.clone() };
                sequence_loss_and_gradient(&q, inputs, targets).map(|r| r.0)
            },
            &p.backbone,
            1e-6,
        )?;
        let worst = max_relative_error(&analytic, &numeric, 1e-8)
            .into_iter()
            .fold(0.0f64, |a, (_, e)| a.max(e));
        println!("{:5} {} parameters, max relative error {worst:.2e}", kind.name(), p.backbone.num_scalars());
    }
    Ok(())
}
