//! Trains a task RNN on a handful of subtask sequences and reports how well
//! closed-loop replays return to the start state.
//!
//! `cargo run --release --example train_rnn -- [lstm|gru|mtrnn] [epochs]`

use hybrid_recovery::autoencoder::{AeConfig, AeParams};
use hybrid_recovery::experiment::data::subtask_sequences;
use hybrid_recovery::numerics::SeededRng;
use hybrid_recovery::rnn::{closure_stats, train_task, CellKind, RnnConfig, RnnParams, RnnTrainConfig};
use hybrid_recovery::sim::{build_dataset, GridSpec, SimConfig, Split};

fn main() -> hybrid_recovery::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: CellKind = args.next().as_deref().unwrap_or("lstm").parse()?;
    let epochs: usize = args.next().map_or(30, |s| s.parse().expect("epochs"));
    let ds = build_dataset(&GridSpec::default(), 1, &SimConfig::default())?;
    // untrained encoder: features are fixed random projections here
    let ae = AeParams::init(AeConfig::default(), &mut SeededRng::new(1))?;
    let mut seqs = subtask_sequences(&ds, Split::Train, &ae)?;
    seqs.truncate(6);
    let cfg = RnnConfig { kind, ..RnnConfig::default() };
    let init = RnnParams::init(cfg, &mut SeededRng::derive(11, "init"))?;
    let train = RnnTrainConfig {
        epochs,
        batch_size: 2,
        ..RnnTrainConfig::default()
    };
    let run = train_task(init, &seqs, &train, None, &mut SeededRng::derive(11, "train"))?;
    for (e, l) in run.loss_curve.iter().enumerate().step_by(5.max(epochs / 10)) {
        println!("{} epoch {e:4} loss {l:.4}", kind.name());
    }
    let c = closure_stats(&run.params, &seqs)?;
    println!("closure gap {:.4}, spread {:.4}, ratio {:.4}", c.gap, c.spread, c.ratio());
    Ok(())
}
