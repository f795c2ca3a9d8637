//! One disturbed episode on the quick configuration, printed step by step.
//!
//! `cargo run --release --example single_episode -- [none|a|b] [episode]`

use hybrid_recovery::experiment::{Condition, ExperimentConfig, Workspace};

fn main() -> hybrid_recovery::Result<()> {
    let mut args = std::env::args().skip(1);
    let cond: Condition = args.next().as_deref().unwrap_or("a").parse()?;
    let index: usize = args.next().map_or(0, |s| s.parse().expect("episode index"));
    let cfg = ExperimentConfig::smoke();
    let (seed, cell, det) = (cfg.seeds[0], cfg.rnn.model.kind, cfg.detector);
    let ws = Workspace::open(&std::env::temp_dir().join("hybrid-recovery-smoke"), cfg)?;
    ws.gen_data()?;
    ws.train_cae()?;
    ws.train_rnn(seed, cell)?;
    ws.train_prev(seed, cell)?;
    ws.calibrate_stage(seed, cell)?;
    let run = ws.run_task(seed, cell, det, cond, index)?;
    for s in run.record.steps.iter().step_by(5) {
        println!("t={:3} alpha {:.3} disturbed {} held {}", s.t, s.alpha, s.disturbed, s.held);
    }
    println!("{:?}\nlog: {}", run.outcome, run.csv.display());
    Ok(())
}
