//! Runs every stage on the quick configuration into a scratch directory and
//! prints the report.
//!
//! `cargo run --release --example pipeline -- [out_dir]`

use hybrid_recovery::experiment::{ExperimentConfig, Workspace};

fn main() -> hybrid_recovery::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("hybrid-recovery-smoke"), Into::into);
    let ws = Workspace::open(&out, ExperimentConfig::smoke())?;
    print!("{}", ws.run_pipeline()?);
    println!("artifacts in {}", out.display());
    Ok(())
}
