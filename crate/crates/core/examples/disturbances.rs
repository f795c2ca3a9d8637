//! Teleport and freeze disturbances applied to a constant joint command.

use hybrid_recovery::sim::{step, DisturbanceEvent, SimConfig, WorldState};

fn main() -> hybrid_recovery::Result<()> {
    let cfg = SimConfig::default();
    let command = [0.01, -0.01, 0.0, 0.0];
    let events = [
        ("teleport", DisturbanceEvent::teleport(5, 4, 42, &cfg.arm)?),
        ("freeze", DisturbanceEvent::freeze(5, 4)?),
    ];
    for (name, ev) in &events {
        println!("{name} (onset {}, duration {}):", ev.onset, ev.duration);
        let mut w = WorldState::initial(&cfg, (0.0, 0.62), 0)?;
        for _ in 0..12 {
            let next = step(&w, &command, Some(ev), &cfg)?;
            let flag = if ev.is_active(w.t) { "*" } else { " " };
            println!("  {flag} t={:2} joints [{:+.3}, {:+.3}, {:+.3}]", w.t, w.joints[0], w.joints[1], w.joints[2]);
            w = next;
        }
    }
    Ok(())
}
