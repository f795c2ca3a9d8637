use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::DisturbanceEvent;

/// One control tick. Joint-space quantities are in scaled units; positions
/// are world coordinates after sensing, before the command is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub t: usize,
    pub disturbed: bool,
    pub alpha: f64,
    pub m: Vec<f64>,
    pub f: Vec<f64>,
    pub dm_rnn: Vec<f64>,
    pub dm_lqr: Vec<f64>,
    pub dm: Vec<f64>,
    pub effector: (f64, f64),
    pub object: (f64, f64),
    pub held: bool,
    pub placed_in: Option<usize>,
    /// The recurrent state was reset to its initial value on this tick.
    pub reset: bool,
}

/// Thresholds that turn a logged rollout into outcome flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutcomeThresholds {
    pub switch_on: f64,
    pub switch_off: f64,
    /// Sup-norm tolerance on scaled arm joints around the initial posture.
    pub home_tolerance: f64,
    /// Steps after the disturbance ends that still count as reacting to it.
    pub reaction_slack: usize,
    /// Effector distance to the resumed subtask's target, meters.
    pub resume_radius: f64,
    /// Require the gate to be fully raised on the tick the arm arrives home.
    /// When unset the gate only has to stay above `switch_off` until arrival.
    pub strict_return: bool,
}

impl Default for OutcomeThresholds {
    fn default() -> Self {
        Self {
            switch_on: 0.9,
            switch_off: 0.2,
            home_tolerance: 0.05,
            reaction_slack: 10,
            resume_radius: 0.08,
            strict_return: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct EpisodeOutcome {
    pub switched: bool,
    pub returned: bool,
    pub resumed: bool,
    pub task_success: bool,
    pub reset: bool,
    /// Switching success: no switch without a disturbance; otherwise the gate
    /// rises, stays up until the arm reaches the initial posture, then falls
    /// and the task continues.
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub id: String,
    pub object: (f64, f64),
    pub vacant_slot: usize,
    pub slot_position: (f64, f64),
    /// Scaled arm joints of the initial posture.
    pub home: Vec<f64>,
    pub disturbance: Option<DisturbanceEvent>,
    pub steps: Vec<StepLog>,
}

fn at_home(m: &[f64], home: &[f64], tol: f64) -> bool {
    m.iter().zip(home).all(|(a, b)| (a - b).abs() < tol)
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

impl EpisodeRecord {
    pub fn max_alpha(&self) -> f64 {
        self.steps.iter().map(|s| s.alpha).fold(0.0, f64::max)
    }

    /// Flags computed from the logged steps alone.
    pub fn outcome(&self, th: &OutcomeThresholds) -> EpisodeOutcome {
        let task_success = self.steps.last().is_some_and(|s| s.placed_in == Some(self.vacant_slot));
        let reset = self.steps.iter().any(|s| s.reset);
        let Some(ev) = &self.disturbance else {
            let switched = self.max_alpha() >= th.switch_on;
            return EpisodeOutcome {
                switched,
                task_success,
                reset,
                success: !switched,
                ..EpisodeOutcome::default()
            };
        };
        let horizon = ev.end() + th.reaction_slack;
        let switch_at = self
            .steps
            .iter()
            .position(|s| s.t >= ev.onset && s.t <= horizon && s.alpha >= th.switch_on);
        let switched = switch_at.is_some();
        let returned_at = switch_at.and_then(|w| {
            if th.strict_return {
                let home = |s: &StepLog| s.alpha >= th.switch_on && at_home(&s.m, &self.home, th.home_tolerance);
                return self.steps[w..].iter().position(home).map(|k| w + k);
            }
            let k = w + self.steps[w..].iter().position(|s| at_home(&s.m, &self.home, th.home_tolerance))?;
            self.steps[w..k].iter().all(|s| s.alpha >= th.switch_off).then_some(k)
        });
        let resumed = returned_at
            .and_then(|r| self.steps[r..].iter().position(|s| s.alpha < th.switch_off).map(|k| r + k))
            .is_some_and(|k| {
                let s = &self.steps[k];
                if s.placed_in.is_some() {
                    return true;
                }
                let target = if s.held { self.slot_position } else { s.object };
                self.steps[k..].iter().any(|s| distance(s.effector, target) < th.resume_radius)
            });
        let returned = returned_at.is_some();
        EpisodeOutcome {
            switched,
            returned,
            resumed,
            task_success,
            reset,
            success: switched && returned && resumed,
        }
    }

    /// One row per step after a header comment naming the columns.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let first = self.steps.first();
        let width = |f: fn(&StepLog) -> usize| first.map_or(0, f);
        let (nm, nf) = (width(|s| s.m.len()), width(|s| s.f.len()));
        let mut cols = vec!["t".to_string(), "disturbed".into(), "alpha".into()];
        for (prefix, n) in [("m", nm), ("f", nf), ("dm_rnn", nm), ("dm_lqr", nm), ("dm", nm)] {
            cols.extend((0..n).map(|i| format!("{prefix}{i}")));
        }
        cols.extend(["eff_x", "eff_y", "obj_x", "obj_y", "held", "placed_in", "reset"].map(String::from));
        let ev = self.disturbance.as_ref().map_or("none".to_string(), |e| format!("{:?} onset {} duration {}", e.kind, e.onset, e.duration));
        writeln!(
            w,
            "# episode {} object ({:.3}, {:.3}) vacant slot {} disturbance {ev}",
            self.id, self.object.0, self.object.1, self.vacant_slot
        )?;
        writeln!(w, "{}", cols.join(","))?;
        for s in &self.steps {
            let mut row = vec![s.t.to_string(), u8::from(s.disturbed).to_string(), format!("{:e}", s.alpha)];
            for v in [&s.m, &s.f, &s.dm_rnn, &s.dm_lqr, &s.dm] {
                row.extend(v.iter().map(|x| format!("{x:e}")));
            }
            row.extend([
                format!("{:e}", s.effector.0),
                format!("{:e}", s.effector.1),
                format!("{:e}", s.object.0),
                format!("{:e}", s.object.1),
                u8::from(s.held).to_string(),
                s.placed_in.map_or(String::from("-1"), |p| p.to_string()),
                u8::from(s.reset).to_string(),
            ]);
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(t: usize, alpha: f64, m: f64, held: bool) -> StepLog {
        StepLog {
            t,
            disturbed: false,
            alpha,
            m: vec![m, m, m, 0.0],
            f: vec![],
            dm_rnn: vec![0.0; 4],
            dm_lqr: vec![0.0; 4],
            dm: vec![0.0; 4],
            effector: (0.0, 0.45),
            object: (0.0, 0.6),
            held,
            placed_in: None,
            reset: false,
        }
    }

    fn record(steps: Vec<StepLog>, disturbance: Option<DisturbanceEvent>) -> EpisodeRecord {
        EpisodeRecord {
            id: "e".into(),
            object: (0.0, 0.6),
            vacant_slot: 1,
            slot_position: (0.5, 0.3),
            home: vec![0.0; 3],
            disturbance,
            steps,
        }
    }

    #[test]
    fn nominal_success_means_no_switch() {
        let r = record((0..5).map(|t| log(t, 0.1, 0.3, false)).collect(), None);
        assert!(r.outcome(&OutcomeThresholds::default()).success);
        let mut steps: Vec<StepLog> = (0..5).map(|t| log(t, 0.1, 0.3, false)).collect();
        steps[3].alpha = 0.95;
        assert!(!record(steps, None).outcome(&OutcomeThresholds::default()).success);
    }

    #[test]
    fn disturbed_flags() {
        let ev = DisturbanceEvent::freeze(2, 3).unwrap();
        let mut steps: Vec<StepLog> = (0..12).map(|t| log(t, 0.1, 0.5, false)).collect();
        for s in &mut steps[3..8] {
            s.alpha = 0.97;
        }
        steps[7].m = vec![0.01, -0.02, 0.0, 0.0];
        let th = OutcomeThresholds::default();
        let o = record(steps.clone(), Some(ev.clone())).outcome(&th);
        assert!(o.switched && o.returned && !o.resumed && !o.success);

        steps[11].effector = (0.02, 0.62);
        let o = record(steps.clone(), Some(ev.clone())).outcome(&th);
        assert!(o.resumed && o.success);

        // once holding the object, the slot is the target
        for s in &mut steps[8..] {
            s.held = true;
        }
        assert!(!record(steps.clone(), Some(ev.clone())).outcome(&th).resumed);

        // the gate may fall on the tick the arm arrives
        let mut late = steps.clone();
        late[7].alpha = 0.0;
        let o = record(late.clone(), Some(ev.clone())).outcome(&th);
        assert!(o.returned);
        let strict = OutcomeThresholds { strict_return: true, ..th.clone() };
        assert!(!record(late.clone(), Some(ev.clone())).outcome(&strict).returned);
        // but not before
        late[6].alpha = 0.1;
        late[7].alpha = 0.97;
        assert!(!record(late, Some(ev.clone())).outcome(&th).returned);

        // a completed task has nothing left to resume
        for s in &mut steps[8..] {
            s.held = false;
            s.placed_in = Some(0);
        }
        assert!(record(steps, Some(ev)).outcome(&th).resumed);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let r = record((0..3).map(|t| log(t, 0.1, 0.3, false)).collect(), None);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        r.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# episode e"));
        assert_eq!(lines.len(), 5);
        let ncols = lines[1].split(',').count();
        assert!(lines[2..].iter().all(|l| l.split(',').count() == ncols));
    }
}
