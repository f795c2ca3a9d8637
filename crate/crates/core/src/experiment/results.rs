//! Aggregated success rates and their text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::episodes::Condition;
use crate::gate::{DetectorKind, EpisodeOutcome};
use crate::rnn::CellKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Controller-switching success.
    Switching,
    /// Object placed in the vacant slot.
    Task,
}

/// Sample mean and standard deviation (`n - 1` denominator, 0 for one value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One (detector, setting, cell, condition) cell of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub metric: Metric,
    pub detector: DetectorKind,
    /// `tuned` for the validation-selected gate, `default` for the configured one.
    pub setting: String,
    pub cell: CellKind,
    pub condition: Condition,
    pub beta: f64,
    pub gamma: f64,
    pub seeds: Vec<u64>,
    /// Percent per seed, in `seeds` order.
    pub rates: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub episodes_per_seed: usize,
    pub config_hash: String,
}

impl ResultRow {
    /// Fills `rates`, `mean` and `sd` from per-seed success counts.
    #[allow(clippy::too_many_arguments)]
    pub fn from_counts(
        metric: Metric,
        detector: DetectorKind,
        setting: &str,
        cell: CellKind,
        condition: Condition,
        (beta, gamma): (f64, f64),
        per_seed: &[(u64, usize, usize)],
        config_hash: &str,
    ) -> Self {
        let rates: Vec<f64> = per_seed
            .iter()
            .map(|&(_, ok, n)| if n == 0 { 0.0 } else { 100.0 * ok as f64 / n as f64 })
            .collect();
        let (mean, sd) = mean_sd(&rates);
        Self {
            metric,
            detector,
            setting: setting.to_string(),
            cell,
            condition,
            beta,
            gamma,
            seeds: per_seed.iter().map(|p| p.0).collect(),
            rates,
            mean,
            sd,
            episodes_per_seed: per_seed.first().map_or(0, |p| p.2),
            config_hash: config_hash.to_string(),
        }
    }
}

/// One line of an episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub id: String,
    pub seed: u64,
    pub detector: DetectorKind,
    pub setting: String,
    pub cell: CellKind,
    pub condition: Condition,
    pub onset: Option<usize>,
    pub steps: usize,
    pub max_alpha: f64,
    pub outcome: EpisodeOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

fn cell_text(row: Option<&ResultRow>) -> String {
    match row {
        Some(r) if r.seeds.len() > 1 => format!("{:.1} ± {:.1}", r.mean, r.sd),
        Some(r) => format!("{:.1}", r.mean),
        None => "-".into(),
    }
}

impl ResultsTable {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            (a.metric, a.cell.name(), a.detector.name(), &a.setting, a.condition.name()).cmp(&(
                b.metric,
                b.cell.name(),
                b.detector.name(),
                &b.setting,
                b.condition.name(),
            ))
        });
    }

    pub fn find(&self, metric: Metric, detector: DetectorKind, setting: &str, cell: CellKind, condition: Condition) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.metric == metric && r.detector == detector && r.setting == setting && r.cell == cell && r.condition == condition
        })
    }

    /// Markdown tables, one per metric, conditions as columns.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (metric, title) in [(Metric::Switching, "Switching success (%)"), (Metric::Task, "Task success (%)")] {
            let mut keys: Vec<(CellKind, DetectorKind, String, f64, f64)> = Vec::new();
            for r in self.rows.iter().filter(|r| r.metric == metric) {
                let k = (r.cell, r.detector, r.setting.clone(), r.beta, r.gamma);
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
            if keys.is_empty() {
                continue;
            }
            let _ = writeln!(out, "## {title}\n");
            let _ = writeln!(out, "| cell | detector | setting | beta | gamma | none | A | B |");
            let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
            for (cell, det, setting, beta, gamma) in keys {
                let cols: Vec<String> = Condition::ALL
                    .iter()
                    .map(|&c| cell_text(self.find(metric, det, &setting, cell, c)))
                    .collect();
                let _ = writeln!(
                    out,
                    "| {} | {} | {setting} | {beta} | {gamma} | {} |",
                    cell.name(),
                    det.name(),
                    cols.join(" | ")
                );
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sample_sd() {
        let (m, s) = mean_sd(&[90.0, 95.0, 100.0]);
        assert!((m - 95.0).abs() < 1e-12);
        assert!((s - 5.0).abs() < 1e-12);
        assert_eq!(mean_sd(&[42.0]), (42.0, 0.0));
    }

    #[test]
    fn rows_render_by_condition() {
        let mut t = ResultsTable::default();
        for (c, ok) in [(Condition::None, 40), (Condition::A, 30), (Condition::B, 20)] {
            t.rows.push(ResultRow::from_counts(
                Metric::Switching,
                DetectorKind::Prev,
                "tuned",
                CellKind::Lstm,
                c,
                (30.0, 3.0),
                &[(11, ok, 40), (22, ok, 40)],
                "h",
            ));
        }
        t.sort();
        let text = t.render();
        assert!(text.contains("| lstm | prev | tuned | 30 | 3 | 100.0 ± 0.0 | 75.0 ± 0.0 | 50.0 ± 0.0 |"), "{text}");
        assert!(!text.contains("Task success"));
    }
}
