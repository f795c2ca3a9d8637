//! Stage-artifact pipeline. Every stage reads its inputs from the artifacts
//! directory, writes its outputs there, and is skipped when they exist.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::data::{episode_recordings, position_groups, subtask_sequences};
use super::episodes::{episode_specs, Condition, EpisodePlan};
use super::results::{EpisodeSummary, Metric, ResultRow, ResultsTable};
use crate::autoencoder::{train_cae, AeParams};
use crate::error::{Error, Result};
use crate::gate::{
    calibrate, calibrate_baseline, run_episode, run_episode_traced, scaled_home, BaselineDetector, Detector,
    DetectorKind, EpisodeOutcome, EpisodeRecord, EpisodeSpec, GateConfig, Models,
};
use crate::lqr::LqrPlant;
use crate::numerics::{pca_fit, SeededRng};
use crate::rnn::{
    closure_stats, collect_head_samples, train_previous_head, train_task, write_per_lag_csv, CellKind, ClosureStats,
    Feed, RnnParams, TaskSequence,
};
use crate::sim::{build_dataset, Dataset, SimConfig, Split};

const EVAL_STREAM: &str = "eval";
const TUNE_STREAM: &str = "tune";

/// Summary statistics of one trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    pub seed: u64,
    pub cell: CellKind,
    pub final_task_loss: f64,
    pub closure: ClosureStats,
}

/// Fitted window detector and its leave-one-position-out calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub model: BaselineDetector,
    pub calibration: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub config_hash: String,
    pub knn: BaselineFit,
    pub sm: BaselineFit,
}

/// Nominal previous-prediction error of one trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub config_hash: String,
    pub seed: u64,
    pub cell: CellKind,
    pub previous: Vec<f64>,
}

/// One evaluated point of the validation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub detector: DetectorKind,
    pub beta: f64,
    pub gamma: f64,
    /// Switching success percent for none, A and B.
    pub rates: [f64; 3],
    /// Task success percent for none, A and B.
    pub task: [f64; 3],
    /// Mean of `rates` and `task` over all six entries.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub detector: DetectorKind,
    pub beta: f64,
    pub gamma: f64,
    pub mean: f64,
}

/// Gate settings selected on validation episodes of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub config_hash: String,
    pub seed: u64,
    pub cell: CellKind,
    pub points: Vec<GridPoint>,
    pub chosen: Vec<Choice>,
}

impl Tuning {
    pub fn choice(&self, detector: DetectorKind) -> Option<&Choice> {
        self.chosen.iter().find(|c| c.detector == detector)
    }
}

/// Result of `run-task`.
#[derive(Debug, Clone)]
pub struct TaskRun {
    pub record: EpisodeRecord,
    pub outcome: EpisodeOutcome,
    pub csv: PathBuf,
}

/// Artifacts directory bound to one configuration.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
    config: ExperimentConfig,
    hash: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn write_curve(path: &Path, header: &str, values: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "epoch,{header}")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(f, "{i},{v:e}")?;
    }
    Ok(())
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for it in items {
        writeln!(f, "{}", serde_json::to_string(it)?)?;
    }
    Ok(())
}

fn missing(stage: &str, requires: &str, path: &Path) -> Error {
    Error::MissingArtifact {
        stage: stage.into(),
        requires: requires.into(),
        path: path.to_path_buf(),
    }
}

fn success_count(records: &[EpisodeRecord], cfg: &ExperimentConfig, pick: impl Fn(&EpisodeOutcome) -> bool) -> usize {
    records
        .iter()
        .filter(|r| pick(&r.outcome(&cfg.runtime.thresholds)))
        .count()
}

/// Arm-joint channels of each recording, the input of the window baselines.
pub fn arm_recordings(recordings: &[TaskSequence], sim: &SimConfig) -> Vec<Vec<Vec<f64>>> {
    let arm = sim.arm.joint_count();
    recordings
        .iter()
        .map(|r| r.joints.iter().map(|m| m[..arm].to_vec()).collect())
        .collect()
}

/// Runs episodes in parallel; results keep the order of `specs`.
pub fn run_episodes(models: Models<'_>, detector: &Detector, gate: &GateConfig, cfg: &ExperimentConfig, specs: &[EpisodeSpec]) -> Result<Vec<EpisodeRecord>> {
    specs
        .par_iter()
        .map(|s| run_episode(models, detector, gate, &cfg.runtime, s))
        .collect()
}

impl Workspace {
    /// Opens (or creates) `root` for `config`. An existing directory made
    /// with a different configuration is refused.
    pub fn open(root: &Path, config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let hash = config.hash()?;
        fs::create_dir_all(root)?;
        let stamp = root.join("config.hash");
        if stamp.exists() {
            let found = fs::read_to_string(&stamp)?.trim().to_string();
            if found != hash {
                return Err(Error::ConfigMismatch { expected: hash, found });
            }
        } else {
            fs::write(root.join("config.toml"), config.to_toml()?)?;
            fs::write(&stamp, format!("{hash}\n"))?;
        }
        Ok(Self {
            root: root.to_path_buf(),
            config,
            hash,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    fn cae_path(&self) -> PathBuf {
        self.root.join("cae").join("cae.bin")
    }

    pub fn model_dir(&self, seed: u64, cell: CellKind) -> PathBuf {
        self.root.join("models").join(format!("{}_seed{seed}", cell.name()))
    }

    fn backbone_path(&self, seed: u64, cell: CellKind) -> PathBuf {
        self.model_dir(seed, cell).join("rnn.backbone.bin")
    }

    fn head_path(&self, seed: u64, cell: CellKind) -> PathBuf {
        self.model_dir(seed, cell).join("rnn.head.bin")
    }

    fn calibration_path(&self, seed: u64, cell: CellKind) -> PathBuf {
        self.model_dir(seed, cell).join("calibration.json")
    }

    fn baselines_path(&self) -> PathBuf {
        self.root.join("calibration").join("baselines.json")
    }

    fn tuning_path(&self, cell: CellKind) -> PathBuf {
        self.root.join("calibration").join(format!("tuning_{}.json", cell.name()))
    }

    pub fn results_dir(&self) -> PathBuf {
        self.root.join("results")
    }

    fn check_hash(&self, found: &str) -> Result<()> {
        if found != self.hash {
            return Err(Error::ConfigMismatch {
                expected: self.hash.clone(),
                found: found.to_string(),
            });
        }
        Ok(())
    }

    /// Cells that need trained models: the switching cell and the task cells.
    pub fn cells(&self) -> Vec<CellKind> {
        let mut cells = vec![self.config.rnn.model.kind];
        for c in &self.config.rnn.task_cells {
            if !cells.contains(c) {
                cells.push(*c);
            }
        }
        cells
    }

    // ---- gen-data -------------------------------------------------------

    pub fn gen_data(&self) -> Result<Dataset> {
        let dir = self.data_dir();
        if Dataset::manifest_path(&dir).exists() {
            return Dataset::load(&dir);
        }
        let t = Instant::now();
        let c = &self.config;
        let ds = build_dataset(&c.data.grid, c.data.split_seed, &c.sim).map_err(|e| e.in_stage("gen-data"))?;
        ds.save(&dir)?;
        info!(
            "gen-data: {} train / {} validation trajectories in {:.1?}",
            ds.train.len(),
            ds.validation.len(),
            t.elapsed()
        );
        Ok(ds)
    }

    pub fn dataset(&self, stage: &str) -> Result<Dataset> {
        let dir = self.data_dir();
        if !Dataset::manifest_path(&dir).exists() {
            return Err(missing(stage, "gen-data", &Dataset::manifest_path(&dir)));
        }
        Dataset::load(&dir)
    }

    // ---- train-cae ------------------------------------------------------

    pub fn train_cae(&self) -> Result<AeParams> {
        let path = self.cae_path();
        if path.exists() {
            return AeParams::load(&path, self.config.cae.model.clone());
        }
        let ds = self.dataset("train-cae")?;
        let t = Instant::now();
        let c = &self.config.cae;
        let rasters: Vec<Vec<f64>> = ds.train.iter().flat_map(|t| t.rasters.iter().cloned()).collect();
        let init = AeParams::init(c.model.clone(), &mut SeededRng::derive(c.seed, "cae/init"))?;
        let trained = train_cae(&rasters, init, &c.train, &mut SeededRng::derive(c.seed, "cae/train"))
            .map_err(|e| e.in_stage("train-cae"))?;
        fs::create_dir_all(path.parent().unwrap_or(&self.root))?;
        write_curve(&path.with_file_name("loss.csv"), "loss", &trained.loss_curve)?;
        trained.params.save(&path)?;
        info!(
            "train-cae: loss {:.4} -> {:.4}, pixel mse {:.5} in {:.1?}",
            trained.loss_curve[0],
            trained.loss_curve.last().copied().unwrap_or(f64::NAN),
            trained.params.pixel_mse(&rasters)?,
            t.elapsed()
        );
        Ok(trained.params)
    }

    pub fn encoder(&self, stage: &str) -> Result<AeParams> {
        let path = self.cae_path();
        if !path.exists() {
            return Err(missing(stage, "train-cae", &path));
        }
        AeParams::load(&path, self.config.cae.model.clone())
    }

    // ---- train-rnn / train-prev ----------------------------------------

    pub fn train_rnn(&self, seed: u64, cell: CellKind) -> Result<RnnParams> {
        let path = self.backbone_path(seed, cell);
        let model = self.config.rnn_model(cell);
        if path.exists() {
            return RnnParams::load(model, &path, None);
        }
        let ds = self.dataset("train-rnn")?;
        let ae = self.encoder("train-rnn")?;
        let t = Instant::now();
        let seqs = subtask_sequences(&ds, Split::Train, &ae)?;
        let tag = cell.name();
        let init = RnnParams::init(model, &mut SeededRng::derive(seed, &format!("{tag}/init")))?;
        let trained = train_task(init, &seqs, &self.config.rnn.train, Some(&ae), &mut SeededRng::derive(seed, &format!("{tag}/train")))
            .map_err(|e| e.in_stage("train-rnn"))?;
        let closure = closure_stats(&trained.params, &seqs)?;
        let dir = self.model_dir(seed, cell);
        fs::create_dir_all(&dir)?;
        write_curve(&dir.join("task_loss.csv"), "loss", &trained.loss_curve)?;
        let stats = ModelStats {
            seed,
            cell,
            final_task_loss: trained.loss_curve.last().copied().unwrap_or(f64::NAN),
            closure,
        };
        write_json(&dir.join("model.json"), &stats)?;
        trained.params.save_backbone(&path)?;
        info!(
            "train-rnn {tag} seed {seed}: loss {:.4}, closure ratio {:.2e} in {:.1?}",
            stats.final_task_loss,
            closure.ratio(),
            t.elapsed()
        );
        Ok(trained.params)
    }

    pub fn model_stats(&self, seed: u64, cell: CellKind) -> Result<ModelStats> {
        let path = self.model_dir(seed, cell).join("model.json");
        if !path.exists() {
            return Err(missing("report", "train-rnn", &path));
        }
        read_json(&path)
    }

    pub fn train_prev(&self, seed: u64, cell: CellKind) -> Result<RnnParams> {
        let head = self.head_path(seed, cell);
        let backbone = self.backbone_path(seed, cell);
        if !backbone.exists() {
            return Err(missing("train-prev", "train-rnn", &backbone));
        }
        let model = self.config.rnn_model(cell);
        if head.exists() {
            return RnnParams::load(model, &backbone, Some(&head));
        }
        let p = RnnParams::load(model, &backbone, None)?;
        let ds = self.dataset("train-prev")?;
        let ae = self.encoder("train-prev")?;
        let t = Instant::now();
        let recs = episode_recordings(&ds, Split::Train, &ae)?;
        let samples = collect_head_samples(&p, &recs)?;
        let rng = &mut SeededRng::derive(seed, &format!("{}/head", cell.name()));
        let trained = train_previous_head(&p, &samples, &self.config.head, rng).map_err(|e| e.in_stage("train-prev"))?;
        let dir = self.model_dir(seed, cell);
        write_curve(&dir.join("head_loss.csv"), "loss", &trained.loss_curve)?;
        write_per_lag_csv(&dir.join("per_lag.csv"), &trained.per_lag)?;
        trained.params.save_head(&head)?;
        info!(
            "train-prev {} seed {seed}: per-lag loss {:.4}..{:.4} in {:.1?}",
            cell.name(),
            trained.per_lag.first().copied().unwrap_or(f64::NAN),
            trained.per_lag.last().copied().unwrap_or(f64::NAN),
            t.elapsed()
        );
        Ok(trained.params)
    }

    /// Per-lag head loss written by `train-prev`.
    pub fn per_lag(&self, seed: u64, cell: CellKind) -> Result<Vec<f64>> {
        let path = self.model_dir(seed, cell).join("per_lag.csv");
        if !path.exists() {
            return Err(missing("report", "train-prev", &path));
        }
        let text = fs::read_to_string(&path)?;
        text.lines()
            .skip(1)
            .map(|l| {
                l.split(',').nth(1).and_then(|v| v.parse().ok()).ok_or_else(|| Error::Format {
                    path: path.clone(),
                    reason: format!("bad row `{l}`"),
                })
            })
            .collect()
    }

    pub fn model(&self, seed: u64, cell: CellKind, stage: &str) -> Result<RnnParams> {
        let backbone = self.backbone_path(seed, cell);
        if !backbone.exists() {
            return Err(missing(stage, "train-rnn", &backbone));
        }
        let head = self.head_path(seed, cell);
        if !head.exists() {
            return Err(missing(stage, "train-prev", &head));
        }
        RnnParams::load(self.config.rnn_model(cell), &backbone, Some(&head))
    }

    // ---- calibrate ------------------------------------------------------

    pub fn fit_baselines(&self) -> Result<Baselines> {
        let path = self.baselines_path();
        if path.exists() {
            let b: Baselines = read_json(&path)?;
            self.check_hash(&b.config_hash)?;
            return Ok(b);
        }
        let ds = self.dataset("calibrate")?;
        let ae = self.encoder("calibrate")?;
        let recs = episode_recordings(&ds, Split::Train, &ae)?;
        let raw = arm_recordings(&recs, &self.config.sim);
        let groups = position_groups(&ds, Split::Train);
        let fit = |kind| -> Result<BaselineFit> {
            let (model, calibration) = calibrate_baseline(&raw, &groups, kind, &self.config.gate).map_err(|e| e.in_stage("calibrate"))?;
            Ok(BaselineFit { model, calibration })
        };
        let b = Baselines {
            config_hash: self.hash.clone(),
            knn: fit(DetectorKind::Knn)?,
            sm: fit(DetectorKind::Sm)?,
        };
        write_json(&path, &b)?;
        Ok(b)
    }

    pub fn baselines(&self, stage: &str) -> Result<Baselines> {
        let path = self.baselines_path();
        if !path.exists() {
            return Err(missing(stage, "calibrate", &path));
        }
        let b: Baselines = read_json(&path)?;
        self.check_hash(&b.config_hash)?;
        Ok(b)
    }

    pub fn calibrate(&self, seed: u64, cell: CellKind) -> Result<Calibration> {
        let path = self.calibration_path(seed, cell);
        if path.exists() {
            let c: Calibration = read_json(&path)?;
            self.check_hash(&c.config_hash)?;
            return Ok(c);
        }
        let p = self.model(seed, cell, "calibrate")?;
        let ds = self.dataset("calibrate")?;
        let ae = self.encoder("calibrate")?;
        let recs = episode_recordings(&ds, Split::Train, &ae)?;
        let g = &self.config.gate;
        let rng = &mut SeededRng::derive(seed, &format!("{}/calibrate", cell.name()));
        let previous = calibrate(&p, &recs, g.calibration_trials, g.calibration, rng).map_err(|e| e.in_stage("calibrate"))?;
        let c = Calibration {
            config_hash: self.hash.clone(),
            seed,
            cell,
            previous,
        };
        write_json(&path, &c)?;
        info!("calibrate {} seed {seed}: l_bar {:?}", cell.name(), c.previous);
        Ok(c)
    }

    pub fn calibration(&self, seed: u64, cell: CellKind, stage: &str) -> Result<Calibration> {
        let path = self.calibration_path(seed, cell);
        if !path.exists() {
            return Err(missing(stage, "calibrate", &path));
        }
        let c: Calibration = read_json(&path)?;
        self.check_hash(&c.config_hash)?;
        Ok(c)
    }

    fn detector(&self, kind: DetectorKind, cal: &Calibration, baselines: &Baselines) -> Detector {
        match kind {
            DetectorKind::Prev => Detector::Previous {
                calibration: cal.previous.clone(),
            },
            DetectorKind::Knn => Detector::Baseline {
                model: baselines.knn.model.clone(),
                calibration: baselines.knn.calibration.clone(),
            },
            DetectorKind::Sm => Detector::Baseline {
                model: baselines.sm.model.clone(),
                calibration: baselines.sm.calibration.clone(),
            },
        }
    }

    fn lqr(&self, ds: &Dataset) -> Result<LqrPlant> {
        LqrPlant::solved(self.config.lqr.clone(), scaled_home(&self.config.sim, &ds.norm))
    }

    fn gate_with(&self, beta: f64, gamma: f64) -> GateConfig {
        GateConfig {
            beta,
            gamma,
            ..self.config.gate.clone()
        }
    }

    /// Selects `(beta, gamma)` for each detector on validation episodes of
    /// the first seed's model, maximizing the mean of switching and task
    /// success over the three conditions. Earlier grid points win ties. Existing choices are
    /// kept; missing detectors are added.
    pub fn tune(&self, cell: CellKind, detectors: &[DetectorKind]) -> Result<Tuning> {
        let path = self.tuning_path(cell);
        let seed = self.config.seeds[0];
        let mut tuning = if path.exists() {
            let t: Tuning = read_json(&path)?;
            self.check_hash(&t.config_hash)?;
            t
        } else {
            Tuning {
                config_hash: self.hash.clone(),
                seed,
                cell,
                points: Vec::new(),
                chosen: Vec::new(),
            }
        };
        let todo: Vec<DetectorKind> = detectors.iter().copied().filter(|d| tuning.choice(*d).is_none()).collect();
        if todo.is_empty() {
            return Ok(tuning);
        }
        let c = &self.config;
        let ds = self.dataset("calibrate")?;
        let ae = self.encoder("calibrate")?;
        let p = self.model(seed, cell, "calibrate")?;
        let cal = self.calibrate(seed, cell)?;
        let baselines = self.fit_baselines()?;
        let lqr = self.lqr(&ds)?;
        let models = Models {
            sim: &c.sim,
            norm: &ds.norm,
            encoder: &ae,
            rnn: &p,
            lqr: &lqr,
        };
        let plan = EpisodePlan {
            per_pairing: c.tuning.per_pairing,
            ..c.episodes.clone()
        };
        let specs: Vec<Vec<EpisodeSpec>> = Condition::ALL
            .iter()
            .map(|&cond| episode_specs(&ds, cond, seed, TUNE_STREAM, &plan, &c.sim))
            .collect::<Result<_>>()?;
        let grid: Vec<(f64, f64)> = if c.tuning.enabled {
            c.tuning.betas.iter().flat_map(|&b| c.tuning.gammas.iter().map(move |&g| (b, g))).collect()
        } else {
            vec![(c.gate.beta, c.gate.gamma)]
        };
        for det in todo {
            let t = Instant::now();
            let detector = self.detector(det, &cal, &baselines);
            let mut best: Option<GridPoint> = None;
            for &(beta, gamma) in &grid {
                let gate = self.gate_with(beta, gamma);
                let mut rates = [0.0; 3];
                let mut task = [0.0; 3];
                for (k, s) in specs.iter().enumerate() {
                    let recs = run_episodes(models, &detector, &gate, c, s).map_err(|e| e.in_stage("calibrate"))?;
                    let n = s.len().max(1) as f64;
                    rates[k] = 100.0 * success_count(&recs, c, |o| o.success) as f64 / n;
                    task[k] = 100.0 * success_count(&recs, c, |o| o.task_success) as f64 / n;
                }
                let point = GridPoint {
                    detector: det,
                    beta,
                    gamma,
                    rates,
                    task,
                    mean: rates.iter().chain(&task).sum::<f64>() / 6.0,
                };
                if best.as_ref().is_none_or(|b| point.mean > b.mean) {
                    best = Some(point.clone());
                }
                tuning.points.push(point);
            }
            let b = best.ok_or_else(|| Error::Config("empty tuning grid".into()))?;
            info!(
                "tune {} {}: beta {} gamma {} (switching {:?}, task {:?}) in {:.1?}",
                cell.name(),
                det.name(),
                b.beta,
                b.gamma,
                b.rates,
                b.task,
                t.elapsed()
            );
            tuning.chosen.push(Choice {
                detector: det,
                beta: b.beta,
                gamma: b.gamma,
                mean: b.mean,
            });
        }
        write_json(&path, &tuning)?;
        Ok(tuning)
    }

    pub fn tuning(&self, cell: CellKind, stage: &str) -> Result<Tuning> {
        let path = self.tuning_path(cell);
        if !path.exists() {
            return Err(missing(stage, "calibrate", &path));
        }
        let t: Tuning = read_json(&path)?;
        self.check_hash(&t.config_hash)?;
        Ok(t)
    }

    fn tuned_gate(&self, tuning: &Tuning, det: DetectorKind, stage: &str) -> Result<GateConfig> {
        let ch = tuning
            .choice(det)
            .ok_or_else(|| missing(stage, "calibrate", &self.tuning_path(tuning.cell)))?;
        Ok(self.gate_with(ch.beta, ch.gamma))
    }

    /// Calibration stage for one model: nominal recall error, the window
    /// baselines and, for the first seed, the gate grid search.
    pub fn calibrate_stage(&self, seed: u64, cell: CellKind) -> Result<()> {
        self.calibrate(seed, cell)?;
        self.fit_baselines()?;
        if seed == self.config.seeds[0] {
            self.tune(cell, &self.tuned_detectors(cell))?;
        }
        Ok(())
    }

    fn tuned_detectors(&self, cell: CellKind) -> Vec<DetectorKind> {
        if cell == self.config.rnn.model.kind {
            DetectorKind::ALL.to_vec()
        } else {
            vec![self.config.detector]
        }
    }

    // ---- evaluation -----------------------------------------------------

    fn write_episode_csvs(&self, sub: &str, records: &[EpisodeRecord]) -> Result<()> {
        if !self.config.episode_csv {
            return Ok(());
        }
        let dir = self.results_dir().join("episodes").join(sub);
        fs::create_dir_all(&dir)?;
        for r in records {
            r.write_csv(&dir.join(format!("{}.csv", r.id)))?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &self,
        metric: Metric,
        cell: CellKind,
        det: DetectorKind,
        setting: &str,
        gate: &GateConfig,
        condition: Condition,
        seeds: &[u64],
        stage: &str,
    ) -> Result<ResultRow> {
        let c = &self.config;
        let ds = self.dataset(stage)?;
        let ae = self.encoder(stage)?;
        let lqr = self.lqr(&ds)?;
        let baselines = self.baselines(stage)?;
        let mut per_seed = Vec::new();
        let mut summaries = Vec::new();
        for &seed in seeds {
            let p = self.model(seed, cell, stage)?;
            let cal = self.calibration(seed, cell, stage)?;
            let detector = self.detector(det, &cal, &baselines);
            let models = Models {
                sim: &c.sim,
                norm: &ds.norm,
                encoder: &ae,
                rnn: &p,
                lqr: &lqr,
            };
            let specs = episode_specs(&ds, condition, seed, EVAL_STREAM, &c.episodes, &c.sim)?;
            if specs.is_empty() {
                return Err(Error::Invalid("no validation pairings to evaluate".into()));
            }
            let records = run_episodes(models, &detector, gate, c, &specs).map_err(|e| e.in_stage(stage))?;
            let ok = match metric {
                Metric::Switching => success_count(&records, c, |o| o.success),
                Metric::Task => success_count(&records, c, |o| o.task_success),
            };
            per_seed.push((seed, ok, records.len()));
            for r in &records {
                summaries.push(EpisodeSummary {
                    id: r.id.clone(),
                    seed,
                    detector: det,
                    setting: setting.to_string(),
                    cell,
                    condition,
                    onset: r.disturbance.as_ref().map(|e| e.onset),
                    steps: r.steps.len(),
                    max_alpha: r.max_alpha(),
                    outcome: r.outcome(&c.runtime.thresholds),
                });
            }
            self.write_episode_csvs(&format!("{}_{}_{}_seed{seed}", cell.name(), det.name(), setting), &records)?;
        }
        let row = ResultRow::from_counts(metric, det, setting, cell, condition, (gate.beta, gate.gamma), &per_seed, &self.hash);
        let dir = self.results_dir().join(match metric {
            Metric::Switching => "switching",
            Metric::Task => "task",
        });
        let stem = format!("{}_{}_{}_{}", cell.name(), det.name(), setting, condition.name());
        write_json(&dir.join(format!("{stem}.json")), &row)?;
        write_lines(&dir.join(format!("{stem}.episodes.jsonl")), &summaries)?;
        info!(
            "{stage} {} {} {setting} {}: {:.1} ± {:.1} %",
            cell.name(),
            det.name(),
            condition.name(),
            row.mean,
            row.sd
        );
        Ok(row)
    }

    /// Switching success per detector and condition, with the tuned gate
    /// and, when different, the configured one.
    pub fn eval_switching(&self, cell: CellKind, seeds: &[u64], detectors: &[DetectorKind], conditions: &[Condition]) -> Result<Vec<ResultRow>> {
        let stage = "eval-switching";
        let tuning = self.tuning(cell, stage)?;
        let mut rows = Vec::new();
        for &det in detectors {
            let tuned = self.tuned_gate(&tuning, det, stage)?;
            let mut settings = vec![("tuned", tuned.clone())];
            if tuned != self.config.gate {
                settings.push(("default", self.config.gate.clone()));
            }
            for (name, gate) in &settings {
                for &cond in conditions {
                    rows.push(self.evaluate(Metric::Switching, cell, det, name, gate, cond, seeds, stage)?);
                }
            }
        }
        Ok(rows)
    }

    /// Task completion of the configured detector for each cell.
    pub fn eval_task(&self, cells: &[CellKind], seeds: &[u64], conditions: &[Condition]) -> Result<Vec<ResultRow>> {
        let stage = "eval-task";
        let det = self.config.detector;
        let mut rows = Vec::new();
        for &cell in cells {
            let tuning = self.tuning(cell, stage)?;
            let gate = self.tuned_gate(&tuning, det, stage)?;
            for &cond in conditions {
                rows.push(self.evaluate(Metric::Task, cell, det, "tuned", &gate, cond, seeds, stage)?);
            }
        }
        Ok(rows)
    }

    fn single_episode(
        &self,
        seed: u64,
        cell: CellKind,
        det: DetectorKind,
        condition: Condition,
        index: usize,
        stage: &str,
    ) -> Result<(EpisodeRecord, Vec<Vec<f64>>)> {
        let c = &self.config;
        let ds = self.dataset(stage)?;
        let ae = self.encoder(stage)?;
        let lqr = self.lqr(&ds)?;
        let p = self.model(seed, cell, stage)?;
        let cal = self.calibration(seed, cell, stage)?;
        let baselines = self.baselines(stage)?;
        let gate = self.tuned_gate(&self.tuning(cell, stage)?, det, stage)?;
        let detector = self.detector(det, &cal, &baselines);
        let specs = episode_specs(&ds, condition, seed, EVAL_STREAM, &c.episodes, &c.sim)?;
        let spec = specs
            .get(index)
            .ok_or_else(|| Error::Invalid(format!("episode index {index} out of range (0..{})", specs.len())))?;
        let models = Models {
            sim: &c.sim,
            norm: &ds.norm,
            encoder: &ae,
            rnn: &p,
            lqr: &lqr,
        };
        run_episode_traced(models, &detector, &gate, &c.runtime, spec).map_err(|e| e.in_stage(stage))
    }

    /// One evaluation episode, logged to CSV.
    pub fn run_task(&self, seed: u64, cell: CellKind, det: DetectorKind, condition: Condition, index: usize) -> Result<TaskRun> {
        let (record, _) = self.single_episode(seed, cell, det, condition, index, "run-task")?;
        let outcome = record.outcome(&self.config.runtime.thresholds);
        let dir = self.results_dir().join("runs");
        fs::create_dir_all(&dir)?;
        let csv = dir.join(format!("{}_seed{seed}_{}_{}.csv", cell.name(), det.name(), record.id));
        record.write_csv(&csv)?;
        write_json(&csv.with_extension("json"), &outcome)?;
        Ok(TaskRun { record, outcome, csv })
    }

    /// Projects the context trace of one episode onto the three leading
    /// principal axes of teacher-forced training replays.
    pub fn export_pca(&self, seed: u64, cell: CellKind, det: DetectorKind, condition: Condition, index: usize) -> Result<PathBuf> {
        let stage = "export-pca";
        let ds = self.dataset(stage)?;
        let ae = self.encoder(stage)?;
        let p = self.model(seed, cell, stage)?;
        let mut contexts = Vec::new();
        for r in episode_recordings(&ds, Split::Train, &ae)? {
            contexts.extend(p.sequence_forward(&r.frames(), Feed::Teacher)?.contexts);
        }
        let pca = pca_fit(&contexts, 3)?;
        let (record, trace) = self.single_episode(seed, cell, det, condition, index, stage)?;
        let dir = self.results_dir().join("pca");
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}_seed{seed}_{}_{}.csv", cell.name(), det.name(), record.id));
        let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
        let ratios: Vec<String> = pca.explained_variance_ratio.iter().take(3).map(|r| format!("{r:.4}")).collect();
        writeln!(f, "# explained variance ratio: {}", ratios.join(","))?;
        writeln!(f, "t,pc1,pc2,pc3,subtask,alpha")?;
        for (s, ctx) in record.steps.iter().zip(&trace) {
            let pc = pca.project(ctx)?;
            let subtask = if s.held || s.placed_in.is_some() { 2 } else { 1 };
            writeln!(f, "{},{:e},{:e},{:e},{subtask},{:e}", s.t, pc[0], pc[1], pc[2], s.alpha)?;
        }
        Ok(path)
    }

    // ---- report ---------------------------------------------------------

    pub fn results(&self) -> Result<ResultsTable> {
        let mut table = ResultsTable::default();
        for sub in ["switching", "task"] {
            let dir = self.results_dir().join(sub);
            if !dir.exists() {
                continue;
            }
            let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for p in paths {
                let row: ResultRow = read_json(&p)?;
                self.check_hash(&row.config_hash)?;
                table.rows.push(row);
            }
        }
        table.sort();
        Ok(table)
    }

    /// Markdown summary of models, tuning and results; also written to
    /// `results/report.md`.
    pub fn report(&self) -> Result<String> {
        use std::fmt::Write as _;
        let table = self.results()?;
        if table.rows.is_empty() {
            return Err(missing("report", "eval-switching", &self.results_dir().join("switching")));
        }
        let mut out = String::new();
        let _ = writeln!(out, "# Results\n\nconfig hash `{}`\n", self.hash);
        let _ = writeln!(out, "## Models\n\n| cell | seed | task loss | closure ratio | per-lag loss n=1 | n=N |\n|---|---|---|---|---|---|");
        for cell in self.cells() {
            for &seed in &self.config.seeds {
                let (Ok(stats), Ok(lag)) = (self.model_stats(seed, cell), self.per_lag(seed, cell)) else {
                    continue;
                };
                let _ = writeln!(
                    out,
                    "| {} | {seed} | {:.4} | {:.2e} | {:.4} | {:.4} |",
                    cell.name(),
                    stats.final_task_loss,
                    stats.closure.ratio(),
                    lag.first().copied().unwrap_or(f64::NAN),
                    lag.last().copied().unwrap_or(f64::NAN)
                );
            }
        }
        out.push('\n');
        for cell in self.cells() {
            if let Ok(t) = self.tuning(cell, "report") {
                let _ = writeln!(out, "## Gate selection ({}, seed {})\n", cell.name(), t.seed);
                for ch in &t.chosen {
                    let _ = writeln!(out, "- {}: beta {}, gamma {} (mean validation score {:.1} %)", ch.detector.name(), ch.beta, ch.gamma, ch.mean);
                }
                out.push('\n');
            }
        }
        out.push_str(&table.render());
        fs::create_dir_all(self.results_dir())?;
        fs::write(self.results_dir().join("report.md"), &out)?;
        Ok(out)
    }

    /// Every stage in order, skipping those whose artifacts exist.
    pub fn run_pipeline(&self) -> Result<String> {
        let c = &self.config;
        self.gen_data()?;
        self.train_cae()?;
        for cell in self.cells() {
            for &seed in &c.seeds {
                self.train_rnn(seed, cell)?;
                self.train_prev(seed, cell)?;
                self.calibrate_stage(seed, cell)?;
            }
        }
        self.eval_switching(c.rnn.model.kind, &c.seeds, &DetectorKind::ALL, &Condition::ALL)?;
        self.eval_task(&c.rnn.task_cells, &c.seeds, &Condition::ALL)?;
        self.report()
    }
}
