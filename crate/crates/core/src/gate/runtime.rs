use serde::{Deserialize, Serialize};

use super::baseline::BaselineDetector;
use super::record::{EpisodeRecord, OutcomeThresholds, StepLog};
use super::{adjust_inputs, blend_command, compute_alpha, score_previous, GateConfig, History};
use crate::autoencoder::AeParams;
use crate::error::{Error, Result};
use crate::lqr::LqrPlant;
use crate::numerics::sigmoid;
use crate::rnn::RnnParams;
use crate::sim::{self, render_observation, DisturbanceEvent, NormStats, SimConfig, WorldState};

/// Trained components shared by every episode.
#[derive(Debug, Clone, Copy)]
pub struct Models<'a> {
    pub sim: &'a SimConfig,
    pub norm: &'a NormStats,
    pub encoder: &'a AeParams,
    pub rnn: &'a RnnParams,
    /// Plant over the scaled arm joints, targeting the initial posture.
    pub lqr: &'a LqrPlant,
}

impl Models<'_> {
    /// Scaled arm joints of the initial posture.
    pub fn home(&self) -> Vec<f64> {
        scaled_home(self.sim, self.norm)
    }
}

/// Initial arm posture in scaled units, gripper channel dropped.
pub fn scaled_home(sim: &SimConfig, norm: &NormStats) -> Vec<f64> {
    let mut raw = sim.arm.home.clone();
    raw.push(-1.0);
    let mut m = norm.normalize(&raw);
    m.truncate(sim.arm.joint_count());
    m
}

/// Source of the switching coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Detector {
    Previous { calibration: Vec<f64> },
    Baseline { model: BaselineDetector, calibration: Vec<f64> },
    /// Fixed coefficient, for ablations and checks.
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuntimeConfig {
    pub horizon: usize,
    /// Steps at the initial posture under a raised gate before the recurrent
    /// state is reset.
    pub reset_after: usize,
    /// End once the object is placed and the arm rests at the initial posture.
    pub stop_when_done: bool,
    pub thresholds: OutcomeThresholds,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        Self {
            horizon: 400,
            reset_after: 192,
            stop_when_done: true,
            thresholds: OutcomeThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub id: String,
    pub object: (f64, f64),
    pub vacant_slot: usize,
    pub disturbance: Option<DisturbanceEvent>,
}

/// Closed-loop controller state for one episode.
pub struct Controller<'a> {
    models: Models<'a>,
    detector: &'a Detector,
    gate: &'a GateConfig,
    runtime: &'a RuntimeConfig,
    home: Vec<f64>,
    state: Vec<f64>,
    history: History,
    recent: Vec<Vec<f64>>,
    predicted: Option<(Vec<f64>, Vec<f64>)>,
    alpha: f64,
    home_since: Option<usize>,
}

/// Per-tick result of [`Controller::step`].
pub struct Tick {
    /// Command in raw joint and gripper units.
    pub command: Vec<f64>,
    /// Context layer after consuming this tick's inputs.
    pub context: Vec<f64>,
    pub log: StepLog,
}

impl<'a> Controller<'a> {
    pub fn new(models: Models<'a>, detector: &'a Detector, gate: &'a GateConfig, runtime: &'a RuntimeConfig) -> Result<Self> {
        let cfg = &models.rnn.config;
        let arm = models.sim.arm.joint_count();
        if cfg.joints != arm + 1 || models.norm.channels() != cfg.joints {
            return Err(Error::shape("controller channels", arm + 1, cfg.joints));
        }
        if models.lqr.spec.states() != arm {
            return Err(Error::shape("controller plant", arm, models.lqr.spec.states()));
        }
        match detector {
            Detector::Previous { calibration } if calibration.len() < cfg.history => {
                return Err(Error::MissingCalibration(calibration.len() + 1))
            }
            Detector::Baseline { model, calibration } if calibration.len() < model.channels() => {
                return Err(Error::MissingCalibration(calibration.len() + 1))
            }
            _ => {}
        }
        Ok(Self {
            home: models.home(),
            state: models.rnn.initial_state(),
            history: History::new(cfg.history),
            recent: Vec::new(),
            predicted: None,
            alpha: 0.0,
            home_since: None,
            models,
            detector,
            gate,
            runtime,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    fn detect(&mut self, context: &[f64], m: &[f64]) -> Result<f64> {
        let (beta, gamma) = (self.gate.beta, self.gate.gamma);
        Ok(match self.detector {
            Detector::Constant(a) => *a,
            Detector::Previous { calibration } => {
                let recalled = self.models.rnn.predict_previous(context)?;
                let scores = score_previous(&recalled, &self.history)?;
                compute_alpha(beta, gamma, calibration, &scores)?.unwrap_or(0.0)
            }
            Detector::Baseline { model, calibration } => {
                self.recent.push(m.to_vec());
                let w = model.window();
                if self.recent.len() > w {
                    self.recent.remove(0);
                }
                match model.score_recent(&self.recent)? {
                    None => 0.0,
                    Some(scores) => scores
                        .iter()
                        .zip(calibration)
                        .map(|(l, lbar)| sigmoid(beta * (l - gamma * lbar)))
                        .fold(0.0, f64::max),
                }
            }
        })
    }

    fn reset(&mut self) {
        self.state = self.models.rnn.initial_state();
        self.history.clear();
        self.recent.clear();
        self.predicted = None;
        self.alpha = 0.0;
        self.home_since = None;
    }

    /// Senses `world`, advances the network and returns the blended command.
    pub fn step(&mut self, world: &WorldState) -> Result<Tick> {
        let t = world.t;
        self.step_inner(world).map_err(|e| e.at_step(t))
    }

    fn step_inner(&mut self, world: &WorldState) -> Result<Tick> {
        let Models { sim, norm, encoder, rnn, lqr } = self.models;
        let arm = sim.arm.joint_count();
        let th = &self.runtime.thresholds;

        let mut reset = false;
        if let Some(since) = self.home_since {
            if world.t.saturating_sub(since) >= self.runtime.reset_after {
                self.reset();
                reset = true;
            }
        }

        let m = norm.normalize(&world.channels());
        let f = encoder.encode(&render_observation(world, sim))?;
        let (m_in, f_in) = match &self.predicted {
            Some((mp, fp)) => adjust_inputs(self.alpha, &m, &f, mp, fp)?,
            None => (m.clone(), f.clone()),
        };
        let out = rnn.step(&self.state, &[m_in, f_in].concat())?;
        let alpha = self.detect(&out.context, &m)?;

        let mut dm_lqr = lqr.command(&m[..arm])?;
        dm_lqr.push(0.0);
        let m_next = out.joints(&rnn.config);
        let dm_rnn: Vec<f64> = (0..=arm).map(|i| m_next[i] - m[i] - dm_lqr[i]).collect();
        let dm = blend_command(alpha, &dm_rnn, &dm_lqr, self.gate.blend)?;

        let homed = alpha >= th.switch_on && m[..arm].iter().zip(&self.home).all(|(a, b)| (a - b).abs() < th.home_tolerance);
        if alpha < th.switch_off {
            self.home_since = None;
        } else if homed && self.home_since.is_none() {
            self.home_since = Some(world.t);
        }

        self.history.push(m.clone());
        self.predicted = Some((m_next.to_vec(), out.features(&rnn.config).to_vec()));
        self.state = out.state;
        self.alpha = alpha;

        let command = norm.delta_to_raw(&dm);
        Ok(Tick {
            command,
            context: out.context,
            log: StepLog {
                t: world.t,
                disturbed: false,
                alpha,
                m,
                f,
                dm_rnn,
                dm_lqr,
                dm,
                effector: sim.arm.effector(&world.joints),
                object: world.object,
                held: world.held,
                placed_in: world.placed_in,
                reset,
            },
        })
    }
}

/// Rolls out one pick-and-place episode from the initial posture.
pub fn run_episode(
    models: Models<'_>,
    detector: &Detector,
    gate: &GateConfig,
    runtime: &RuntimeConfig,
    spec: &EpisodeSpec,
) -> Result<EpisodeRecord> {
    run_episode_traced(models, detector, gate, runtime, spec).map(|(r, _)| r)
}

/// [`run_episode`] that also returns the context trace, one row per step.
pub fn run_episode_traced(
    models: Models<'_>,
    detector: &Detector,
    gate: &GateConfig,
    runtime: &RuntimeConfig,
    spec: &EpisodeSpec,
) -> Result<(EpisodeRecord, Vec<Vec<f64>>)> {
    let sim_cfg = models.sim;
    let mut world = WorldState::initial(sim_cfg, spec.object, spec.vacant_slot)?;
    let mut ctl = Controller::new(models, detector, gate, runtime)?;
    let home = models.home();
    let th = &runtime.thresholds;
    let ev = spec.disturbance.as_ref();
    let mut steps = Vec::with_capacity(runtime.horizon);
    let mut trace = Vec::with_capacity(runtime.horizon);
    for _ in 0..runtime.horizon {
        let mut tick = ctl.step(&world)?;
        trace.push(std::mem::take(&mut tick.context));
        tick.log.disturbed = ev.is_some_and(|e| e.is_active(world.t));
        let done = world.placed_in.is_some()
            && ev.is_none_or(|e| world.t >= e.end() + th.reaction_slack)
            && tick.log.alpha < th.switch_off
            && tick.log.m.iter().zip(&home).all(|(a, b)| (a - b).abs() < th.home_tolerance);
        steps.push(tick.log);
        if done && runtime.stop_when_done {
            break;
        }
        world = sim::step(&world, &tick.command, ev, sim_cfg)?;
    }
    let (sx, sy, _) = sim_cfg.scene.slots[spec.vacant_slot];
    let record = EpisodeRecord {
        id: spec.id.clone(),
        object: spec.object,
        vacant_slot: spec.vacant_slot,
        slot_position: (sx, sy),
        home,
        disturbance: spec.disturbance.clone(),
        steps,
    };
    Ok((record, trace))
}
