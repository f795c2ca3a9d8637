use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("rank deficient: requested {requested} components, achievable rank {achievable}")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("joint {joint} = {value} outside limits [{lo}, {hi}]")]
    JointLimit {
        joint: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("target ({x:.4}, {y:.4}) is unreachable")]
    Unreachable { x: f64, y: f64 },

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("Riccati iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("LQR plant has not been solved")]
    UnsolvedPlant,

    #[error("missing calibration for lag {0}")]
    MissingCalibration(usize),

    #[error("detector has not been fitted")]
    Unfitted,

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("stage `{stage}` requires artifact {path} (run `{requires}` first)")]
    MissingArtifact {
        stage: String,
        requires: String,
        path: PathBuf,
    },

    #[error("config hash mismatch: artifacts were produced with {found}, current config is {expected}")]
    ConfigMismatch { expected: String, found: String },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(context: impl Into<String>, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            context: context.into(),
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        if matches!(self, Error::Stage { .. } | Error::MissingArtifact { .. }) {
            return self;
        }
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
