use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: ParamSet,
    pub v: ParamSet,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Result<Self> {
        if !(config.epsilon > 0.0) {
            return Err(Error::Invalid(format!("Adam epsilon must be > 0, got {}", config.epsilon)));
        }
        Ok(Self {
            config,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        })
    }
}

/// One bias-corrected Adam update, in place. The step counter is incremented
/// before the bias correction is computed.
pub fn adam_step(params: &mut ParamSet, grads: &ParamSet, state: &mut AdamState) -> Result<()> {
    params.check_same_layout(grads, "adam_step: grads")?;
    params.check_same_layout(&state.m, "adam_step: state")?;
    if let Some(name) = grads.first_non_finite() {
        return Err(Error::NonFinite(format!("gradient block `{name}`")));
    }
    state.t += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);

    let blocks = params.blocks_mut();
    for (i, block) in blocks.iter_mut().enumerate() {
        let g = grads.get(i).as_slice();
        let m = state.m.get_mut(i).as_mut_slice();
        let v = state.v.get_mut(i).as_mut_slice();
        let p = block.value.as_mut_slice();
        for j in 0..p.len() {
            m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
            v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            p[j] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}
