use super::params::ParamSet;
use crate::error::{Error, Result};

/// Central-difference gradient of `loss` at `params`, one coordinate at a time.
pub fn finite_difference_gradient<F>(mut loss: F, params: &ParamSet, h: f64) -> Result<ParamSet>
where
    F: FnMut(&ParamSet) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Invalid(format!("finite-difference step must be > 0, got {h}")));
    }
    let mut work = params.clone();
    let mut grad = params.zeros_like();
    for b in 0..params.len() {
        for j in 0..params.get(b).len() {
            let orig = params.get(b).as_slice()[j];
            work.get_mut(b).as_mut_slice()[j] = orig + h;
            let plus = loss(&work)?;
            work.get_mut(b).as_mut_slice()[j] = orig - h;
            let minus = loss(&work)?;
            work.get_mut(b).as_mut_slice()[j] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss while perturbing block `{}`[{j}]",
                    params.blocks()[b].name
                )));
            }
            grad.get_mut(b).as_mut_slice()[j] = (plus - minus) / (2.0 * h);
        }
    }
    Ok(grad)
}

/// Largest relative error between two gradients, per block, using
/// `|a - b| / max(|a| + |b|, floor)`.
pub fn max_relative_error(analytic: &ParamSet, numeric: &ParamSet, floor: f64) -> Vec<(String, f64)> {
    analytic
        .blocks()
        .iter()
        .zip(numeric.blocks())
        .map(|(a, n)| {
            let worst = a
                .value
                .as_slice()
                .iter()
                .zip(n.value.as_slice())
                .map(|(x, y)| (x - y).abs() / (x.abs() + y.abs()).max(floor))
                .fold(0.0f64, f64::max);
            (a.name.clone(), worst)
        })
        .collect()
}
