//! Dense sandglass autoencoder over rasters. The bottleneck activations are
//! the observation features fed to the recurrent model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::error::{Error, Result};
use crate::numerics::{adam_step, gemv_acc, gemv_t_acc, outer_acc, sigmoid, AdamConfig, AdamState, Matrix, ParamSet, SeededRng};

const CHECKPOINT_KIND: &str = "cae";

/// Encoder layer widths from input to bottleneck; the decoder mirrors them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AeConfig {
    pub layers: Vec<usize>,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self { layers: vec![256, 64, 8] }
    }
}

impl AeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 2 || self.layers.contains(&0) {
            return Err(Error::Invalid(format!("autoencoder layers {:?}: need >= 2 non-zero widths", self.layers)));
        }
        if self.features() >= self.input() {
            return Err(Error::Invalid(format!(
                "bottleneck width {} must be smaller than input width {}",
                self.features(),
                self.input()
            )));
        }
        Ok(())
    }

    pub fn input(&self) -> usize {
        self.layers[0]
    }

    pub fn features(&self) -> usize {
        *self.layers.last().expect("validated")
    }

    /// Widths of every activation from input through reconstruction.
    fn widths(&self) -> Vec<usize> {
        let mut w = self.layers.clone();
        w.extend(self.layers.iter().rev().skip(1));
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeParams {
    pub config: AeConfig,
    /// Blocks `w{k}`, `b{k}` for every dense layer, encoder first.
    pub params: ParamSet,
}

impl AeParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(config: AeConfig, rng: &mut SeededRng) -> Result<Self> {
        config.validate()?;
        let widths = config.widths();
        let mut params = ParamSet::new();
        for (k, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.push(format!("w{k}"), Matrix::from_fn(fan_out, fan_in, |_, _| rng.uniform_range(-a, a))?);
            params.push(format!("b{k}"), Matrix::zeros(fan_out, 1)?);
        }
        Ok(Self { config, params })
    }

    fn layer_count(&self) -> usize {
        self.params.len() / 2
    }

    fn encoder_layers(&self) -> usize {
        self.config.layers.len() - 1
    }

    fn check_len(&self, x: &[f64], expected: usize, ctx: &str) -> Result<()> {
        if x.len() != expected {
            return Err(Error::shape(ctx, expected, x.len()));
        }
        Ok(())
    }

    fn dense(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let mut z = self.params.get(2 * k + 1).as_slice().to_vec();
        gemv_acc(&mut z, self.params.get(2 * k), x);
        let last = k + 1 == self.layer_count();
        for v in &mut z {
            *v = if last { sigmoid(*v) } else { v.tanh() };
        }
        z
    }

    /// Activations of every layer, input included.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for k in 0..self.layer_count() {
            let next = self.dense(k, acts.last().expect("non-empty"));
            acts.push(next);
        }
        acts
    }

    /// Bottleneck features, each in (-1, 1).
    pub fn encode(&self, raster: &[f64]) -> Result<Vec<f64>> {
        self.check_len(raster, self.config.input(), "encode: raster")?;
        let mut a = raster.to_vec();
        for k in 0..self.encoder_layers() {
            a = self.dense(k, &a);
        }
        Ok(a)
    }

    /// Raster reconstruction from features, each pixel in (0, 1).
    pub fn decode(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_len(features, self.config.features(), "decode: features")?;
        let mut a = features.to_vec();
        for k in self.encoder_layers()..self.layer_count() {
            a = self.dense(k, &a);
        }
        Ok(a)
    }

    pub fn reconstruct(&self, raster: &[f64]) -> Result<Vec<f64>> {
        self.check_len(raster, self.config.input(), "reconstruct: raster")?;
        Ok(self.forward_all(raster).pop().expect("non-empty"))
    }

    /// Mean over images of the summed squared reconstruction error.
    pub fn loss(&self, rasters: &[Vec<f64>]) -> Result<f64> {
        if rasters.is_empty() {
            return Err(Error::Invalid("autoencoder loss over an empty set".into()));
        }
        let mut total = 0.0;
        for x in rasters {
            let y = self.reconstruct(x)?;
            total += crate::numerics::squared_distance(&y, x);
        }
        Ok(total / rasters.len() as f64)
    }

    /// Per-pixel mean squared reconstruction error.
    pub fn pixel_mse(&self, rasters: &[Vec<f64>]) -> Result<f64> {
        Ok(self.loss(rasters)? / self.config.input() as f64)
    }

    /// Loss and its gradient with respect to every block.
    pub fn loss_and_gradient(&self, rasters: &[Vec<f64>]) -> Result<(f64, ParamSet)> {
        if rasters.is_empty() {
            return Err(Error::Invalid("autoencoder gradient over an empty batch".into()));
        }
        let scale = 1.0 / rasters.len() as f64;
        let mut grads = self.params.zeros_like();
        let mut total = 0.0;
        let layers = self.layer_count();
        for x in rasters {
            self.check_len(x, self.config.input(), "loss_and_gradient: raster")?;
            let acts = self.forward_all(x);
            let out = &acts[layers];
            total += crate::numerics::squared_distance(out, x);
            let mut delta: Vec<f64> = out
                .iter()
                .zip(x)
                .map(|(y, t)| 2.0 * scale * (y - t) * y * (1.0 - y))
                .collect();
            for k in (0..layers).rev() {
                outer_acc(grads.get_mut(2 * k), &delta, &acts[k]);
                for (g, d) in grads.get_mut(2 * k + 1).as_mut_slice().iter_mut().zip(&delta) {
                    *g += d;
                }
                if k == 0 {
                    break;
                }
                let mut back = vec![0.0; acts[k].len()];
                gemv_t_acc(&mut back, self.params.get(2 * k), &delta);
                delta = back.iter().zip(&acts[k]).map(|(b, a)| b * (1.0 - a * a)).collect();
            }
        }
        Ok((total * scale, grads))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::save_params(path, CHECKPOINT_KIND, &self.params)
    }

    pub fn load(path: &Path, config: AeConfig) -> Result<Self> {
        let template = Self::init(config, &mut SeededRng::new(0))?;
        let params = checkpoint::load_params(path, CHECKPOINT_KIND)?;
        checkpoint::check_layout(&params, &template.params, path)?;
        Ok(Self {
            config: template.config,
            params,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaeTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Training stops once the full-set loss falls below this value.
    pub loss_threshold: f64,
    pub adam: AdamConfig,
}

impl Default for CaeTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 150,
            batch_size: 16,
            loss_threshold: 0.0,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaeTraining {
    pub params: AeParams,
    /// Full-set loss before training (entry 0) and after each epoch.
    pub loss_curve: Vec<f64>,
}

/// Minibatch Adam on the reconstruction loss. Batches are reshuffled each
/// epoch from `rng`.
pub fn train_cae(rasters: &[Vec<f64>], init: AeParams, cfg: &CaeTrainConfig, rng: &mut SeededRng) -> Result<CaeTraining> {
    if rasters.is_empty() {
        return Err(Error::Invalid("autoencoder training set is empty".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Invalid("batch size must be >= 1".into()));
    }
    let mut params = init;
    let mut adam = AdamState::new(&params.params, cfg.adam)?;
    let mut curve = vec![params.loss(rasters)?];
    if !curve[0].is_finite() {
        return Err(Error::Diverged { epoch: 0, loss: curve[0] });
    }
    let mut order: Vec<usize> = (0..rasters.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.epochs {
        if *curve.last().expect("non-empty") < cfg.loss_threshold {
            break;
        }
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| rasters[i].clone()));
            let (_, grads) = params.loss_and_gradient(&batch)?;
            adam_step(&mut params.params, &grads, &mut adam).map_err(|_| Error::Diverged { epoch, loss: f64::NAN })?;
        }
        let loss = params.loss(rasters)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        curve.push(loss);
    }
    Ok(CaeTraining { params, loss_curve: curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_difference_gradient, max_relative_error};

    fn small() -> AeParams {
        AeParams::init(AeConfig { layers: vec![12, 6, 3] }, &mut SeededRng::new(3)).unwrap()
    }

    fn images(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = SeededRng::new(seed);
        (0..n).map(|_| (0..d).map(|_| rng.uniform()).collect()).collect()
    }

    #[test]
    fn encode_range_and_determinism() {
        let ae = AeParams::init(AeConfig::default(), &mut SeededRng::new(1)).unwrap();
        let x = images(1, 256, 2).pop().unwrap();
        let f1 = ae.encode(&x).unwrap();
        let f2 = ae.encode(&x).unwrap();
        assert_eq!(f1, f2);
        assert_eq!(f1.len(), 8);
        assert!(f1.iter().all(|v| v.abs() < 1.0));
        let y = ae.decode(&f1).unwrap();
        assert!(y.iter().all(|v| *v > 0.0 && *v < 1.0));
        assert_eq!(ae.reconstruct(&x).unwrap(), y);
    }

    #[test]
    fn shape_errors() {
        let ae = small();
        assert!(matches!(ae.encode(&[0.0; 5]), Err(Error::Shape { .. })));
        assert!(matches!(ae.decode(&[0.0; 5]), Err(Error::Shape { .. })));
        assert!(AeParams::init(AeConfig { layers: vec![4, 4] }, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ae = small();
        let batch = images(3, 12, 7);
        let (_, analytic) = ae.loss_and_gradient(&batch).unwrap();
        let numeric = finite_difference_gradient(
            |p| {
                AeParams {
                    config: ae.config.clone(),
                    params: p.clone(),
                }
                .loss(&batch)
            },
            &ae.params,
            1e-5,
        )
        .unwrap();
        for (name, err) in max_relative_error(&analytic, &numeric, 1e-8) {
            assert!(err < 1e-4, "{name}: {err}");
        }
    }

    #[test]
    fn epoch_zero_loss_is_direct_evaluation() {
        let ae = small();
        let data = images(4, 12, 9);
        let direct: f64 = data
            .iter()
            .map(|x| {
                let y = ae.reconstruct(x).unwrap();
                y.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            })
            .sum::<f64>()
            / 4.0;
        let cfg = CaeTrainConfig { epochs: 0, ..Default::default() };
        let out = train_cae(&data, ae.clone(), &cfg, &mut SeededRng::new(0)).unwrap();
        assert!((out.loss_curve[0] - direct).abs() < 1e-12);
        assert_eq!(out.params, ae);
    }

    #[test]
    fn overfits_a_single_image() {
        let ae = AeParams::init(AeConfig::default(), &mut SeededRng::new(4)).unwrap();
        let x = images(1, 256, 5);
        let cfg = CaeTrainConfig {
            epochs: 500,
            batch_size: 1,
            loss_threshold: 0.0,
            adam: AdamConfig::default(),
        };
        let out = train_cae(&x, ae, &cfg, &mut SeededRng::new(0)).unwrap();
        assert!(out.params.pixel_mse(&x).unwrap() < 1e-3);
    }

    #[test]
    fn divergence_reports_epoch() {
        let mut ae = small();
        ae.params.get_mut(0).as_mut_slice()[0] = f64::NAN;
        let err = train_cae(&images(2, 12, 1), ae, &CaeTrainConfig::default(), &mut SeededRng::new(0)).unwrap_err();
        assert!(matches!(err, Error::Diverged { epoch: 0, .. }));
    }

    #[test]
    fn checkpoint_round_trip() {
        let ae = small();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cae.bin");
        ae.save(&path).unwrap();
        let back = AeParams::load(&path, ae.config.clone()).unwrap();
        assert_eq!(back, ae);
        assert!(AeParams::load(&path, AeConfig::default()).is_err());
    }
}
