use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::demo::generate_demonstration;
use super::SimConfig;
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
}

/// One subtask demonstration: raw joint+gripper channels and rasters per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    pub subtask: u8,
    pub object: (f64, f64),
    pub slot: usize,
    pub split: Split,
    /// `T x (D + 1)`, radians and gripper units.
    pub joints: Vec<Vec<f64>>,
    /// `T x pixels`, values in `[0, 1]`.
    pub rasters: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn scaled_joints(&self, norm: &NormStats) -> Vec<Vec<f64>> {
        self.joints.iter().map(|m| norm.normalize(m)).collect()
    }
}

/// Uniform grid of object positions on the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub origin: (f64, f64),
    pub spacing: (f64, f64),
    pub rows: usize,
    pub cols: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            origin: (-0.19, 0.62),
            spacing: (0.02, 0.02),
            rows: 1,
            cols: 20,
        }
    }
}

impl GridSpec {
    /// Row-major positions with their `(row, col)` index.
    pub fn positions(&self) -> Vec<(usize, usize, (f64, f64))> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push((
                    r,
                    c,
                    (
                        self.origin.0 + c as f64 * self.spacing.0,
                        self.origin.1 + r as f64 * self.spacing.1,
                    ),
                ));
            }
        }
        out
    }
}

/// Per-channel affine scaling of joint+gripper channels.
///
/// The training minimum maps to `-margin` and the maximum to `+margin`, so
/// every training value lies inside `[-1, 1]` with headroom for `tanh` outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl NormStats {
    pub const MARGIN: f64 = 0.9;

    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a Vec<f64>>) -> Result<Self> {
        let mut iter = rows.into_iter();
        let first = iter.next().ok_or_else(|| Error::Invalid("no data for normalization".into()))?;
        let mut min = first.clone();
        let mut max = first.clone();
        for r in iter {
            if r.len() != min.len() {
                return Err(Error::shape("NormStats::fit", min.len(), r.len()));
            }
            for i in 0..r.len() {
                min[i] = min[i].min(r[i]);
                max[i] = max[i].max(r[i]);
            }
        }
        let mut lo = Vec::with_capacity(min.len());
        let mut hi = Vec::with_capacity(min.len());
        for (a, b) in min.iter().zip(&max) {
            let span = if b - a > 1e-9 { (b - a) / Self::MARGIN } else { 1.0 };
            let c = 0.5 * (a + b);
            lo.push(c - 0.5 * span);
            hi.push(c + 0.5 * span);
        }
        Ok(Self { lo, hi })
    }

    pub fn channels(&self) -> usize {
        self.lo.len()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (lo, hi))| 2.0 * (v - lo) / (hi - lo) - 1.0)
            .collect()
    }

    pub fn denormalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (lo, hi))| lo + 0.5 * (v + 1.0) * (hi - lo))
            .collect()
    }

    /// Converts a scaled delta to raw units.
    pub fn delta_to_raw(&self, d: &[f64]) -> Vec<f64> {
        d.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (lo, hi))| 0.5 * v * (hi - lo))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub id: String,
    pub subtask: u8,
    pub object: (f64, f64),
    pub slot: usize,
    pub length: usize,
    pub split: Split,
    pub joints_file: String,
    pub raster_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    grid: GridSpec,
    split_seed: u64,
    channels: usize,
    raster: (usize, usize),
    norm: NormStats,
    records: Vec<TrajectoryRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub grid: GridSpec,
    pub split_seed: u64,
    pub train: Vec<Trajectory>,
    pub validation: Vec<Trajectory>,
    pub norm: NormStats,
    /// `(width, height)` of every raster.
    pub raster_size: (usize, usize),
}

/// Demonstrations for every grid position and place slot, split by
/// interleaving positions. Normalization uses training trajectories only.
pub fn build_dataset(grid: &GridSpec, split_seed: u64, cfg: &SimConfig) -> Result<Dataset> {
    let positions = grid.positions();
    if positions.len() < 2 {
        return Err(Error::Invalid("grid must contain at least 2 positions".into()));
    }
    for &(_, _, (x, y)) in &positions {
        if !cfg.arm.in_workspace(x, y) {
            return Err(Error::Invalid(format!("grid position ({x}, {y}) is outside the workspace")));
        }
    }
    let phase = SeededRng::derive(split_seed, "split").below(2);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for (i, &(r, c, pos)) in positions.iter().enumerate() {
        let split = if (r + c + phase) % 2 == 0 { Split::Train } else { Split::Validation };
        for slot in 0..2 {
            let (mut pick, mut place) = generate_demonstration(pos, slot, cfg)?;
            pick.id = format!("p{i:03}_s{slot}_t1");
            place.id = format!("p{i:03}_s{slot}_t2");
            pick.split = split;
            place.split = split;
            let dst = if split == Split::Train { &mut train } else { &mut validation };
            dst.push(pick);
            dst.push(place);
        }
    }
    let norm = NormStats::fit(train.iter().flat_map(|t| t.joints.iter()))?;
    Ok(Dataset {
        grid: grid.clone(),
        split_seed,
        train,
        validation,
        norm,
        raster_size: (cfg.raster.width, cfg.raster.height),
    })
}

fn write_f64s(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut buf = Vec::with_capacity(rows.iter().map(|r| r.len() * 8).sum());
    for r in rows {
        for v in r {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

fn read_f64s(path: &Path, rows: usize, cols: usize) -> Result<Vec<Vec<f64>>> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() != rows * cols * 8 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("expected {} bytes, found {}", rows * cols * 8, buf.len()),
        });
    }
    Ok(buf
        .chunks_exact(cols * 8)
        .map(|row| {
            row.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect()
        })
        .collect())
}

impl Dataset {
    pub fn all(&self) -> impl Iterator<Item = &Trajectory> {
        self.train.iter().chain(&self.validation)
    }

    pub fn manifest_path(dir: &Path) -> PathBuf {
        dir.join("manifest.json")
    }

    /// Manifest plus one little-endian `f64` file per trajectory and channel group.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        if self.train.is_empty() {
            return Err(Error::Invalid("empty dataset".into()));
        }
        let mut records = Vec::new();
        for t in self.all() {
            let joints_file = format!("{}.joints.f64", t.id);
            let raster_file = format!("{}.raster.f64", t.id);
            write_f64s(&dir.join(&joints_file), &t.joints)?;
            write_f64s(&dir.join(&raster_file), &t.rasters)?;
            records.push(TrajectoryRecord {
                id: t.id.clone(),
                subtask: t.subtask,
                object: t.object,
                slot: t.slot,
                length: t.len(),
                split: t.split,
                joints_file,
                raster_file,
            });
        }
        let manifest = Manifest {
            grid: self.grid.clone(),
            split_seed: self.split_seed,
            channels: self.norm.channels(),
            raster: self.raster_size,
            norm: self.norm.clone(),
            records,
        };
        fs::write(Self::manifest_path(dir), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = Self::manifest_path(dir);
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&path)?)?;
        let pixels = manifest.raster.0 * manifest.raster.1;
        let mut train = Vec::new();
        let mut validation = Vec::new();
        for r in &manifest.records {
            let t = Trajectory {
                id: r.id.clone(),
                subtask: r.subtask,
                object: r.object,
                slot: r.slot,
                split: r.split,
                joints: read_f64s(&dir.join(&r.joints_file), r.length, manifest.channels)?,
                rasters: read_f64s(&dir.join(&r.raster_file), r.length, pixels)?,
            };
            match r.split {
                Split::Train => train.push(t),
                Split::Validation => validation.push(t),
            }
        }
        Ok(Self {
            grid: manifest.grid,
            split_seed: manifest.split_seed,
            train,
            validation,
            norm: manifest.norm,
            raster_size: manifest.raster,
        })
    }

    /// Training trajectory pairs `(pick, place)` sharing object and slot.
    pub fn pairings(&self, split: Split) -> Vec<(&Trajectory, &Trajectory)> {
        let src = match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
        };
        src.chunks_exact(2).map(|c| (&c[0], &c[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Gaussian noise on scaled joint channels.
    pub joint_noise: f64,
    /// Global raster intensity jitter, as a fraction.
    pub intensity_jitter: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            joint_noise: 0.01,
            intensity_jitter: 0.1,
        }
    }
}

/// Noisy copy of scaled joints and rasters. Joints are clamped to `[-1, 1]`,
/// rasters to `[0, 1]`.
pub fn augment(
    joints: &[Vec<f64>],
    rasters: &[Vec<f64>],
    cfg: &AugmentConfig,
    rng: &mut SeededRng,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let j = joints
        .iter()
        .map(|m| {
            m.iter()
                .map(|v| {
                    if cfg.joint_noise > 0.0 {
                        (v + rng.gaussian(cfg.joint_noise)).clamp(-1.0, 1.0)
                    } else {
                        *v
                    }
                })
                .collect()
        })
        .collect();
    let r = rasters
        .iter()
        .map(|img| {
            if cfg.intensity_jitter > 0.0 {
                let gain = 1.0 + rng.uniform_range(-cfg.intensity_jitter, cfg.intensity_jitter);
                img.iter().map(|p| (p * gain).clamp(0.0, 1.0)).collect()
            } else {
                img.clone()
            }
        })
        .collect();
    (j, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> GridSpec {
        GridSpec {
            cols: 6,
            ..GridSpec::default()
        }
    }

    #[test]
    fn default_split_sizes() {
        let ds = build_dataset(&GridSpec::default(), 1, &SimConfig::default()).unwrap();
        assert_eq!(ds.pairings(Split::Train).len(), 20);
        assert_eq!(ds.pairings(Split::Validation).len(), 20);
        let train_pos: Vec<_> = ds.train.iter().map(|t| t.object).collect();
        assert!(ds.validation.iter().all(|v| !train_pos.contains(&v.object)));
    }

    #[test]
    fn split_is_deterministic() {
        let cfg = SimConfig::default();
        let a = build_dataset(&small_grid(), 9, &cfg).unwrap();
        let b = build_dataset(&small_grid(), 9, &cfg).unwrap();
        let ids = |d: &Dataset| d.train.iter().map(|t| t.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&a), ids(&b));
    }

    #[test]
    fn normalization_round_trip_and_range() {
        let ds = build_dataset(&small_grid(), 0, &SimConfig::default()).unwrap();
        for t in &ds.train {
            for m in &t.joints {
                let s = ds.norm.normalize(m);
                assert!(s.iter().all(|v| (-1.0..=1.0).contains(v)));
                let back = ds.norm.denormalize(&s);
                for (a, b) in m.iter().zip(&back) {
                    assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn grid_outside_workspace_rejected() {
        let g = GridSpec {
            origin: (5.0, 5.0),
            ..small_grid()
        };
        assert!(build_dataset(&g, 0, &SimConfig::default()).is_err());
        let one = GridSpec { cols: 1, ..small_grid() };
        assert!(build_dataset(&one, 0, &SimConfig::default()).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let ds = build_dataset(&small_grid(), 3, &SimConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let back = Dataset::load(dir.path()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn augment_identity_and_noise_statistics() {
        let joints = vec![vec![0.0; 4]; 2500];
        let rasters = vec![vec![0.5; 4]; 3];
        let mut rng = SeededRng::new(1);
        let off = AugmentConfig {
            joint_noise: 0.0,
            intensity_jitter: 0.0,
        };
        let (j, r) = augment(&joints, &rasters, &off, &mut rng);
        assert_eq!(j, joints);
        assert_eq!(r, rasters);

        let (j, _) = augment(&joints, &rasters, &AugmentConfig::default(), &mut rng);
        let vals: Vec<f64> = j.iter().flatten().cloned().collect();
        assert_eq!(vals.len(), 10_000);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
        assert!((sd - 0.01).abs() < 0.05 * 0.01, "sd {sd}");

        let edge = vec![vec![1.0; 4]; 100];
        let (j, _) = augment(&edge, &rasters, &AugmentConfig::default(), &mut rng);
        assert!(j.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
    }
}
