use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Principal axes of a sample set.
///
/// `components` is `k x d`, one orthonormal axis per row, sorted by decreasing
/// variance. Each axis is signed so that its largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    pub components: Matrix,
    /// All covariance eigenvalues (unbiased, `1/(n-1)`), descending.
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

pub fn pca_fit(samples: &[Vec<f64>], n_components: usize) -> Result<Pca> {
    if n_components == 0 {
        return Err(Error::Invalid("n_components must be >= 1".into()));
    }
    if samples.len() < n_components + 1 {
        return Err(Error::Invalid(format!(
            "pca_fit needs at least {} samples, got {}",
            n_components + 1,
            samples.len()
        )));
    }
    let d = samples[0].len();
    if d == 0 {
        return Err(Error::shape("pca_fit", "non-empty samples", 0));
    }
    if n_components > d {
        return Err(Error::RankDeficient {
            requested: n_components,
            achievable: d,
        });
    }
    if let Some(bad) = samples.iter().find(|s| s.len() != d) {
        return Err(Error::shape("pca_fit sample", d, bad.len()));
    }
    let n = samples.len() as f64;
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = DMatrix::<f64>::zeros(d, d);
    for s in samples {
        for i in 0..d {
            let di = s[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += di * (s[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (n - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    let tol = 1e-12 * eigenvalues[0].max(f64::MIN_POSITIVE) * d as f64;
    let rank = if total <= 0.0 {
        0
    } else {
        eigenvalues.iter().filter(|&&e| e > tol).count()
    };
    if rank < n_components {
        return Err(Error::RankDeficient {
            requested: n_components,
            achievable: rank,
        });
    }

    let mut components = Matrix::zeros(n_components, d)?;
    for (k, &i) in order.iter().take(n_components).enumerate() {
        let col = eig.eigenvectors.column(i);
        let mut pivot = 0;
        for j in 0..d {
            if col[j].abs() > col[pivot].abs() {
                pivot = j;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        let norm = col.norm();
        for j in 0..d {
            components.set(k, j, sign * col[j] / norm);
        }
    }
    let explained_variance_ratio = eigenvalues.iter().take(n_components).map(|e| e / total).collect();
    Ok(Pca {
        mean,
        components,
        eigenvalues,
        explained_variance_ratio,
    })
}

impl Pca {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    /// Coordinates of `x` along each component.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::shape("Pca::project", self.dim(), x.len()));
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.components.matvec(&centered)
    }

    pub fn reconstruct(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if coords.len() != self.n_components() {
            return Err(Error::shape("Pca::reconstruct", self.n_components(), coords.len()));
        }
        let mut out = self.mean.clone();
        for (k, c) in coords.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.components.row(k)) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// Squared norm of the part of `x - mean` orthogonal to the component span.
    pub fn residual_sq(&self, x: &[f64]) -> Result<f64> {
        let coords = self.project(x)?;
        let rec = self.reconstruct(&coords)?;
        Ok(x.iter().zip(&rec).map(|(a, b)| (a - b) * (a - b)).sum())
    }
}
