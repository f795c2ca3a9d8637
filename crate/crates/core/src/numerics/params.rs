use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// A named parameter tensor. Vectors are stored as `n x 1` matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub value: Matrix,
}

/// Ordered collection of parameter blocks. Gradients use the same type with
/// an identical layout.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamSet {
    blocks: Vec<ParamBlock>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a block and returns its index.
    pub fn push(&mut self, name: impl Into<String>, value: Matrix) -> usize {
        self.blocks.push(ParamBlock {
            name: name.into(),
            value,
        });
        self.blocks.len() - 1
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [ParamBlock] {
        &mut self.blocks
    }

    #[inline]
    pub fn get(&self, idx: usize) -> &Matrix {
        &self.blocks[idx].value
    }

    #[inline]
    pub fn get_mut(&mut self, idx: usize) -> &mut Matrix {
        &mut self.blocks[idx].value
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Total scalar count.
    pub fn num_scalars(&self) -> usize {
        self.blocks.iter().map(|b| b.value.len()).sum()
    }

    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            blocks: self
                .blocks
                .iter()
                .map(|b| {
                    let mut v = b.value.clone();
                    v.fill(0.0);
                    ParamBlock {
                        name: b.name.clone(),
                        value: v,
                    }
                })
                .collect(),
        }
    }

    pub fn check_same_layout(&self, other: &ParamSet, context: &str) -> Result<()> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::shape(context, self.blocks.len(), other.blocks.len()));
        }
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            if a.value.shape() != b.value.shape() {
                return Err(Error::shape(
                    format!("{context}: block `{}`", a.name),
                    format!("{:?}", a.value.shape()),
                    format!("{:?}", b.value.shape()),
                ));
            }
        }
        Ok(())
    }

    /// `self += scale * other`; layouts must match.
    pub fn add_scaled(&mut self, other: &ParamSet, scale: f64) -> Result<()> {
        self.check_same_layout(other, "ParamSet::add_scaled")?;
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.value.as_mut_slice().iter_mut().zip(b.value.as_slice()) {
                *x += scale * y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for b in &mut self.blocks {
            b.value.as_mut_slice().iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_scalars());
        for b in &self.blocks {
            out.extend_from_slice(b.value.as_slice());
        }
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_scalars() {
            return Err(Error::shape("ParamSet::assign_flat", self.num_scalars(), flat.len()));
        }
        let mut off = 0;
        for b in &mut self.blocks {
            let n = b.value.len();
            b.value.as_mut_slice().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    /// Name of the first block holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<&str> {
        self.blocks
            .iter()
            .find(|b| !b.value.is_finite())
            .map(|b| b.name.as_str())
    }
}
