use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Disjoint groups of coordinates with positive weights `ω_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStructure {
    dim: usize,
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl GroupStructure {
    pub fn new(dim: usize, groups: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != groups.len() {
            return Err(Error::Dimension(alloc::format!(
                "{} weights for {} groups",
                weights.len(),
                groups.len()
            )));
        }
        let mut seen = vec![false; dim];
        for g in &groups {
            for &i in g {
                if i >= dim {
                    return Err(Error::GroupIndex { index: i, dim });
                }
                if seen[i] {
                    return Err(Error::OverlappingGroups { index: i });
                }
                seen[i] = true;
            }
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Parameter(alloc::format!("group weight {w} must be positive")));
        }
        Ok(Self {
            dim,
            groups,
            weights,
        })
    }

    /// Weights `ω_j = √|G_j|`.
    pub fn with_sqrt_sizes(dim: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let w = groups.iter().map(|g| math::sqrt(g.len() as f64)).collect();
        Self::new(dim, groups, w)
    }

    /// `n_groups` contiguous blocks of (nearly) equal size covering `0..dim`.
    pub fn contiguous(dim: usize, n_groups: usize) -> Result<Self> {
        if n_groups == 0 || n_groups > dim {
            return Err(Error::Parameter(alloc::format!(
                "cannot split {dim} coordinates into {n_groups} groups"
            )));
        }
        let base = dim / n_groups;
        let extra = dim % n_groups;
        let mut groups = Vec::with_capacity(n_groups);
        let mut start = 0;
        for j in 0..n_groups {
            let len = base + usize::from(j < extra);
            groups.push((start..start + len).collect());
            start += len;
        }
        Self::with_sqrt_sizes(dim, groups)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.groups.iter().map(Vec::as_slice).zip(self.weights.iter().copied())
    }

    pub fn group_norm(x: &[f64], g: &[usize]) -> f64 {
        math::sqrt(g.iter().map(|&i| x[i] * x[i]).sum())
    }

    /// `Σ ω_j ‖x_j‖`
    pub fn weighted_norm_sum(&self, x: &[f64]) -> f64 {
        self.iter().map(|(g, w)| w * Self::group_norm(x, g)).sum()
    }
}
