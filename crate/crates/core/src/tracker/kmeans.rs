//! Online k-means over per-frame slot embeddings.
//!
//! The first frame seeds one centroid per slot (count 1). Every later frame
//! assigns its slots jointly to distinct clusters by the pairing of least
//! total distance, then moves each assigned centroid by the running mean
//! `c ← c + (x − c)/count`. Without decay each centroid is the arithmetic mean
//! of everything assigned to it.

use serde::{Deserialize, Serialize};

use super::pit::{best_assignment, distance, permutations, MAX_PIT_SLOTS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMeansConfig {
    /// L2-normalize each slot vector before clustering.
    #[serde(default)]
    pub normalize: bool,
    /// Floor on the update weight, `max(1/count, decay)`; forgets old frames
    /// when set.
    #[serde(default)]
    pub decay: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineKMeansState {
    clusters: usize,
    dim: usize,
    config: KMeansConfig,
    centroids: Vec<f64>,
    counts: Vec<u64>,
    perms: Vec<Vec<usize>>,
    initialized: bool,
}

/// Outcome of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansStep {
    /// `assignment[i]` is the cluster slot `i` joined.
    pub assignment: Vec<usize>,
    /// Centroids after the update, cluster-major `clusters·dim`.
    pub centroids: Vec<f64>,
}

impl OnlineKMeansState {
    pub fn new(clusters: usize, dim: usize, config: KMeansConfig) -> Result<Self> {
        if clusters == 0 || clusters > MAX_PIT_SLOTS || dim == 0 {
            return Err(Error::invalid(format!(
                "online k-means needs 1..={MAX_PIT_SLOTS} clusters and dim > 0"
            )));
        }
        if let Some(d) = config.decay {
            if !(0.0..1.0).contains(&d) {
                return Err(Error::invalid(format!("decay {d} must lie in [0, 1)")));
            }
        }
        Ok(Self {
            clusters,
            dim,
            config,
            centroids: vec![0.0; clusters * dim],
            counts: vec![0; clusters],
            perms: permutations(clusters),
            initialized: false,
        })
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn centroid(&self, k: usize) -> &[f64] {
        &self.centroids[k * self.dim..(k + 1) * self.dim]
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub fn reset(&mut self) {
        self.centroids.fill(0.0);
        self.counts.fill(0);
        self.initialized = false;
    }

    /// Consumes one frame of `clusters·dim` slot values.
    pub fn step(&mut self, frame: &[f64]) -> Result<KMeansStep> {
        let d = self.dim;
        if frame.len() != self.clusters * d || frame.iter().any(|v| !v.is_finite()) {
            return Err(Error::shape(format!(
                "k-means frame must hold {} finite values, got {}",
                self.clusters * d,
                frame.len()
            )));
        }
        let mut x = frame.to_vec();
        if self.config.normalize {
            for v in x.chunks_exact_mut(d) {
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter_mut().for_each(|a| *a /= norm);
                }
            }
        }
        if !self.initialized {
            self.centroids.copy_from_slice(&x);
            self.counts.fill(1);
            self.initialized = true;
            return Ok(KMeansStep {
                assignment: (0..self.clusters).collect(),
                centroids: self.centroids.clone(),
            });
        }
        // perm[k] = slot feeding cluster k
        let (best, _) = best_assignment(&self.perms, |slot, k| {
            distance(&x[slot * d..(slot + 1) * d], self.centroid(k))
        });
        let perm = self.perms[best].clone();
        let mut assignment = vec![0; self.clusters];
        for (k, &slot) in perm.iter().enumerate() {
            assignment[slot] = k;
            self.counts[k] += 1;
            let mut w = 1.0 / self.counts[k] as f64;
            if let Some(decay) = self.config.decay {
                w = w.max(decay);
            }
            let xs = &x[slot * d..(slot + 1) * d];
            for (c, v) in self.centroids[k * d..(k + 1) * d].iter_mut().zip(xs) {
                *c += (v - *c) * w;
            }
        }
        Ok(KMeansStep {
            assignment,
            centroids: self.centroids.clone(),
        })
    }
}

/// Stateless form of [`OnlineKMeansState::step`].
pub fn online_kmeans_step(state: &OnlineKMeansState, frame: &[f64]) -> Result<(OnlineKMeansState, KMeansStep)> {
    let mut next = state.clone();
    let step = next.step(frame)?;
    Ok((next, step))
}
