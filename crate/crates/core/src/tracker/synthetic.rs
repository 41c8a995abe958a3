//! Synthetic embedding streams with known ground truth: two slowly drifting
//! speaker tracks whose slot order flips a few times mid-stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::pit::{best_assignment, distance, permutations};
use super::seq::{EmbeddingFrameSeq, OracleEmbeddingSeq};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DriftCrossParams {
    pub frames: usize,
    pub dim: usize,
    /// Per-dimension Gaussian noise on the estimates.
    pub noise: f64,
    /// Peak per-dimension sinusoidal drift of each true track.
    pub drift: f64,
    /// Inclusive range of slot-order flips.
    pub flips: (usize, usize),
}

impl Default for DriftCrossParams {
    fn default() -> Self {
        Self {
            frames: 600,
            dim: 16,
            noise: 0.1,
            drift: 0.05,
            flips: (1, 3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftCrossStream {
    /// Noise-free tracks in speaker order.
    pub truth: OracleEmbeddingSeq,
    /// Per-speaker long-run means.
    pub means: Vec<Vec<f64>>,
    /// Noisy estimates with slot order flipped at `flips`.
    pub estimates: EmbeddingFrameSeq,
    /// Frames at which the slot order toggles.
    pub flips: Vec<usize>,
}

pub fn drift_and_cross(params: &DriftCrossParams, seed: u64) -> Result<DriftCrossStream> {
    let (t_len, d) = (params.frames, params.dim);
    if t_len < 20 || d == 0 || params.flips.0 > params.flips.1 || params.flips.1 > 5 {
        return Err(Error::invalid("drift-and-cross needs ≥ 20 frames, dim > 0 and ≤ 5 flips"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = loop {
        let m: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..d).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect())
            .collect();
        if distance(&m[0], &m[1]) >= 0.5 * d as f64 {
            break m;
        }
    };
    let phases: Vec<f64> = (0..2 * d).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let count = rng.gen_range(params.flips.0..=params.flips.1);
    let flips = place_flips(&mut rng, t_len, count);

    let noise = Normal::new(0.0, params.noise).map_err(|e| Error::invalid(e.to_string()))?;
    let mut truth = Vec::with_capacity(2 * t_len * d);
    let mut est = Vec::with_capacity(2 * t_len * d);
    let mut swapped = false;
    for t in 0..t_len {
        if flips.contains(&t) {
            swapped = !swapped;
        }
        let angle = std::f64::consts::TAU * t as f64 / t_len as f64;
        let frame: Vec<Vec<f64>> = (0..2)
            .map(|i| {
                (0..d)
                    .map(|k| means[i][k] + params.drift * (angle + phases[i * d + k]).sin())
                    .collect()
            })
            .collect();
        for f in &frame {
            truth.extend_from_slice(f);
        }
        let order = if swapped { [1, 0] } else { [0, 1] };
        for i in order {
            est.extend(frame[i].iter().map(|v| v + noise.sample(&mut rng)));
        }
    }
    Ok(DriftCrossStream {
        truth: EmbeddingFrameSeq::new(2, d, truth)?,
        means,
        estimates: EmbeddingFrameSeq::new(2, d, est)?,
        flips,
    })
}

/// `count` flip frames in `[0.1·T, 0.9·T]`, pairwise at least `0.15·T` apart.
fn place_flips(rng: &mut ChaCha8Rng, t_len: usize, count: usize) -> Vec<usize> {
    let lo = t_len / 10;
    let hi = t_len * 9 / 10;
    let gap = (t_len * 15).div_ceil(100);
    loop {
        let mut f: Vec<usize> = (0..count).map(|_| rng.gen_range(lo..=hi)).collect();
        f.sort_unstable();
        if f.windows(2).all(|w| w[1] - w[0] >= gap) {
            return f;
        }
    }
}

/// Swap count of profile tracks against known speaker tracks: per segment
/// (remainder frames go to the last), the assignment of least total distance;
/// a swap is a change of assignment between consecutive segments.
pub fn count_profile_swaps(profiles: &EmbeddingFrameSeq, truth: &OracleEmbeddingSeq, segments: usize) -> Result<usize> {
    if profiles.slots() != truth.slots() || profiles.dim() != truth.dim() || profiles.frames() != truth.frames() {
        return Err(Error::shape("profiles and truth differ in shape"));
    }
    let t_len = truth.frames();
    if segments == 0 || segments > t_len {
        return Err(Error::invalid(format!("{segments} segments for {t_len} frames")));
    }
    let perms = permutations(truth.slots());
    let len = t_len / segments;
    let mut prev = None;
    let mut swaps = 0;
    for s in 0..segments {
        let end = if s + 1 == segments { t_len } else { (s + 1) * len };
        let (k, _) = best_assignment(&perms, |i, j| {
            (s * len..end).map(|t| distance(profiles.get(i, t), truth.get(j, t))).sum()
        });
        if prev.is_some_and(|p| p != k) {
            swaps += 1;
        }
        prev = Some(k);
    }
    Ok(swaps)
}
