//! Speaker-swap counting over long outputs: split into segments, pick the
//! output-to-reference pairing with the highest summed stereo SNR in each,
//! and count pairing changes between neighbouring segments.

use serde::{Deserialize, Serialize};

use super::snr::stereo_snr_clamped;
use crate::error::{Error, Result};
use crate::signal::StereoSignal;
use crate::tracker::permutations;

/// Segments per recording in the long-form protocol.
pub const DEFAULT_SEGMENTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapReport {
    pub segments: usize,
    /// `changed[b]` is true when segments `b` and `b + 1` pair differently.
    pub changed: Vec<bool>,
    pub swaps: usize,
    /// Per segment, `pairing[j]` is the output assigned to reference `j`.
    pub pairings: Vec<Vec<usize>>,
    /// Per segment, summed stereo SNR of the chosen pairing, dB.
    pub segment_snr_db: Vec<f64>,
    /// One letter per segment: `A` for the first pairing, `B` for the next, …
    pub pattern: String,
}

fn check(outputs: &[StereoSignal], refs: &[StereoSignal]) -> Result<usize> {
    if outputs.len() != refs.len() || outputs.is_empty() || outputs.len() > 4 {
        return Err(Error::Evaluation(format!(
            "{} outputs vs {} references",
            outputs.len(),
            refs.len()
        )));
    }
    let len = refs[0].len();
    if outputs.iter().chain(refs).any(|s| s.len() != len) {
        return Err(Error::Evaluation("outputs and references differ in length".into()));
    }
    Ok(len)
}

/// Pairing of highest summed stereo SNR over `[start, end)`; the earliest
/// pairing in lexicographic order wins ties.
pub fn best_pairing(outputs: &[StereoSignal], refs: &[StereoSignal], start: usize, end: usize) -> Result<(usize, f64)> {
    check(outputs, refs)?;
    let outs: Vec<StereoSignal> = outputs.iter().map(|s| s.slice(start, end)).collect();
    let rs: Vec<StereoSignal> = refs.iter().map(|s| s.slice(start, end)).collect();
    let mut best = (0, f64::NEG_INFINITY);
    for (k, p) in permutations(refs.len()).iter().enumerate() {
        let mut total = 0.0;
        for (j, &o) in p.iter().enumerate() {
            total += stereo_snr_clamped(&rs[j], &outs[o])?;
        }
        if total > best.1 {
            best = (k, total);
        }
    }
    Ok(best)
}

pub fn count_swaps(outputs: &[StereoSignal], refs: &[StereoSignal], segments: usize) -> Result<SwapReport> {
    let len = check(outputs, refs)?;
    if segments == 0 || segments > len {
        return Err(Error::Evaluation(format!("{segments} segments over {len} samples")));
    }
    let perms = permutations(refs.len());
    let seg = len / segments;
    let mut chosen = Vec::with_capacity(segments);
    let mut snrs = Vec::with_capacity(segments);
    for s in 0..segments {
        let end = if s + 1 == segments { len } else { (s + 1) * seg };
        let (k, snr) = best_pairing(outputs, refs, s * seg, end)?;
        chosen.push(k);
        snrs.push(snr);
    }
    let changed: Vec<bool> = chosen.windows(2).map(|w| w[0] != w[1]).collect();
    Ok(SwapReport {
        segments,
        swaps: changed.iter().filter(|c| **c).count(),
        changed,
        pairings: chosen.iter().map(|k| perms[*k].clone()).collect(),
        segment_snr_db: snrs,
        pattern: chosen.iter().map(|k| (b'A' + *k as u8) as char).collect(),
    })
}
