//! DOA class decoding: per-frame argmax, chunk majority vote and mapping to
//! azimuth. Ties always go to the lower class index.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::DoaFrameMatrix;
use crate::spatial::AzimuthGrid;

/// Frames per voting chunk; 20 frames of 4 ms is 80 ms.
pub const DEFAULT_CHUNK_FRAMES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkSpec {
    pub frames: usize,
}

impl ChunkSpec {
    pub fn new(frames: usize) -> Result<Self> {
        if frames == 0 {
            return Err(Error::invalid("chunk length must be at least one frame"));
        }
        Ok(Self { frames })
    }

    pub fn chunks(&self, total_frames: usize) -> usize {
        total_frames / self.frames
    }
}

impl Default for ChunkSpec {
    fn default() -> Self {
        Self {
            frames: DEFAULT_CHUNK_FRAMES,
        }
    }
}

/// Per-frame class index.
pub type DoaLabelSeq = Vec<usize>;

/// Index of the largest value; the first one on ties.
pub fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (k, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = k;
        }
    }
    best
}

pub fn argmax_labels(scores: &DoaFrameMatrix) -> DoaLabelSeq {
    (0..scores.frames()).map(|t| argmax(scores.row(t))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkVotes {
    pub classes: Vec<usize>,
    /// Frames past the last whole chunk, not voted on.
    pub dropped_frames: usize,
}

/// Modal class of each whole chunk.
pub fn chunk_vote(labels: &[usize], spec: ChunkSpec, classes: usize) -> Result<ChunkVotes> {
    if spec.frames == 0 {
        return Err(Error::invalid("chunk length must be at least one frame"));
    }
    if spec.frames > labels.len() {
        return Err(Error::invalid(format!(
            "chunk of {} frames exceeds the {} available",
            spec.frames,
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|l| **l >= classes) {
        return Err(Error::invalid(format!("label {bad} outside {classes} classes")));
    }
    let mut hist = vec![0usize; classes];
    let votes = labels
        .chunks_exact(spec.frames)
        .map(|chunk| {
            hist.fill(0);
            chunk.iter().for_each(|l| hist[*l] += 1);
            let mut best = 0;
            for k in 1..classes {
                if hist[k] > hist[best] {
                    best = k;
                }
            }
            best
        })
        .collect();
    Ok(ChunkVotes {
        classes: votes,
        dropped_frames: labels.len() % spec.frames,
    })
}

pub fn classes_to_degrees(classes: &[usize], grid: &AzimuthGrid) -> Result<Vec<f64>> {
    classes.iter().map(|c| grid.degrees(*c)).collect()
}

/// One decoded chunk of a DOA trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub chunk: usize,
    pub start_s: f64,
    pub deg: f64,
}

/// Chunk records with start times from the chunk length in seconds.
pub fn track_records(degrees: &[f64], chunk_s: f64) -> Vec<TrackRecord> {
    degrees
        .iter()
        .enumerate()
        .map(|(chunk, deg)| TrackRecord {
            chunk,
            start_s: chunk as f64 * chunk_s,
            deg: *deg,
        })
        .collect()
}

/// Writes one JSON record per line.
pub fn write_track(records: &[TrackRecord], mut out: impl Write) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io("<track>", e))?;
    }
    Ok(())
}

pub fn read_track(text: &str) -> Result<Vec<TrackRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::invalid(format!("track line {}: {e}", i + 1))))
        .collect()
}
