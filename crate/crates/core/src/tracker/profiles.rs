use serde::{Deserialize, Serialize};

use super::kmeans::{KMeansConfig, OnlineKMeansState};
use super::pit::frame_pit_match;
use super::seq::{EmbeddingFrameSeq, OracleEmbeddingSeq};
use crate::error::{Error, Result};

/// How speaker profiles are derived from per-frame slot embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileMode {
    /// Estimates reordered per frame to match oracle embeddings.
    Oracle,
    /// Running online k-means centroids.
    Centroid,
}

impl std::str::FromStr for ProfileMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "centroid" => Ok(Self::Centroid),
            other => Err(Error::invalid(format!("unknown profile mode `{other}` (oracle|centroid)"))),
        }
    }
}

impl std::fmt::Display for ProfileMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Oracle => "oracle",
            Self::Centroid => "centroid",
        })
    }
}

/// Per-speaker `T×D` profile sequences; slot `i` is speaker `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerProfileSeq {
    mode: ProfileMode,
    embeddings: EmbeddingFrameSeq,
}

impl SpeakerProfileSeq {
    pub fn new(mode: ProfileMode, embeddings: EmbeddingFrameSeq) -> Self {
        Self { mode, embeddings }
    }

    pub fn mode(&self) -> ProfileMode {
        self.mode
    }

    pub fn speakers(&self) -> usize {
        self.embeddings.slots()
    }

    pub fn frames(&self) -> usize {
        self.embeddings.frames()
    }

    pub fn get(&self, speaker: usize, t: usize) -> &[f64] {
        self.embeddings.get(speaker, t)
    }

    pub fn track(&self, speaker: usize) -> Vec<f64> {
        self.embeddings.track(speaker)
    }

    pub fn embeddings(&self) -> &EmbeddingFrameSeq {
        &self.embeddings
    }
}

/// Profiles for a whole sequence. Oracle mode requires `oracle`; centroid mode
/// forbids it and records the centroid snapshot after every frame.
pub fn build_profiles(
    embeddings: &EmbeddingFrameSeq,
    mode: ProfileMode,
    oracle: Option<&OracleEmbeddingSeq>,
    config: KMeansConfig,
) -> Result<SpeakerProfileSeq> {
    match (mode, oracle) {
        (ProfileMode::Oracle, Some(o)) => Ok(frame_pit_match(embeddings, o)?.profiles),
        (ProfileMode::Oracle, None) => Err(Error::MissingAsset("oracle profile mode needs oracle embeddings".into())),
        (ProfileMode::Centroid, Some(_)) => Err(Error::invalid("centroid profile mode takes no oracle")),
        (ProfileMode::Centroid, None) => {
            let mut state = OnlineKMeansState::new(embeddings.slots(), embeddings.dim(), config)?;
            let mut out = EmbeddingFrameSeq::empty(embeddings.slots(), embeddings.dim())?;
            for t in 0..embeddings.frames() {
                out.push_frame(&state.step(embeddings.frame(t))?.centroids)?;
            }
            Ok(SpeakerProfileSeq::new(ProfileMode::Centroid, out))
        }
    }
}
