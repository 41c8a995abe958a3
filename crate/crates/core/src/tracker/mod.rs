//! Speaker-embedding bookkeeping: frame-level permutation matching, the
//! triplet objective and online k-means profiles.
//!
//! All vector comparisons go through [`distance`] (L1).

mod kmeans;
mod pit;
mod profiles;
mod seq;
mod synthetic;
mod triplet;

pub use kmeans::{online_kmeans_step, KMeansConfig, KMeansStep, OnlineKMeansState};
pub use pit::{best_assignment, distance, frame_pit_match, permutations, PitMatch, MAX_PIT_SLOTS};
pub use profiles::{build_profiles, ProfileMode, SpeakerProfileSeq};
pub use seq::{EmbeddingFrameSeq, OracleEmbeddingSeq, EMBEDDINGS_TENSOR};
pub use synthetic::{count_profile_swaps, drift_and_cross, DriftCrossParams, DriftCrossStream};
pub use triplet::{triplet_loss, DEFAULT_MARGIN};
