//! Streaming binaural moving-speaker separation.
//!
//! The crate is organised bottom-up:
//!
//! * [`signal`] and [`wav`]: audio containers and file I/O.
//! * [`spatial`]: time-varying BRIR convolution, trajectories and scene mixing.
//! * [`net`]: causal inference primitives and the assembled networks.
//! * [`tracker`]: embedding matching, triplet loss and online k-means profiles.
//! * [`localization`]: DOA class decoding and chunk voting.
//! * [`metrics`]: SNR, DOA error and speaker-swap scoring.
//! * [`pipeline`]: the streaming separator.
//! * [`harness`]: configs, manifests and the batch commands behind the CLI.

pub mod error;
pub mod harness;
pub mod localization;
pub mod metrics;
pub mod net;
pub mod pipeline;
pub mod signal;
pub mod spatial;
pub mod tracker;
pub mod wav;

pub use error::{Error, Result};
