//! Scoring: two-channel SNR, DOA error through a BRIR-derived delay lookup,
//! and speaker-swap counting.

mod doa;
mod snr;
mod swaps;

pub use doa::{
    build_eval_localizer, cross_correlation, doa_error, estimate_doa_track, truth_doa_track, window_samples, DoaError,
    EvalLocalizerTable, GccPhat, DOA_WINDOW, SILENCE_THRESHOLD,
};
pub use snr::{snr_db, snr_db_clamped, snr_db_slices, stereo_snr, stereo_snr_mean, SNR_CLAMP_DB, SNR_EPS};
pub use swaps::{best_pairing, count_swaps, SwapReport, DEFAULT_SEGMENTS};
