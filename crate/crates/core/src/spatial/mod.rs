//! Moving binaural source simulation.

mod brir;
mod convolve;
mod grid;
mod mix;
mod scenario;
mod synth;
mod trajectory;

pub use brir::{
    azimuth_file_name, pure_delay_brirs, spherical_head_itd_samples, synthetic_brirs, BrirManifest,
    BrirPair, BrirSet, SyntheticBrirParams, MANIFEST_NAME,
};
pub use convolve::spatialize;
pub use grid::AzimuthGrid;
pub use mix::{mix_at_relative_snr, relative_snr_gain};
pub use scenario::{
    build_scenario, build_trajectories, simulate_with_trajectories, DefaultCorpus, Scenario,
    ScenarioRanges, ScenarioSpec, SourceCorpus, SpeakerSpec, NUM_SPEAKERS, REL_SNR_RANGE_DB,
    VELOCITY_RANGE,
};
pub use synth::speech_like;
pub use trajectory::{make_trajectory, Breakpoint, Direction, Trajectory};
