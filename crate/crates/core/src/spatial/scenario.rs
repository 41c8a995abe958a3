//! Two-speaker moving-source scenes: random specs, source lookup, and the
//! spatialize-then-mix recipe.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::brir::BrirSet;
use super::convolve::spatialize;
use super::mix::mix_at_relative_snr;
use super::synth::speech_like;
use super::trajectory::{make_trajectory, Direction, Trajectory};
use crate::error::{Error, Result};
use crate::signal::{FrameSpec, MonoSignal, StereoSignal, frame_count, SAMPLE_RATE};
use crate::wav::read_wav;

pub const NUM_SPEAKERS: usize = 2;
pub const VELOCITY_RANGE: (f64, f64) = (8.0, 15.0);
pub const REL_SNR_RANGE_DB: (f64, f64) = (0.0, 5.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeakerSpec {
    /// `synth:<speaker-id>` or the stem of a mono WAV in the corpus directory.
    pub source: String,
    pub start_deg: f64,
    pub velocity_deg_s: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    pub speakers: Vec<SpeakerSpec>,
    /// Level of speaker 1 over speaker 2, dB.
    pub rel_snr_db: f64,
    pub duration_s: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.speakers.len() != NUM_SPEAKERS {
            return Err(Error::invalid(format!(
                "scenario {} has {} speakers; exactly {NUM_SPEAKERS} are supported",
                self.id,
                self.speakers.len()
            )));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::invalid(format!("scenario {} duration must be positive", self.id)));
        }
        if !self.rel_snr_db.is_finite() {
            return Err(Error::invalid(format!("scenario {} relative SNR must be finite", self.id)));
        }
        Ok(())
    }

    pub fn num_samples(&self) -> usize {
        (self.duration_s * SAMPLE_RATE as f64).round() as usize
    }
}

/// Ranges for random scenario generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRanges {
    pub duration_s: f64,
    #[serde(default = "default_velocity")]
    pub velocity_deg_s: (f64, f64),
    #[serde(default = "default_snr")]
    pub rel_snr_db: (f64, f64),
    /// Synthetic speaker ids are drawn from `0..speaker_pool`.
    #[serde(default = "default_pool")]
    pub speaker_pool: u64,
}

fn default_velocity() -> (f64, f64) {
    VELOCITY_RANGE
}
fn default_snr() -> (f64, f64) {
    REL_SNR_RANGE_DB
}
fn default_pool() -> u64 {
    100
}

impl ScenarioRanges {
    pub fn new(duration_s: f64) -> Self {
        Self {
            duration_s,
            velocity_deg_s: VELOCITY_RANGE,
            rel_snr_db: REL_SNR_RANGE_DB,
            speaker_pool: default_pool(),
        }
    }

    /// Draws a spec with distinct speakers and distinct start azimuths.
    pub fn sample(&self, id: impl Into<String>, seed: u64, grid: &super::AzimuthGrid) -> Result<ScenarioSpec> {
        let (vlo, vhi) = self.velocity_deg_s;
        let (slo, shi) = self.rel_snr_db;
        if !(vlo > 0.0 && vlo <= vhi) || !(slo <= shi) || self.speaker_pool < 2 {
            return Err(Error::invalid(format!(
                "scenario ranges need 0 < velocity lo <= hi, SNR lo <= hi and a pool of 2+ \
                 (velocity {vlo}..{vhi} deg/s, SNR {slo}..{shi} dB, pool {})",
                self.speaker_pool
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = rng.gen_range(0..self.speaker_pool);
        let second = (first + rng.gen_range(1..self.speaker_pool)) % self.speaker_pool;
        let a0 = rng.gen_range(0..grid.count);
        let a1 = if grid.count > 1 {
            (a0 + rng.gen_range(1..grid.count)) % grid.count
        } else {
            a0
        };
        let speaker = |who: u64, at: usize, rng: &mut ChaCha8Rng| -> Result<SpeakerSpec> {
            Ok(SpeakerSpec {
                source: format!("synth:{who}"),
                start_deg: grid.degrees(at)?,
                velocity_deg_s: if vhi > vlo { rng.gen_range(vlo..=vhi) } else { vlo },
                direction: if rng.gen_bool(0.5) { Direction::Ccw } else { Direction::Cw },
            })
        };
        let speakers = vec![speaker(first, a0, &mut rng)?, speaker(second, a1, &mut rng)?];
        Ok(ScenarioSpec {
            id: id.into(),
            speakers,
            rel_snr_db: if shi > slo { rng.gen_range(slo..=shi) } else { slo },
            duration_s: self.duration_s,
            seed,
        })
    }
}

/// Resolves source references to dry mono audio.
pub trait SourceCorpus {
    /// Exactly `len` samples for `reference`; `seed` picks content or offset.
    fn fetch(&self, reference: &str, len: usize, seed: u64) -> Result<MonoSignal>;
}

/// `synth:<id>` references are generated; anything else is read from
/// `<dir>/<reference>.wav`.
#[derive(Debug, Clone, Default)]
pub struct DefaultCorpus {
    pub dir: Option<PathBuf>,
}

impl DefaultCorpus {
    pub fn synthetic() -> Self {
        Self { dir: None }
    }

    pub fn with_dir(dir: impl AsRef<Path>) -> Self {
        Self {
            dir: Some(dir.as_ref().to_path_buf()),
        }
    }
}

impl SourceCorpus for DefaultCorpus {
    fn fetch(&self, reference: &str, len: usize, seed: u64) -> Result<MonoSignal> {
        if let Some(id) = reference.strip_prefix("synth:") {
            let speaker: u64 = id
                .parse()
                .map_err(|_| Error::MissingAsset(format!("bad synthetic source id {reference:?}")))?;
            return Ok(speech_like(speaker, seed, len));
        }
        let dir = self
            .dir
            .as_ref()
            .ok_or_else(|| Error::MissingAsset(format!("no corpus directory for source {reference:?}")))?;
        let path = dir.join(format!("{reference}.wav"));
        if !path.exists() {
            return Err(Error::MissingAsset(format!("corpus entry {}", path.display())));
        }
        let mono = read_wav(&path, Some(SAMPLE_RATE))?.into_mono()?;
        if mono.len() < len {
            return Err(Error::invalid(format!(
                "source {reference:?} has {} samples, scenario needs {len}",
                mono.len()
            )));
        }
        let slack = mono.len() - len;
        let offset = if slack == 0 {
            0
        } else {
            ChaCha8Rng::seed_from_u64(seed).gen_range(0..=slack)
        };
        Ok(mono.slice(offset, offset + len))
    }
}

/// A simulated two-speaker scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub mixture: StereoSignal,
    /// Individually spatialized (reverberant) sources before level scaling.
    pub references: Vec<StereoSignal>,
    /// Gain applied to each reference inside the mixture.
    pub scales: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    /// Per-speaker grid label of each 4 ms analysis frame.
    pub labels: Vec<Vec<usize>>,
}

impl Scenario {
    /// The references as they appear inside the mixture.
    pub fn scaled_references(&self) -> Vec<StereoSignal> {
        self.references
            .iter()
            .zip(&self.scales)
            .map(|(r, g)| if *g == 1.0 { r.clone() } else { r.scaled(*g) })
            .collect()
    }
}

pub fn build_trajectories(spec: &ScenarioSpec, brirs: &BrirSet) -> Result<Vec<Trajectory>> {
    spec.speakers
        .iter()
        .map(|s| make_trajectory(s.start_deg, s.velocity_deg_s, s.direction, spec.duration_s, brirs.grid()))
        .collect()
}

pub fn build_scenario(spec: &ScenarioSpec, brirs: &BrirSet, corpus: &dyn SourceCorpus) -> Result<Scenario> {
    spec.validate()?;
    let trajectories = build_trajectories(spec, brirs)?;
    simulate_with_trajectories(spec, brirs, corpus, trajectories)
}

/// Spatializes and mixes with explicit trajectories (used to re-simulate a
/// recorded truth manifest).
pub fn simulate_with_trajectories(
    spec: &ScenarioSpec,
    brirs: &BrirSet,
    corpus: &dyn SourceCorpus,
    trajectories: Vec<Trajectory>,
) -> Result<Scenario> {
    spec.validate()?;
    if trajectories.len() != spec.speakers.len() {
        return Err(Error::invalid("one trajectory per speaker is required"));
    }
    let len = spec.num_samples();
    let mut references = Vec::with_capacity(NUM_SPEAKERS);
    for (i, (speaker, traj)) in spec.speakers.iter().zip(&trajectories).enumerate() {
        let dry = corpus.fetch(&speaker.source, len, spec.seed.wrapping_add(i as u64))?;
        references.push(spatialize(&dry, brirs, traj)?);
    }
    let (mixture, gain) = mix_at_relative_snr(&references[0], &references[1], spec.rel_snr_db)?;
    let frames = frame_count(len, FrameSpec::encoder());
    let labels = trajectories
        .iter()
        .map(|t| t.frame_labels(frames, FrameSpec::encoder().hop()))
        .collect();
    Ok(Scenario {
        id: spec.id.clone(),
        mixture,
        references,
        scales: vec![1.0, gain],
        trajectories,
        labels,
    })
}
