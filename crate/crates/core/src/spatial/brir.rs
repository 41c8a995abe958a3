//! Banks of binaural room impulse responses indexed by azimuth.
//!
//! A dataset on disk is a directory holding one stereo WAV per azimuth named
//! `az{+|-}DDD.wav` plus a `manifest.toml`:
//!
//! ```toml
//! version = 1
//! grid_min_deg = -90.0
//! grid_step_deg = 5.0
//! grid_count = 37
//! rt60_tag = "0.30"
//! filter_len = 2048
//! sample_rate = 16000
//! ```

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::AzimuthGrid;
use crate::error::{Error, Result};
use crate::signal::{MonoSignal, StereoSignal, SAMPLE_RATE};
use crate::wav::{read_wav, write_wav, WavCodec};

pub const MANIFEST_NAME: &str = "manifest.toml";
const MANIFEST_VERSION: u32 = 1;

/// One left/right filter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BrirPair {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrirSet {
    grid: AzimuthGrid,
    filters: Vec<BrirPair>,
    sample_rate: u32,
    rt60_tag: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrirManifest {
    pub version: u32,
    pub grid_min_deg: f64,
    pub grid_step_deg: f64,
    pub grid_count: usize,
    pub rt60_tag: String,
    pub filter_len: usize,
    pub sample_rate: u32,
}

impl BrirSet {
    pub fn new(
        grid: AzimuthGrid,
        filters: Vec<BrirPair>,
        sample_rate: u32,
        rt60_tag: impl Into<String>,
    ) -> Result<Self> {
        if filters.len() != grid.count {
            return Err(Error::invalid(format!(
                "BRIR set has {} filter pairs for {} azimuths",
                filters.len(),
                grid.count
            )));
        }
        let len = filters[0].left.len();
        if len == 0 {
            return Err(Error::invalid("BRIR filters must be non-empty"));
        }
        for (j, f) in filters.iter().enumerate() {
            if f.left.len() != len || f.right.len() != len {
                return Err(Error::invalid(format!(
                    "BRIR pair {j} has lengths {}/{}; expected {len}",
                    f.left.len(),
                    f.right.len()
                )));
            }
            if f.left.iter().chain(&f.right).any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("BRIR pair {j} has non-finite taps")));
            }
        }
        if sample_rate == 0 {
            return Err(Error::invalid("BRIR sample rate must be positive"));
        }
        Ok(Self {
            grid,
            filters,
            sample_rate,
            rt60_tag: rt60_tag.into(),
        })
    }

    pub fn grid(&self) -> &AzimuthGrid {
        &self.grid
    }

    pub fn azimuths(&self) -> Vec<f64> {
        self.grid.azimuths()
    }

    pub fn filter_len(&self) -> usize {
        self.filters[0].left.len()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn rt60_tag(&self) -> &str {
        &self.rt60_tag
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn pair(&self, index: usize) -> Result<&BrirPair> {
        self.filters.get(index).ok_or_else(|| {
            Error::invalid(format!(
                "grid index {index} out of range for {} BRIRs",
                self.filters.len()
            ))
        })
    }

    pub fn pairs(&self) -> &[BrirPair] {
        &self.filters
    }

    pub fn manifest(&self) -> BrirManifest {
        BrirManifest {
            version: MANIFEST_VERSION,
            grid_min_deg: self.grid.min_deg,
            grid_step_deg: self.grid.step_deg,
            grid_count: self.grid.count,
            rt60_tag: self.rt60_tag.clone(),
            filter_len: self.filter_len(),
            sample_rate: self.sample_rate,
        }
    }

    /// Loads a dataset directory (manifest plus per-azimuth WAVs).
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest_path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&manifest_path)
            .map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: BrirManifest = toml::from_str(&text).map_err(|e| Error::Config {
            path: manifest_path.clone(),
            message: e.to_string(),
        })?;
        if manifest.version != MANIFEST_VERSION {
            return Err(Error::Config {
                path: manifest_path,
                message: format!("unsupported manifest version {}", manifest.version),
            });
        }
        let grid = AzimuthGrid::new(
            manifest.grid_min_deg,
            manifest.grid_step_deg,
            manifest.grid_count,
        )?;
        let mut filters = Vec::with_capacity(grid.count);
        for deg in grid.azimuths() {
            let path = dir.join(azimuth_file_name(deg)?);
            if !path.exists() {
                return Err(Error::MissingAsset(format!("BRIR file {}", path.display())));
            }
            let stereo = read_wav(&path, Some(manifest.sample_rate))?.into_stereo()?;
            if stereo.len() != manifest.filter_len {
                return Err(Error::Wav(format!(
                    "{}: filter length {} does not match manifest {}",
                    path.display(),
                    stereo.len(),
                    manifest.filter_len
                )));
            }
            filters.push(BrirPair {
                left: stereo.left().samples().to_vec(),
                right: stereo.right().samples().to_vec(),
            });
        }
        Self::new(grid, filters, manifest.sample_rate, manifest.rt60_tag)
    }

    /// Writes the set as a float-32 dataset directory.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (deg, pair) in self.grid.azimuths().into_iter().zip(&self.filters) {
            let stereo = StereoSignal::new(
                MonoSignal::new(pair.left.clone(), self.sample_rate)?,
                MonoSignal::new(pair.right.clone(), self.sample_rate)?,
            )?;
            write_wav(&stereo, dir.join(azimuth_file_name(deg)?), WavCodec::Float32)?;
        }
        let text = toml::to_string(&self.manifest())
            .map_err(|e| Error::invalid(format!("cannot encode manifest: {e}")))?;
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// `az+005.wav`, `az-090.wav`, `az+000.wav`.
pub fn azimuth_file_name(deg: f64) -> Result<String> {
    let rounded = deg.round();
    if (deg - rounded).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "azimuth {deg} is not an integer degree and cannot be named"
        )));
    }
    let sign = if rounded < 0.0 { '-' } else { '+' };
    Ok(format!("az{sign}{:03}.wav", rounded.abs() as i64))
}

/// Parameters of the synthetic spherical-head room model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticBrirParams {
    /// Reverberation time in seconds; 0 gives anechoic filters.
    pub rt60_s: f64,
    pub filter_len: usize,
    pub seed: u64,
    #[serde(default = "default_head_radius")]
    pub head_radius_m: f64,
}

fn default_head_radius() -> f64 {
    0.0875
}

impl Default for SyntheticBrirParams {
    fn default() -> Self {
        Self {
            rt60_s: 0.3,
            filter_len: 2048,
            seed: 1,
            head_radius_m: default_head_radius(),
        }
    }
}

const SPEED_OF_SOUND: f64 = 343.0;
const DIRECT_BASE_DELAY: f64 = 24.0;
const SINC_HALF_WIDTH: i64 = 16;

/// Interaural time difference in samples (left-ear lead positive) for an
/// azimuth in degrees, spherical-head rule τ = (a/c)(θ + sin θ).
pub fn spherical_head_itd_samples(az_deg: f64, head_radius_m: f64, sample_rate: u32) -> f64 {
    let theta = az_deg.to_radians().clamp(-PI / 2.0, PI / 2.0);
    head_radius_m / SPEED_OF_SOUND * (theta + theta.sin()) * sample_rate as f64
}

fn add_fractional_impulse(filter: &mut [f64], position: f64, gain: f64) {
    let center = position.floor() as i64;
    for k in (center - SINC_HALF_WIDTH + 1)..=(center + SINC_HALF_WIDTH) {
        if k < 0 || k as usize >= filter.len() {
            continue;
        }
        let x = k as f64 - position;
        let sinc = if x.abs() < 1e-12 {
            1.0
        } else {
            (PI * x).sin() / (PI * x)
        };
        let w = 0.5 + 0.5 * (PI * x / (SINC_HALF_WIDTH as f64 + 1.0)).cos();
        filter[k as usize] += gain * sinc * w;
    }
}

/// Synthetic BRIRs: fractional-delay direct path with a spherical-head ITD and a
/// head-shadow level difference, sparse random early reflections, and an
/// exponentially decaying noise tail set by RT60.
pub fn synthetic_brirs(grid: AzimuthGrid, params: SyntheticBrirParams) -> Result<BrirSet> {
    if params.filter_len < 2 * SINC_HALF_WIDTH as usize + DIRECT_BASE_DELAY as usize + 16 {
        return Err(Error::invalid(format!(
            "synthetic BRIR filter length {} is too short",
            params.filter_len
        )));
    }
    if !(params.rt60_s >= 0.0) {
        return Err(Error::invalid("rt60 must be non-negative"));
    }
    let fs = SAMPLE_RATE as f64;
    let mut filters = Vec::with_capacity(grid.count);
    for (j, deg) in grid.azimuths().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ ((j as u64 + 1) << 32));
        let itd = spherical_head_itd_samples(deg, params.head_radius_m, SAMPLE_RATE);
        let shadow = 10f64.powf(-6.0 * deg.to_radians().sin().abs() / 20.0);
        let (gain_l, gain_r) = if deg >= 0.0 { (1.0, shadow) } else { (shadow, 1.0) };
        let mut left = vec![0.0; params.filter_len];
        let mut right = vec![0.0; params.filter_len];
        add_fractional_impulse(&mut left, DIRECT_BASE_DELAY - itd / 2.0, gain_l);
        add_fractional_impulse(&mut right, DIRECT_BASE_DELAY + itd / 2.0, gain_r);

        if params.rt60_s > 0.0 {
            let decay = |t: f64| (-6.907_755 * t / params.rt60_s).exp();
            let early_end = (0.025 * fs) as usize;
            for _ in 0..6 {
                let delay = rng.gen_range(0.003 * fs..0.025 * fs) + DIRECT_BASE_DELAY;
                let t = delay / fs;
                let amp = rng.gen_range(0.1..0.35) * decay(t) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let spread = rng.gen_range(-4.0..4.0);
                add_fractional_impulse(&mut left, delay, amp);
                add_fractional_impulse(&mut right, delay + spread, amp);
            }
            let tail_start = early_end + DIRECT_BASE_DELAY as usize;
            for n in tail_start..params.filter_len {
                let env = 0.04 * decay(n as f64 / fs);
                left[n] += env * gaussian(&mut rng);
                right[n] += env * gaussian(&mut rng);
            }
        }
        filters.push(BrirPair { left, right });
    }
    BrirSet::new(grid, filters, SAMPLE_RATE, format!("{:.2}", params.rt60_s))
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Anechoic pure-delay filters: the left ear receives a unit delta at a fixed
/// base lag and the right ear at `base + samples_per_step·(j − center)`, so
/// interaural delay is linear in azimuth and antisymmetric about 0°. Sources on
/// the left (positive azimuth) reach the right ear late.
pub fn pure_delay_brirs(grid: AzimuthGrid, samples_per_step: usize) -> Result<BrirSet> {
    let center = (grid.count as i64 - 1) / 2;
    let max_shift = samples_per_step as i64 * center.max(grid.count as i64 - 1 - center);
    let base = max_shift;
    let len = (2 * max_shift + 1) as usize;
    let filters = (0..grid.count as i64)
        .map(|j| {
            let mut left = vec![0.0; len];
            let mut right = vec![0.0; len];
            let lag = base + samples_per_step as i64 * (j - center);
            left[base as usize] = 1.0;
            right[lag as usize] = 1.0;
            BrirPair { left, right }
        })
        .collect();
    BrirSet::new(grid, filters, SAMPLE_RATE, "anechoic")
}
