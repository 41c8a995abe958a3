//! Per-scenario truth manifest and the on-disk scenario layout.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::BrirSource;
use crate::error::{Error, Result};
use crate::signal::{StereoSignal, SAMPLE_RATE};
use crate::spatial::{simulate_with_trajectories, DefaultCorpus, Scenario, ScenarioSpec, Trajectory};
use crate::tracker::OracleEmbeddingSeq;
use crate::wav::{read_wav, write_wav, WavCodec};

pub const MANIFEST_VERSION: u32 = 1;
pub const TRUTH_FILE: &str = "truth.json";
pub const MIXTURE_FILE: &str = "mixture.wav";
pub const ORACLE_FILE: &str = "oracle.bsrw";

pub fn reference_file(speaker: usize) -> String {
    format!("ref{}.wav", speaker + 1)
}

pub fn output_file(speaker: usize) -> String {
    format!("speaker{}.wav", speaker + 1)
}

pub fn track_file(speaker: usize) -> String {
    format!("speaker{}.doa.jsonl", speaker + 1)
}

/// File names relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFiles {
    pub mixture: String,
    /// Each reference as it appears inside the mixture.
    pub references: Vec<String>,
    #[serde(default)]
    pub oracle_embeddings: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthManifest {
    pub version: u32,
    pub scenario: ScenarioSpec,
    pub brirs: BrirSource,
    #[serde(default)]
    pub corpus_dir: Option<PathBuf>,
    pub sample_rate: u32,
    pub samples: usize,
    /// Gain applied to each spatialized source in the mixture.
    pub scales: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    /// Per speaker, the grid index of each 64-sample frame.
    pub labels: Vec<Vec<usize>>,
    pub files: ScenarioFiles,
}

impl TruthManifest {
    pub fn new(scenario: &Scenario, spec: &ScenarioSpec, brirs: &BrirSource, corpus_dir: Option<PathBuf>) -> Self {
        Self {
            version: MANIFEST_VERSION,
            scenario: spec.clone(),
            brirs: brirs.clone(),
            corpus_dir,
            sample_rate: SAMPLE_RATE,
            samples: scenario.mixture.len(),
            scales: scenario.scales.clone(),
            trajectories: scenario.trajectories.clone(),
            labels: scenario.labels.clone(),
            files: ScenarioFiles {
                mixture: MIXTURE_FILE.into(),
                references: (0..scenario.references.len()).map(reference_file).collect(),
                oracle_embeddings: None,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Config {
                path: path.to_path_buf(),
                message: format!("unsupported manifest version {}", m.version),
            });
        }
        Ok(m)
    }

    fn corpus(&self) -> DefaultCorpus {
        self.corpus_dir.as_ref().map_or_else(DefaultCorpus::synthetic, DefaultCorpus::with_dir)
    }

    /// Rebuilds the scene from the recorded spec and trajectories.
    pub fn resimulate(&self) -> Result<Scenario> {
        let brirs = self.brirs.load()?;
        simulate_with_trajectories(&self.scenario, &brirs, &self.corpus(), self.trajectories.clone())
    }
}

/// Writes mixture, scaled references and the manifest into `dir`.
pub fn write_scenario(dir: &Path, scenario: &Scenario, manifest: &TruthManifest) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_wav(&scenario.mixture, dir.join(&manifest.files.mixture), WavCodec::Float32)?;
    for (r, name) in scenario.scaled_references().iter().zip(&manifest.files.references) {
        write_wav(r, dir.join(name), WavCodec::Float32)?;
    }
    manifest.save(&dir.join(TRUTH_FILE))
}

/// A scenario read back from disk: the mixture and scaled references as
/// stored, with unit scales.
pub fn read_scenario(manifest_path: &Path) -> Result<(TruthManifest, Scenario)> {
    let m = TruthManifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let read = |name: &str| -> Result<StereoSignal> { read_wav(dir.join(name), Some(SAMPLE_RATE))?.into_stereo() };
    let mixture = read(&m.files.mixture)?;
    let references = m.files.references.iter().map(|n| read(n)).collect::<Result<Vec<_>>>()?;
    let scenario = Scenario {
        id: m.scenario.id.clone(),
        mixture,
        scales: vec![1.0; references.len()],
        references,
        trajectories: m.trajectories.clone(),
        labels: m.labels.clone(),
    };
    Ok((m, scenario))
}

fn source_hash(s: &str) -> u64 {
    // FNV-1a
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Stand-in oracle embeddings: a fixed ±1 identity vector per source plus
/// per-frame Gaussian noise of standard deviation 0.1.
pub fn synthetic_oracle(spec: &ScenarioSpec, frames: usize, dim: usize) -> Result<OracleEmbeddingSeq> {
    if frames == 0 || dim == 0 {
        return Err(Error::invalid("oracle embeddings need at least one frame and one dimension"));
    }
    let noise = Normal::new(0.0, 0.1).expect("valid normal");
    let tracks: Vec<Vec<f64>> = spec
        .speakers
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut id_rng = ChaCha8Rng::seed_from_u64(source_hash(&s.source));
            let identity: Vec<f64> = (0..dim)
                .map(|_| if rand::Rng::gen_bool(&mut id_rng, 0.5) { 1.0 } else { -1.0 })
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (0x5EED_0000 + i as u64));
            (0..frames)
                .flat_map(|_| identity.iter().map(|v| v + noise.sample(&mut rng)).collect::<Vec<_>>())
                .collect()
        })
        .collect();
    OracleEmbeddingSeq::from_tracks(&tracks, dim)
}
