//! Versioned TOML configuration for simulation and experiments.
//!
//! Every table rejects unknown keys. Relative paths resolve against the
//! directory holding the config file; BRIR set ids resolve against
//! `$BINSEP_BRIR_ROOT`.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{gen_weights, load_weights, ArchitectureDescriptor, WeightContainer};
use crate::pipeline::PipelineConfig;
use crate::spatial::{
    pure_delay_brirs, synthetic_brirs, AzimuthGrid, BrirSet, ScenarioRanges, ScenarioSpec, SyntheticBrirParams,
};

pub const CONFIG_VERSION: u32 = 1;

/// Environment variable naming the directory that holds BRIR sets by id.
pub const BRIR_ROOT_ENV: &str = "BINSEP_BRIR_ROOT";

/// Parses `text` as a versioned config. Parse failures carry the line and
/// column from the TOML parser.
pub fn parse_config<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<T> {
    let config_err = |message: String| Error::Config {
        path: origin.to_path_buf(),
        message,
    };
    let raw: toml::Table = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
    match raw.get("version") {
        None => return Err(config_err(format!("missing `version` (expected {CONFIG_VERSION})"))),
        Some(toml::Value::Integer(v)) if *v == CONFIG_VERSION as i64 => {}
        Some(v) => return Err(config_err(format!("unsupported version {v} (expected {CONFIG_VERSION})"))),
    }
    toml::from_str(text).map_err(|e| config_err(e.to_string()))
}

pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Where a scenario's BRIRs come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BrirSource {
    /// The spherical-head room model.
    Synthetic {
        rt60_s: f64,
        filter_len: usize,
        seed: u64,
        #[serde(default)]
        head_radius_m: Option<f64>,
    },
    /// Single-tap filters, `samples_per_step` of interaural delay per grid step.
    PureDelay { samples_per_step: usize },
    /// A BRIR directory, by id under the BRIR root or by explicit path.
    Set {
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        path: Option<PathBuf>,
    },
}

impl Default for BrirSource {
    fn default() -> Self {
        let p = SyntheticBrirParams::default();
        BrirSource::Synthetic {
            rt60_s: p.rt60_s,
            filter_len: p.filter_len,
            seed: p.seed,
            head_radius_m: None,
        }
    }
}

impl BrirSource {
    /// Makes explicit relative paths absolute against `base`.
    pub fn anchored(&self, base: &Path) -> Self {
        match self {
            BrirSource::Set { id, path: Some(p) } if p.is_relative() => BrirSource::Set {
                id: id.clone(),
                path: Some(base.join(p)),
            },
            other => other.clone(),
        }
    }

    pub fn resolve_dir(&self) -> Result<Option<PathBuf>> {
        match self {
            BrirSource::Set { path: Some(p), id: None } => Ok(Some(p.clone())),
            BrirSource::Set { id: Some(id), path: None } => {
                let root = std::env::var_os(BRIR_ROOT_ENV).ok_or_else(|| {
                    Error::MissingAsset(format!("BRIR set {id:?} requested but {BRIR_ROOT_ENV} is not set"))
                })?;
                Ok(Some(PathBuf::from(root).join(id)))
            }
            BrirSource::Set { .. } => Err(Error::invalid("a BRIR set needs exactly one of `id` or `path`")),
            _ => Ok(None),
        }
    }

    pub fn load(&self) -> Result<BrirSet> {
        match self {
            BrirSource::Synthetic {
                rt60_s,
                filter_len,
                seed,
                head_radius_m,
            } => {
                let mut p = SyntheticBrirParams {
                    rt60_s: *rt60_s,
                    filter_len: *filter_len,
                    seed: *seed,
                    ..SyntheticBrirParams::default()
                };
                if let Some(r) = head_radius_m {
                    p.head_radius_m = *r;
                }
                synthetic_brirs(AzimuthGrid::frontal(), p)
            }
            BrirSource::PureDelay { samples_per_step } => pure_delay_brirs(AzimuthGrid::frontal(), *samples_per_step),
            BrirSource::Set { .. } => {
                let dir = self.resolve_dir()?.expect("set sources resolve to a directory");
                if !dir.join(crate::spatial::MANIFEST_NAME).exists() {
                    return Err(Error::MissingAsset(format!("BRIR manifest under {}", dir.display())));
                }
                BrirSet::load_dir(dir)
            }
        }
    }
}

/// Draws `count` scenarios from one set of ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub count: usize,
    pub duration_s: f64,
    #[serde(default = "default_velocity")]
    pub velocity_deg_s: (f64, f64),
    #[serde(default = "default_snr")]
    pub rel_snr_db: (f64, f64),
    #[serde(default = "default_pool")]
    pub speaker_pool: u64,
    /// Overrides the experiment-level BRIR source.
    #[serde(default)]
    pub brirs: Option<BrirSource>,
}

fn default_velocity() -> (f64, f64) {
    crate::spatial::VELOCITY_RANGE
}
fn default_snr() -> (f64, f64) {
    crate::spatial::REL_SNR_RANGE_DB
}
fn default_pool() -> u64 {
    ScenarioRanges::new(1.0).speaker_pool
}

impl GeneratorSpec {
    pub fn ranges(&self) -> ScenarioRanges {
        ScenarioRanges {
            duration_s: self.duration_s,
            velocity_deg_s: self.velocity_deg_s,
            rel_snr_db: self.rel_snr_db,
            speaker_pool: self.speaker_pool,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorPreset {
    Default,
    Tiny,
}

impl DescriptorPreset {
    pub fn descriptor(self) -> ArchitectureDescriptor {
        match self {
            DescriptorPreset::Default => ArchitectureDescriptor::default(),
            DescriptorPreset::Tiny => ArchitectureDescriptor::tiny(),
        }
    }
}

/// Either a container file or seeded random weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub preset: Option<DescriptorPreset>,
}

impl WeightsSpec {
    pub fn load(&self, base: &Path) -> Result<WeightContainer> {
        match (&self.path, self.seed) {
            (Some(p), None) if self.preset.is_none() => load_weights(base.join(p)),
            (None, Some(seed)) => gen_weights(&self.preset.unwrap_or(DescriptorPreset::Default).descriptor(), seed),
            _ => Err(Error::invalid(
                "[weights] takes either `path`, or `seed` with an optional `preset`",
            )),
        }
    }
}

/// A batch of scenarios plus what to run on them. `simulate` reads only the
/// scenario part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub brirs: BrirSource,
    /// Directory of mono WAVs for non-synthetic sources.
    #[serde(default)]
    pub corpus_dir: Option<PathBuf>,
    /// When set, `simulate` also writes synthetic oracle embeddings of this
    /// width.
    #[serde(default)]
    pub oracle_embedding_dim: Option<usize>,
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub weights: Option<WeightsSpec>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    /// Scenarios processed concurrently.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_jobs() -> usize {
    1
}

/// One planned scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedScenario {
    pub index: usize,
    pub spec: ScenarioSpec,
    pub brirs: BrirSource,
}

impl ExperimentSpec {
    /// Loads, validates and anchors relative paths at the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut spec: Self = read_config(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        spec.anchor(&base);
        spec.validate().map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(spec)
    }

    pub fn anchor(&mut self, base: &Path) {
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
        if let Some(d) = &self.corpus_dir {
            if d.is_relative() {
                self.corpus_dir = Some(base.join(d));
            }
        }
        if let Some(w) = &mut self.weights {
            if let Some(p) = &w.path {
                w.path = Some(base.join(p));
            }
        }
        self.brirs = self.brirs.anchored(base);
        for g in &mut self.generators {
            g.brirs = g.brirs.as_ref().map(|b| b.anchored(base));
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::invalid(format!("unsupported version {}", self.version)));
        }
        if self.generators.is_empty() {
            return Err(Error::invalid("at least one [[generators]] entry is required"));
        }
        for (i, g) in self.generators.iter().enumerate() {
            if g.count == 0 {
                return Err(Error::invalid(format!("generator {i}: count must be at least 1")));
            }
            if !(g.duration_s > 0.0 && g.duration_s.is_finite()) {
                return Err(Error::invalid(format!("generator {i}: duration must be positive")));
            }
        }
        if self.jobs == 0 {
            return Err(Error::invalid("jobs must be at least 1"));
        }
        if self.oracle_embedding_dim == Some(0) {
            return Err(Error::invalid("oracle_embedding_dim must be positive"));
        }
        Ok(())
    }

    pub fn scenario_count(&self) -> usize {
        self.generators.iter().map(|g| g.count).sum()
    }

    /// Every scenario in index order, seeded by [`child_seed`].
    pub fn plan(&self) -> Result<Vec<PlannedScenario>> {
        let grid = AzimuthGrid::frontal();
        let mut out = Vec::with_capacity(self.scenario_count());
        for g in &self.generators {
            let ranges = g.ranges();
            for _ in 0..g.count {
                let index = out.len();
                let spec = ranges.sample(scenario_id(index), child_seed(self.master_seed, index as u64), &grid)?;
                out.push(PlannedScenario {
                    index,
                    spec,
                    brirs: g.brirs.clone().unwrap_or_else(|| self.brirs.clone()),
                });
            }
        }
        Ok(out)
    }
}

pub fn scenario_id(index: usize) -> String {
    format!("s{index:04}")
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-scenario seed: `splitmix64(splitmix64(master) ^ index)`.
pub fn child_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}
