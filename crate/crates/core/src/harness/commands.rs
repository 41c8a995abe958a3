//! The batch commands behind the CLI. Each one is deterministic given its
//! inputs; wall-clock figures go only to `timing.json`.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use super::config::{BrirSource, ExperimentSpec, PlannedScenario};
use super::manifest::{
    output_file, read_scenario, synthetic_oracle, track_file, write_scenario, TruthManifest, ORACLE_FILE, TRUTH_FILE,
};
use super::report::{summarize, write_records, ErrorRecord, ReportLine, Summary, TimingReport};
use crate::error::{Error, Result};
use crate::localization::{track_records, write_track};
use crate::metrics::{build_eval_localizer, EvalLocalizerTable};
use crate::net::{load_weights, Network};
use crate::pipeline::{process_stream, score_outputs, PipelineConfig, PipelineOutput, ScenarioRecord, Timing};
use crate::signal::{FrameSpec, StereoSignal, SAMPLE_RATE};
use crate::spatial::{build_scenario, BrirSet, DefaultCorpus, Scenario};
use crate::tracker::{OracleEmbeddingSeq, ProfileMode};
use crate::wav::{read_wav, write_wav, WavCodec};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SUMMARY_TABLE_FILE: &str = "summary.md";
pub const TIMING_FILE: &str = "timing.json";
pub const SCENARIO_DIR: &str = "scenarios";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// BRIR sets and their delay tables, built once per distinct source.
struct BrirCache {
    entries: Mutex<Vec<(BrirSource, Arc<BrirSet>, Arc<EvalLocalizerTable>)>>,
}

impl BrirCache {
    fn new() -> Self {
        Self {
            entries: Mutex::new(Vec::new()),
        }
    }

    fn get(&self, source: &BrirSource) -> Result<(Arc<BrirSet>, Arc<EvalLocalizerTable>)> {
        let mut entries = self.entries.lock().expect("cache lock");
        if let Some((_, b, t)) = entries.iter().find(|(s, _, _)| s == source) {
            return Ok((Arc::clone(b), Arc::clone(t)));
        }
        let set = source.load()?;
        let table = build_eval_localizer(&set)?;
        let (b, t) = (Arc::new(set), Arc::new(table));
        entries.push((source.clone(), Arc::clone(&b), Arc::clone(&t)));
        Ok((b, t))
    }
}

fn scenario_dir(spec: &ExperimentSpec, id: &str) -> PathBuf {
    spec.output_dir.join(SCENARIO_DIR).join(id)
}

fn corpus(spec: &ExperimentSpec) -> DefaultCorpus {
    spec.corpus_dir.as_ref().map_or_else(DefaultCorpus::synthetic, DefaultCorpus::with_dir)
}

/// Oracle embeddings for one scenario at `hop` samples per frame.
fn oracle_for(p: &PlannedScenario, samples: usize, hop: usize, dim: usize) -> Result<OracleEmbeddingSeq> {
    synthetic_oracle(&p.spec, samples.div_ceil(hop), dim)
}

fn simulate_one(
    spec: &ExperimentSpec,
    p: &PlannedScenario,
    brirs: &BrirSet,
    oracle: Option<(usize, usize)>,
) -> Result<(Scenario, PathBuf)> {
    let scenario = build_scenario(&p.spec, brirs, &corpus(spec))?;
    let dir = scenario_dir(spec, &p.spec.id);
    let mut manifest = TruthManifest::new(&scenario, &p.spec, &p.brirs, spec.corpus_dir.clone());
    if let Some((hop, dim)) = oracle {
        create_dir(&dir)?;
        oracle_for(p, scenario.mixture.len(), hop, dim)?.save(dir.join(ORACLE_FILE))?;
        manifest.files.oracle_embeddings = Some(ORACLE_FILE.into());
    }
    write_scenario(&dir, &scenario, &manifest)?;
    Ok((scenario, dir.join(TRUTH_FILE)))
}

/// Writes every scenario of `spec` under `<output_dir>/scenarios/<id>/` and
/// returns the manifest paths in index order.
pub fn simulate(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    let cache = BrirCache::new();
    let oracle = spec.oracle_embedding_dim.map(|d| (FrameSpec::encoder().hop(), d));
    spec.plan()?
        .iter()
        .map(|p| {
            let (brirs, _) = cache.get(&p.brirs)?;
            Ok(simulate_one(spec, p, &brirs, oracle)?.1)
        })
        .collect()
}

/// Writes per-speaker WAVs and voted DOA tracks into `dir`.
pub fn write_separation(dir: &Path, out: &PipelineOutput, config: &PipelineConfig, hop: usize) -> Result<()> {
    create_dir(dir)?;
    let chunk_s = (config.doa_chunk_frames * hop) as f64 / SAMPLE_RATE as f64;
    for (i, (speaker, track)) in out.speakers.iter().zip(&out.doa_tracks).enumerate() {
        write_wav(speaker, dir.join(output_file(i)), WavCodec::Float32)?;
        let path = dir.join(track_file(i));
        let mut buf = Vec::new();
        write_track(&track_records(track, chunk_s), &mut buf)?;
        write_text(&path, std::str::from_utf8(&buf).expect("json is utf-8"))?;
    }
    Ok(())
}

/// Separates one mixture file into `out_dir`, including `timing.json`.
pub fn separate(
    mixture: &Path,
    weights: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
    oracle: Option<&Path>,
) -> Result<PipelineOutput> {
    let net = Arc::new(Network::load(&load_weights(weights)?)?);
    let mix = read_wav(mixture, Some(SAMPLE_RATE))?.into_stereo()?;
    let oracle = oracle.map(OracleEmbeddingSeq::load).transpose()?;
    let out = process_stream(Arc::clone(&net), &mix, config, oracle)?;
    write_separation(out_dir, &out, config, net.hop())?;
    let t = TimingReport::new(vec![(mixture.display().to_string(), out.timing)], mix.len() as f64 / SAMPLE_RATE as f64);
    write_text(&out_dir.join(TIMING_FILE), &t.to_json())?;
    Ok(out)
}

/// What to score in `evaluate`.
#[derive(Debug, Clone)]
pub struct EvaluateRequest {
    pub outputs: Vec<PathBuf>,
    /// Defaults to the references listed in the manifest.
    pub references: Option<Vec<PathBuf>>,
    pub manifest: PathBuf,
    pub segments: usize,
    pub profile_mode: Option<ProfileMode>,
}

fn read_stereo(path: &Path) -> Result<StereoSignal> {
    read_wav(path, Some(SAMPLE_RATE))?.into_stereo()
}

fn check_aligned(scenario: &Scenario, outputs: &[StereoSignal], names: &[PathBuf]) -> Result<()> {
    if outputs.len() != scenario.references.len() {
        return Err(Error::Evaluation(format!(
            "{} outputs for {} references",
            outputs.len(),
            scenario.references.len()
        )));
    }
    let want = scenario.mixture.len();
    for r in &scenario.references {
        if r.len() != want {
            return Err(Error::Evaluation(format!(
                "reference has {} samples, mixture has {want}",
                r.len()
            )));
        }
    }
    for (o, n) in outputs.iter().zip(names) {
        if o.len() != want {
            return Err(Error::Evaluation(format!(
                "{} has {} samples, reference has {want}",
                n.display(),
                o.len()
            )));
        }
    }
    Ok(())
}

/// Scores output files against a scenario's truth.
pub fn evaluate(req: &EvaluateRequest) -> Result<ScenarioRecord> {
    let (manifest, mut scenario) = read_scenario(&req.manifest)?;
    if let Some(refs) = &req.references {
        scenario.references = refs.iter().map(|p| read_stereo(p)).collect::<Result<_>>()?;
        scenario.scales = vec![1.0; scenario.references.len()];
    }
    let outputs = req.outputs.iter().map(|p| read_stereo(p)).collect::<Result<Vec<_>>>()?;
    check_aligned(&scenario, &outputs, &req.outputs)?;
    let brirs = manifest.brirs.load()?;
    let table = build_eval_localizer(&brirs)?;
    score_outputs(&scenario, &outputs, req.profile_mode, &table, brirs.grid(), req.segments)
}

/// Everything `run_experiment` produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<ScenarioRecord>,
    pub summary: Summary,
    pub timing: TimingReport,
}

fn run_one(
    spec: &ExperimentSpec,
    p: &PlannedScenario,
    net: &Arc<Network>,
    cache: &BrirCache,
) -> Result<(ScenarioRecord, Timing)> {
    let (brirs, table) = cache.get(&p.brirs)?;
    let d = net.descriptor();
    let oracle_shape = match spec.pipeline.profile_mode {
        ProfileMode::Oracle => Some((d.hop(), d.embed_dim)),
        ProfileMode::Centroid => spec.oracle_embedding_dim.map(|dim| (d.hop(), dim)),
    };
    let (_, manifest_path) = simulate_one(spec, p, &brirs, oracle_shape)?;
    let dir = manifest_path.parent().expect("manifest inside scenario dir").to_path_buf();
    // separation and scoring both start from the files on disk
    let (manifest, scenario) = read_scenario(&manifest_path)?;
    let oracle = match spec.pipeline.profile_mode {
        ProfileMode::Oracle => {
            let name = manifest.files.oracle_embeddings.as_ref().expect("oracle written above");
            Some(OracleEmbeddingSeq::load(dir.join(name))?)
        }
        ProfileMode::Centroid => None,
    };
    let out = process_stream(Arc::clone(net), &scenario.mixture, &spec.pipeline, oracle)?;
    write_separation(&dir, &out, &spec.pipeline, net.hop())?;
    let outputs = (0..out.speakers.len())
        .map(|i| read_stereo(&dir.join(output_file(i))))
        .collect::<Result<Vec<_>>>()?;
    let record = score_outputs(
        &scenario,
        &outputs,
        Some(spec.pipeline.profile_mode),
        &table,
        brirs.grid(),
        spec.pipeline.swap_segments,
    )?;
    Ok((record, out.timing))
}

/// Simulate, separate and evaluate every scenario, then aggregate.
///
/// Up to `spec.jobs` scenarios run at once; records are written in index
/// order. On the first failure no further scenarios start and the records
/// file ends with that scenario's error record.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let weights = spec
        .weights
        .as_ref()
        .ok_or_else(|| Error::invalid("run-experiment needs a [weights] table"))?
        .load(Path::new(""))?;
    let net = Arc::new(Network::load(&weights)?);
    spec.pipeline.validate(&net)?;
    let plan = spec.plan()?;
    create_dir(&spec.output_dir)?;

    let cache = BrirCache::new();
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let results: Vec<Mutex<Option<Result<(ScenarioRecord, Timing)>>>> =
        plan.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..spec.jobs.min(plan.len()) {
            s.spawn(|| loop {
                if failed.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(p) = plan.get(i) else { break };
                let r = run_one(spec, p, &net, &cache);
                if r.is_err() {
                    failed.store(true, Ordering::SeqCst);
                }
                *results[i].lock().expect("result lock") = Some(r);
            });
        }
    });

    let mut lines = Vec::new();
    let mut records = Vec::new();
    let mut timings = Vec::new();
    let mut audio_s = 0.0;
    for (p, slot) in plan.iter().zip(results) {
        match slot.into_inner().expect("result lock") {
            Some(Ok((record, timing))) => {
                audio_s += record.duration_s;
                timings.push((record.scenario.clone(), timing));
                lines.push(ReportLine::Scenario(record.clone()));
                records.push(record);
            }
            Some(Err(e)) => {
                lines.push(ReportLine::Error(ErrorRecord {
                    scenario: p.spec.id.clone(),
                    error: e.to_string(),
                    exit_code: e.exit_code(),
                }));
                write_records(&spec.output_dir.join(RECORDS_FILE), &lines)?;
                return Err(e);
            }
            // not started because an earlier scenario failed
            None => break,
        }
    }
    write_records(&spec.output_dir.join(RECORDS_FILE), &lines)?;
    let summary = summarize(&records)?;
    write_text(&spec.output_dir.join(SUMMARY_FILE), &summary.to_json())?;
    write_text(&spec.output_dir.join(SUMMARY_TABLE_FILE), &summary.table())?;
    let timing = TimingReport::new(timings, audio_s);
    write_text(&spec.output_dir.join(TIMING_FILE), &timing.to_json())?;
    Ok(ExperimentOutcome {
        records,
        summary,
        timing,
    })
}
