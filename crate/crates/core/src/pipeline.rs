//! The streaming separator: features → speaker embeddings → profiles →
//! per-speaker FiLM-conditioned localization and extraction, frame by frame.
//!
//! The profile used at frame `t` is computed from frames `≤ t` only (the
//! k-means snapshot after consuming frame `t`). The only lookahead is the
//! encoder frame itself; an output frame is emitted as soon as its 64 input
//! samples have arrived.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localization::{argmax_labels, chunk_vote, classes_to_degrees, ChunkSpec, DEFAULT_CHUNK_FRAMES};
use crate::metrics::{
    best_pairing, build_eval_localizer, count_swaps, doa_error, estimate_doa_track, snr_db, stereo_snr,
    stereo_snr_mean, truth_doa_track, DoaError, EvalLocalizerTable, DEFAULT_SEGMENTS, DOA_WINDOW,
};
use crate::net::{DoaFrameMatrix, FrontendState, Network, Scratch, SpeakerState, StreamState};
use crate::signal::{StereoSignal, SAMPLE_RATE};
use crate::spatial::{AzimuthGrid, BrirSet, Scenario};
use crate::tracker::{
    best_assignment, distance, EmbeddingFrameSeq, KMeansConfig, OnlineKMeansState, OracleEmbeddingSeq, ProfileMode,
    SpeakerProfileSeq,
};

/// Frames per `push` when a whole signal is streamed through the separator.
pub const DEFAULT_STREAM_CHUNK_FRAMES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_mode")]
    pub profile_mode: ProfileMode,
    /// Frames per DOA vote.
    #[serde(default = "default_q")]
    pub doa_chunk_frames: usize,
    #[serde(default = "AzimuthGrid::frontal")]
    pub grid: AzimuthGrid,
    /// Frames handed to the separator per push.
    #[serde(default = "default_stream_chunk")]
    pub stream_chunk_frames: usize,
    #[serde(default)]
    pub kmeans: KMeansConfig,
    /// Segments for swap counting.
    #[serde(default = "default_segments")]
    pub swap_segments: usize,
}

fn default_mode() -> ProfileMode {
    ProfileMode::Centroid
}
fn default_q() -> usize {
    DEFAULT_CHUNK_FRAMES
}
fn default_stream_chunk() -> usize {
    DEFAULT_STREAM_CHUNK_FRAMES
}
fn default_segments() -> usize {
    DEFAULT_SEGMENTS
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            profile_mode: default_mode(),
            doa_chunk_frames: default_q(),
            grid: AzimuthGrid::frontal(),
            stream_chunk_frames: default_stream_chunk(),
            kmeans: KMeansConfig::default(),
            swap_segments: default_segments(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self, net: &Network) -> Result<()> {
        if self.doa_chunk_frames == 0 || self.stream_chunk_frames == 0 || self.swap_segments == 0 {
            return Err(Error::invalid("chunk sizes and segment count must be positive"));
        }
        if self.grid.count != net.descriptor().doa_classes {
            return Err(Error::invalid(format!(
                "grid has {} azimuths but the network scores {} classes",
                self.grid.count,
                net.descriptor().doa_classes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub frames: usize,
    pub seconds: f64,
    pub frames_per_s: f64,
    /// Processing time over audio duration.
    pub real_time_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// One stereo signal per speaker, as long as the input.
    pub speakers: Vec<StereoSignal>,
    pub doa_scores: Vec<DoaFrameMatrix>,
    /// Per speaker, the voted azimuth of each whole chunk, degrees.
    pub doa_tracks: Vec<Vec<f64>>,
    pub embeddings: EmbeddingFrameSeq,
    pub profiles: SpeakerProfileSeq,
    pub timing: Timing,
}

enum Profiler {
    Centroid(OnlineKMeansState),
    Oracle(OracleEmbeddingSeq),
}

/// One separation stream. Feed any number of samples per push; output frames
/// become readable as soon as they are complete.
pub struct StreamingSeparator {
    net: Arc<Network>,
    config: PipelineConfig,
    profiler: Profiler,
    frontend: FrontendState,
    speaker: StreamState,
    speakers: Vec<SpeakerState>,
    scratch: Scratch,
    pending: (Vec<f32>, Vec<f32>),
    samples_in: usize,
    feat: Vec<f32>,
    emb32: Vec<f32>,
    emb: Vec<f64>,
    profile32: Vec<f32>,
    fused: Vec<f32>,
    doa_row: Vec<f32>,
    masked: (Vec<f32>, Vec<f32>),
    decoded: Vec<f32>,
    outputs: Vec<(Vec<f64>, Vec<f64>)>,
    read: Vec<usize>,
    doa: Vec<DoaFrameMatrix>,
    embeddings: EmbeddingFrameSeq,
    profiles: EmbeddingFrameSeq,
    busy: f64,
}

impl StreamingSeparator {
    /// `oracle` must be given exactly when the profile mode is oracle.
    pub fn new(net: Arc<Network>, config: PipelineConfig, oracle: Option<OracleEmbeddingSeq>) -> Result<Self> {
        config.validate(&net)?;
        let d = net.descriptor().clone();
        let profiler = match (config.profile_mode, oracle) {
            (ProfileMode::Centroid, None) => {
                Profiler::Centroid(OnlineKMeansState::new(d.num_speakers, d.embed_dim, config.kmeans)?)
            }
            (ProfileMode::Oracle, Some(o)) => {
                if o.slots() != d.num_speakers || o.dim() != d.embed_dim {
                    return Err(Error::shape(format!(
                        "oracle embeddings are {}×{}, the network emits {}×{}",
                        o.slots(),
                        o.dim(),
                        d.num_speakers,
                        d.embed_dim
                    )));
                }
                Profiler::Oracle(o)
            }
            (ProfileMode::Oracle, None) => {
                return Err(Error::MissingAsset("oracle profile mode needs oracle embeddings".into()))
            }
            (ProfileMode::Centroid, Some(_)) => return Err(Error::invalid("centroid profile mode takes no oracle")),
        };
        let n = d.num_speakers;
        Ok(Self {
            frontend: net.new_frontend_state(),
            speaker: net.speaker.new_state(),
            speakers: (0..n).map(|_| net.new_speaker_state()).collect(),
            scratch: net.scratch(),
            pending: (Vec::with_capacity(d.hop()), Vec::with_capacity(d.hop())),
            samples_in: 0,
            feat: vec![0.0; d.feature_dim()],
            emb32: vec![0.0; n * d.embed_dim],
            emb: vec![0.0; n * d.embed_dim],
            profile32: vec![0.0; n * d.embed_dim],
            fused: vec![0.0; d.bottleneck],
            doa_row: vec![0.0; d.doa_classes],
            masked: (vec![0.0; d.enc_filters], vec![0.0; d.enc_filters]),
            decoded: vec![0.0; d.hop()],
            outputs: vec![(Vec::new(), Vec::new()); n],
            read: vec![0; n],
            doa: (0..n).map(|_| DoaFrameMatrix::new(d.doa_classes, Vec::new())).collect::<Result<_>>()?,
            embeddings: EmbeddingFrameSeq::empty(n, d.embed_dim)?,
            profiles: EmbeddingFrameSeq::empty(n, d.embed_dim)?,
            busy: 0.0,
            profiler,
            config,
            net,
        })
    }

    pub fn frames(&self) -> usize {
        self.embeddings.frames()
    }

    pub fn samples_in(&self) -> usize {
        self.samples_in
    }

    pub fn push(&mut self, left: &[f64], right: &[f64]) -> Result<()> {
        if left.len() != right.len() {
            return Err(Error::Signal("left and right chunks differ in length".into()));
        }
        if left.iter().chain(right).any(|v| !v.is_finite()) {
            return Err(Error::Signal("non-finite input sample".into()));
        }
        let started = Instant::now();
        let hop = self.net.hop();
        self.samples_in += left.len();
        for (l, r) in left.iter().zip(right) {
            self.pending.0.push(*l as f32);
            self.pending.1.push(*r as f32);
            if self.pending.0.len() == hop {
                let (pl, pr) = std::mem::take(&mut self.pending);
                let res = self.frame(&pl, &pr);
                self.pending = (pl, pr);
                self.pending.0.clear();
                self.pending.1.clear();
                res?;
            }
        }
        self.busy += started.elapsed().as_secs_f64();
        Ok(())
    }

    fn frame(&mut self, l: &[f32], r: &[f32]) -> Result<()> {
        let net = Arc::clone(&self.net);
        let s = &mut self.scratch;
        net.frontend.frame(l, r, &mut self.frontend, &mut self.feat, &mut s.frontend);
        net.speaker.step(&self.feat, &mut self.speaker, s, &mut self.emb32);
        for (o, v) in self.emb.iter_mut().zip(&self.emb32) {
            *o = *v as f64;
        }
        self.embeddings.push_frame(&self.emb)?;
        let t = self.profiles.frames();
        let dim = self.embeddings.dim();
        match &mut self.profiler {
            Profiler::Centroid(km) => {
                let step = km.step(&self.emb)?;
                self.profiles.push_frame(&step.centroids)?;
            }
            Profiler::Oracle(oracle) => {
                if t >= oracle.frames() {
                    return Err(Error::shape(format!(
                        "oracle embeddings end after {} frames",
                        oracle.frames()
                    )));
                }
                let perms = crate::tracker::permutations(oracle.slots());
                let emb = &self.emb;
                let (k, _) = best_assignment(&perms, |i, j| {
                    distance(&emb[i * dim..(i + 1) * dim], oracle.get(j, t))
                });
                let reordered: Vec<f64> =
                    perms[k].iter().flat_map(|&i| emb[i * dim..(i + 1) * dim].iter().copied()).collect();
                self.profiles.push_frame(&reordered)?;
            }
        }
        for (o, v) in self.profile32.iter_mut().zip(self.profiles.frame(t)) {
            *o = *v as f32;
        }
        let n = net.frontend.filters();
        for (i, st) in self.speakers.iter_mut().enumerate() {
            let p = &self.profile32[i * dim..(i + 1) * dim];
            net.fusion.step(&self.feat, p, &mut st.fusion, s, &mut self.fused);
            net.localizer.step(&self.fused, p, &mut st.localizer, s, &mut self.doa_row);
            net.extractor.step(
                &self.fused,
                &self.doa_row,
                p,
                (&self.feat[..n], &self.feat[n..2 * n]),
                &mut st.extraction,
                s,
                (&mut self.masked.0, &mut self.masked.1),
            );
            self.doa[i].push_row(&self.doa_row)?;
            let out = &mut self.outputs[i];
            net.decoder.frame(&self.masked.0, &mut self.decoded);
            out.0.extend(self.decoded.iter().map(|v| *v as f64));
            net.decoder.frame(&self.masked.1, &mut self.decoded);
            out.1.extend(self.decoded.iter().map(|v| *v as f64));
        }
        Ok(())
    }

    /// Samples of speaker `i` ready to read.
    pub fn available(&self, speaker: usize) -> usize {
        self.outputs[speaker].0.len().min(self.samples_in) - self.read[speaker]
    }

    /// Copies up to `left.len()` unread samples of speaker `i`; returns the
    /// count.
    pub fn read(&mut self, speaker: usize, left: &mut [f64], right: &mut [f64]) -> Result<usize> {
        if speaker >= self.outputs.len() {
            return Err(Error::invalid(format!("no speaker {speaker}")));
        }
        let n = self.available(speaker).min(left.len()).min(right.len());
        let at = self.read[speaker];
        left[..n].copy_from_slice(&self.outputs[speaker].0[at..at + n]);
        right[..n].copy_from_slice(&self.outputs[speaker].1[at..at + n]);
        self.read[speaker] += n;
        Ok(n)
    }

    /// Flushes the partial tail frame (zero-padded) and returns everything.
    pub fn finish(mut self) -> Result<PipelineOutput> {
        let hop = self.net.hop();
        let started = Instant::now();
        if !self.pending.0.is_empty() {
            let (mut pl, mut pr) = std::mem::take(&mut self.pending);
            pl.resize(hop, 0.0);
            pr.resize(hop, 0.0);
            self.frame(&pl, &pr)?;
        }
        self.busy += started.elapsed().as_secs_f64();
        let len = self.samples_in;
        let speakers = self
            .outputs
            .into_iter()
            .map(|(mut l, mut r)| {
                l.truncate(len);
                r.truncate(len);
                StereoSignal::from_channels(l, r)
            })
            .collect::<Result<Vec<_>>>()?;
        let q = ChunkSpec::new(self.config.doa_chunk_frames)?;
        let doa_tracks = self
            .doa
            .iter()
            .map(|m| {
                let labels = argmax_labels(m);
                if labels.len() < q.frames {
                    return Ok(Vec::new());
                }
                classes_to_degrees(&chunk_vote(&labels, q, m.classes())?.classes, &self.config.grid)
            })
            .collect::<Result<Vec<_>>>()?;
        let frames = self.embeddings.frames();
        let audio_s = len as f64 / SAMPLE_RATE as f64;
        Ok(PipelineOutput {
            speakers,
            doa_scores: self.doa,
            doa_tracks,
            profiles: SpeakerProfileSeq::new(self.config.profile_mode, self.profiles),
            embeddings: self.embeddings,
            timing: Timing {
                frames,
                seconds: self.busy,
                frames_per_s: if self.busy > 0.0 { frames as f64 / self.busy } else { f64::INFINITY },
                real_time_factor: if audio_s > 0.0 { self.busy / audio_s } else { 0.0 },
            },
        })
    }
}

/// Streams `mix` through a fresh separator in pushes of
/// `config.stream_chunk_frames` frames.
pub fn process_stream(
    net: Arc<Network>,
    mix: &StereoSignal,
    config: &PipelineConfig,
    oracle: Option<OracleEmbeddingSeq>,
) -> Result<PipelineOutput> {
    if mix.is_empty() {
        return Err(Error::Signal("empty mixture".into()));
    }
    let step = config.stream_chunk_frames * net.hop();
    let mut sep = StreamingSeparator::new(net, config.clone(), oracle)?;
    let (l, r) = (mix.left().samples(), mix.right().samples());
    let mut at = 0;
    while at < l.len() {
        let end = (at + step).min(l.len());
        sep.push(&l[at..end], &r[at..end])?;
        at = end;
    }
    sep.finish()
}

/// Localizer stand-in label carried in every report.
pub const DOA_METHOD: &str = "gcc-phat-brir-delay-table";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerScore {
    /// Left plus right channel SNR, dB.
    pub snr_db: f64,
    pub snr_mean_db: f64,
    /// SNR of the unprocessed mixture against this reference, dB.
    pub mixture_snr_db: f64,
    pub doa_mae_deg: Option<f64>,
    pub doa_windows_scored: usize,
    pub doa_windows_skipped: usize,
}

/// One scored scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub scenario: String,
    /// Absent when scoring files whose provenance is unknown.
    pub profile_mode: Option<ProfileMode>,
    pub duration_s: f64,
    /// Output index assigned to each reference over the whole recording.
    pub pairing: Vec<usize>,
    pub speakers: Vec<SpeakerScore>,
    pub swaps: usize,
    pub segment_pattern: String,
    pub doa_method: String,
}

/// Scores separated outputs against the scaled references of `scenario`.
pub fn score_outputs(
    scenario: &Scenario,
    outputs: &[StereoSignal],
    profile_mode: Option<ProfileMode>,
    table: &EvalLocalizerTable,
    grid: &AzimuthGrid,
    segments: usize,
) -> Result<ScenarioRecord> {
    let refs = scenario.scaled_references();
    let (k, _) = best_pairing(outputs, &refs, 0, scenario.mixture.len())?;
    let pairing = crate::tracker::permutations(refs.len())[k].clone();
    let swaps = count_swaps(outputs, &refs, segments.min(scenario.mixture.len()))?;
    let mut speakers = Vec::with_capacity(refs.len());
    for (j, reference) in refs.iter().enumerate() {
        let out = &outputs[pairing[j]];
        let mixture_snr = snr_db(reference.left(), scenario.mixture.left())?
            + snr_db(reference.right(), scenario.mixture.right())?;
        let doa = if out.len() >= DOA_WINDOW {
            let est = estimate_doa_track(out, table, DOA_WINDOW)?;
            let truth = truth_doa_track(&scenario.trajectories[j], grid, DOA_WINDOW, est.len())?;
            doa_error(&est, &truth).ok().map_or_else(
                || DoaError {
                    mae_deg: f64::NAN,
                    scored: 0,
                    skipped: est.len(),
                },
                |e| e,
            )
        } else {
            DoaError {
                mae_deg: f64::NAN,
                scored: 0,
                skipped: 0,
            }
        };
        speakers.push(SpeakerScore {
            snr_db: stereo_snr(reference, out)?,
            snr_mean_db: stereo_snr_mean(reference, out)?,
            mixture_snr_db: mixture_snr,
            doa_mae_deg: (doa.scored > 0).then_some(doa.mae_deg),
            doa_windows_scored: doa.scored,
            doa_windows_skipped: doa.skipped,
        });
    }
    Ok(ScenarioRecord {
        scenario: scenario.id.clone(),
        profile_mode,
        duration_s: scenario.mixture.len() as f64 / SAMPLE_RATE as f64,
        pairing,
        speakers,
        swaps: swaps.swaps,
        segment_pattern: swaps.pattern,
        doa_method: DOA_METHOD.to_string(),
    })
}

/// Runs the separator on a simulated scenario and scores the result.
pub fn process_with_report(
    net: Arc<Network>,
    scenario: &Scenario,
    brirs: &BrirSet,
    config: &PipelineConfig,
    oracle: Option<OracleEmbeddingSeq>,
) -> Result<(ScenarioRecord, PipelineOutput)> {
    let out = process_stream(net, &scenario.mixture, config, oracle)?;
    let table = build_eval_localizer(brirs)?;
    let record = score_outputs(
        scenario,
        &out.speakers,
        Some(config.profile_mode),
        &table,
        &config.grid,
        config.swap_segments,
    )?;
    Ok((record, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{gen_weights, ArchitectureDescriptor, WeightContainer};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_net() -> Arc<Network> {
        Arc::new(Network::load(&gen_weights(&ArchitectureDescriptor::tiny(), 21).unwrap()).unwrap())
    }

    fn noise_mix(seed: u64, len: usize) -> StereoSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ch = || (0..len).map(|_| rng.gen_range(-0.3..0.3)).collect::<Vec<f64>>();
        StereoSignal::from_channels(ch(), ch()).unwrap()
    }

    #[test]
    fn arbitrary_push_sizes_match_whole_frames() {
        let net = tiny_net();
        let mix = noise_mix(1, 3001);
        let cfg = PipelineConfig {
            stream_chunk_frames: 1,
            ..PipelineConfig::default()
        };
        let a = process_stream(Arc::clone(&net), &mix, &cfg, None).unwrap();
        assert_eq!(a.speakers[0].len(), 3001);

        let mut sep = StreamingSeparator::new(Arc::clone(&net), cfg, None).unwrap();
        let (l, r) = (mix.left().samples(), mix.right().samples());
        let mut at = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut streamed = vec![Vec::new(); 2];
        let mut buf_l = vec![0.0; 4096];
        let mut buf_r = vec![0.0; 4096];
        while at < l.len() {
            let n = rng.gen_range(1..300).min(l.len() - at);
            sep.push(&l[at..at + n], &r[at..at + n]).unwrap();
            for (i, s) in streamed.iter_mut().enumerate() {
                let got = sep.read(i, &mut buf_l, &mut buf_r).unwrap();
                s.extend_from_slice(&buf_l[..got]);
            }
            at += n;
        }
        // complete frames are readable before finish
        let hop = net.hop();
        assert_eq!(streamed[0].len(), 3001 / hop * hop);
        let b = sep.finish().unwrap();
        assert_eq!(a.speakers, b.speakers);
        assert_eq!(a.doa_scores, b.doa_scores);
        assert_eq!(&streamed[1][..], &b.speakers[1].left().samples()[..streamed[1].len()]);
    }

    #[test]
    fn silence_gives_finite_output() {
        let net = tiny_net();
        let frames = 4000usize.div_ceil(net.hop());
        let out = process_stream(net, &StereoSignal::zeros(4000), &PipelineConfig::default(), None).unwrap();
        assert!(out.speakers.iter().all(|s| s.left().samples().iter().all(|v| v.is_finite())));
        assert_eq!(out.doa_tracks[0].len(), frames / 20);
    }

    #[test]
    fn mode_and_oracle_must_agree() {
        let net = tiny_net();
        let d = net.descriptor().clone();
        let oracle = EmbeddingFrameSeq::new(2, d.embed_dim, vec![0.0; 2 * d.embed_dim * 4]).unwrap();
        let oracle_cfg = PipelineConfig {
            profile_mode: ProfileMode::Oracle,
            ..PipelineConfig::default()
        };
        assert!(StreamingSeparator::new(Arc::clone(&net), oracle_cfg.clone(), None).is_err());
        assert!(StreamingSeparator::new(Arc::clone(&net), PipelineConfig::default(), Some(oracle.clone())).is_err());
        // oracle shorter than the stream
        let err = process_stream(Arc::clone(&net), &noise_mix(3, 640), &oracle_cfg, Some(oracle));
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn passthrough_outputs_equal_the_mixture() {
        let d = ArchitectureDescriptor::tiny();
        let net = Arc::new(Network::load(&WeightContainer::passthrough(d, 3).unwrap()).unwrap());
        let mix = noise_mix(4, 2000);
        let out = process_stream(net, &mix, &PipelineConfig::default(), None).unwrap();
        for s in &out.speakers {
            for (a, b) in s.left().samples().iter().zip(mix.left().samples()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
