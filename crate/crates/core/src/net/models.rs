//! The assembled networks.
//!
//! Per frame `t`:
//!
//! * speaker-profile net: features → dense → conv stacks → PReLU → dense,
//!   split into N slot embeddings of width D;
//! * fusion net (per speaker): features → dense → conv stacks, FiLM-conditioned
//!   on the speaker's profile before every block;
//! * localizer (per speaker): FiLM(fused) → stacked LSTM → dense → softmax over
//!   the K azimuth classes;
//! * extractor (per speaker): [fused, class scores] → dense → FiLM-conditioned
//!   conv stacks → PReLU → dense → sigmoid, giving one mask per channel that
//!   multiplies that channel's encoded mixture before decoding.

use super::container::WeightContainer;
use super::descriptor::ArchitectureDescriptor;
use super::features::Decoder;
use super::frontend::{FrameFeatures, Frontend, FrontendScratch, FrontendState};
use super::lstm::LstmLayer;
use super::ops::{prelu, sigmoid, softmax, Dense, Film};
use super::state::StreamState;
use super::tcn::{BlockScratch, TcnStacks};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::signal::{MonoSignal, StereoSignal};
use crate::tracker::EmbeddingFrameSeq;

/// Per-frame DOA class scores, `T×K`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaFrameMatrix {
    classes: usize,
    scores: Vec<f32>,
}

impl DoaFrameMatrix {
    pub fn new(classes: usize, scores: Vec<f32>) -> Result<Self> {
        if classes == 0 || scores.len() % classes != 0 {
            return Err(Error::shape(format!("{} scores do not form rows of {classes}", scores.len())));
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("DOA scores must be finite"));
        }
        Ok(Self { classes, scores })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn frames(&self) -> usize {
        self.scores.len() / self.classes
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.scores[t * self.classes..(t + 1) * self.classes]
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }

    pub fn push_row(&mut self, row: &[f32]) -> Result<()> {
        if row.len() != self.classes {
            return Err(Error::shape("DOA row width mismatch"));
        }
        self.scores.extend_from_slice(row);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SpeakerProfileNet {
    input: Dense,
    stacks: TcnStacks,
    prelu: f32,
    output: Dense,
    slots: usize,
    dim: usize,
}

impl SpeakerProfileNet {
    pub fn load(w: &WeightContainer) -> Result<Self> {
        let d = w.descriptor();
        Ok(Self {
            input: Dense::load(w, "speaker.input")?,
            stacks: TcnStacks::load(w, "speaker", d.speaker_stacks, false)?,
            prelu: w.tensor("speaker.output.prelu")?.data()[0],
            output: Dense::load(w, "speaker.output")?,
            slots: d.num_speakers,
            dim: d.embed_dim,
        })
    }

    pub fn new_state(&self) -> StreamState {
        StreamState::new(self.stacks.new_rings(), &[])
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out` receives `slots·dim` values, slot-major.
    #[inline]
    pub(crate) fn step(&self, features: &[f32], state: &mut StreamState, s: &mut Scratch, out: &mut [f32]) {
        self.input.forward(features, &mut s.x);
        self.stacks.step(&mut s.x, None, &mut state.rings, &mut s.block);
        prelu(&mut s.x, self.prelu);
        self.output.forward(&s.x, out);
        state.advance(1);
    }
}

#[derive(Debug, Clone)]
pub struct FusionNet {
    input: Dense,
    stacks: TcnStacks,
}

impl FusionNet {
    pub fn load(w: &WeightContainer) -> Result<Self> {
        Ok(Self {
            input: Dense::load(w, "fusion.input")?,
            stacks: TcnStacks::load(w, "fusion", w.descriptor().fusion_stacks, true)?,
        })
    }

    pub fn new_state(&self) -> StreamState {
        StreamState::new(self.stacks.new_rings(), &[])
    }

    #[inline]
    pub(crate) fn step(&self, features: &[f32], profile: &[f32], state: &mut StreamState, s: &mut Scratch, out: &mut [f32]) {
        self.input.forward(features, out);
        self.stacks.step(out, Some(profile), &mut state.rings, &mut s.block);
        state.advance(1);
    }
}

#[derive(Debug, Clone)]
pub struct Localizer {
    film: Film,
    layers: Vec<LstmLayer>,
    output: Dense,
}

impl Localizer {
    pub fn load(w: &WeightContainer) -> Result<Self> {
        let d = w.descriptor();
        let layers = (0..d.lstm_layers)
            .map(|l| LstmLayer::load(w, &format!("localizer.lstm{l}")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            film: Film::load(w, "localizer.film")?,
            layers,
            output: Dense::load(w, "localizer.output")?,
        })
    }

    pub fn new_state(&self) -> StreamState {
        let widths: Vec<usize> = self.layers.iter().map(LstmLayer::hidden).collect();
        StreamState::new(Vec::new(), &widths)
    }

    #[inline]
    pub(crate) fn step(&self, fused: &[f32], profile: &[f32], state: &mut StreamState, s: &mut Scratch, out: &mut [f32]) {
        s.x.copy_from_slice(fused);
        self.film.apply(&mut s.x, profile, &mut s.film);
        for (l, layer) in self.layers.iter().enumerate() {
            let (h, c) = (&mut state.lstm_h[l], &mut state.lstm_c[l]);
            if l == 0 {
                layer.step(&s.x, h, c, &mut s.gates);
            } else {
                s.lstm_in.copy_from_slice(&state.lstm_h[l - 1]);
                let (h, c) = (&mut state.lstm_h[l], &mut state.lstm_c[l]);
                layer.step(&s.lstm_in, h, c, &mut s.gates);
            }
        }
        let top = state.lstm_h.last().expect("at least one LSTM layer");
        self.output.forward(top, out);
        softmax(out);
        state.advance(1);
    }
}

#[derive(Debug, Clone)]
pub struct Extractor {
    input: Dense,
    stacks: TcnStacks,
    prelu: f32,
    mask: Dense,
}

impl Extractor {
    pub fn load(w: &WeightContainer) -> Result<Self> {
        Ok(Self {
            input: Dense::load(w, "extraction.input")?,
            stacks: TcnStacks::load(w, "extraction", w.descriptor().extraction_stacks, true)?,
            prelu: w.tensor("extraction.output.prelu")?.data()[0],
            mask: Dense::load(w, "extraction.mask")?,
        })
    }

    pub fn new_state(&self) -> StreamState {
        StreamState::new(self.stacks.new_rings(), &[])
    }

    /// Masks `enc_l`/`enc_r` into `out_l`/`out_r`.
    #[allow(clippy::too_many_arguments)]
    #[inline]
    pub(crate) fn step(
        &self,
        fused: &[f32],
        doa: &[f32],
        profile: &[f32],
        enc: (&[f32], &[f32]),
        state: &mut StreamState,
        s: &mut Scratch,
        out: (&mut [f32], &mut [f32]),
    ) {
        let b = fused.len();
        s.cat[..b].copy_from_slice(fused);
        s.cat[b..].copy_from_slice(doa);
        self.input.forward(&s.cat, &mut s.x);
        self.stacks.step(&mut s.x, Some(profile), &mut state.rings, &mut s.block);
        prelu(&mut s.x, self.prelu);
        self.mask.forward(&s.x, &mut s.mask);
        let n = enc.0.len();
        for k in 0..n {
            out.0[k] = sigmoid(s.mask[k]) * enc.0[k];
            out.1[k] = sigmoid(s.mask[n + k]) * enc.1[k];
        }
        state.advance(1);
    }
}

/// All networks of one weight container. Immutable; share across streams.
#[derive(Debug, Clone)]
pub struct Network {
    descriptor: ArchitectureDescriptor,
    pub frontend: Frontend,
    pub decoder: Decoder,
    pub speaker: SpeakerProfileNet,
    pub fusion: FusionNet,
    pub localizer: Localizer,
    pub extractor: Extractor,
}

/// Working buffers for one stream.
pub struct Scratch {
    pub(crate) block: BlockScratch,
    pub(crate) x: Vec<f32>,
    pub(crate) cat: Vec<f32>,
    pub(crate) gates: Vec<f32>,
    pub(crate) lstm_in: Vec<f32>,
    pub(crate) mask: Vec<f32>,
    pub(crate) film: Vec<f32>,
    pub(crate) frontend: FrontendScratch,
}

impl Network {
    pub fn load(w: &WeightContainer) -> Result<Self> {
        let d = w.descriptor().clone();
        d.validate()?;
        Ok(Self {
            frontend: Frontend::load(w)?,
            decoder: Decoder::load(w)?,
            speaker: SpeakerProfileNet::load(w)?,
            fusion: FusionNet::load(w)?,
            localizer: Localizer::load(w)?,
            extractor: Extractor::load(w)?,
            descriptor: d,
        })
    }

    pub fn descriptor(&self) -> &ArchitectureDescriptor {
        &self.descriptor
    }

    pub fn hop(&self) -> usize {
        self.descriptor.hop()
    }

    pub fn scratch(&self) -> Scratch {
        let d = &self.descriptor;
        Scratch {
            block: BlockScratch::new(d.hidden, d.bottleneck),
            x: vec![0.0; d.bottleneck],
            cat: vec![0.0; d.bottleneck + d.doa_classes],
            gates: vec![0.0; 4 * d.lstm_hidden],
            lstm_in: vec![0.0; d.lstm_hidden],
            mask: vec![0.0; 2 * d.enc_filters],
            film: vec![0.0; 2 * d.bottleneck],
            frontend: self.frontend.scratch(),
        }
    }

    pub fn new_frontend_state(&self) -> FrontendState {
        self.frontend.new_state()
    }

    pub fn new_speaker_state(&self) -> SpeakerState {
        SpeakerState {
            fusion: self.fusion.new_state(),
            localizer: self.localizer.new_state(),
            extraction: self.extractor.new_state(),
        }
    }
}

/// Recurrent state of the per-speaker networks.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerState {
    pub fusion: StreamState,
    pub localizer: StreamState,
    pub extraction: StreamState,
}

impl SpeakerState {
    pub fn reset(&mut self) {
        self.fusion.reset();
        self.localizer.reset();
        self.extraction.reset();
    }
}

fn check_profile(profile: &Tensor, frames: usize, dim: usize) -> Result<()> {
    if profile.shape() != [frames, dim] {
        return Err(Error::shape(format!(
            "profile must be [{frames}, {dim}], got {:?}",
            profile.shape()
        )));
    }
    Ok(())
}

/// Slot embeddings for every frame of `input`.
pub fn speaker_profile_forward(net: &Network, input: &FrameFeatures, state: &mut StreamState) -> Result<EmbeddingFrameSeq> {
    let d = &net.descriptor;
    let t = input.features.expect_matrix("speaker-profile input", d.feature_dim())?;
    let mut s = net.scratch();
    let mut out = vec![0.0f32; d.num_speakers * d.embed_dim];
    let mut values = Vec::with_capacity(t * out.len());
    for ti in 0..t {
        net.speaker.step(input.features.row(ti), state, &mut s, &mut out);
        values.extend(out.iter().map(|v| *v as f64));
    }
    EmbeddingFrameSeq::new(d.num_speakers, d.embed_dim, values)
}

/// Fused `[T, bottleneck]` features conditioned on one speaker's `[T, D]`
/// profile.
pub fn fusion_forward(net: &Network, input: &FrameFeatures, profile: &Tensor, state: &mut StreamState) -> Result<Tensor> {
    let d = &net.descriptor;
    let t = input.features.expect_matrix("fusion input", d.feature_dim())?;
    check_profile(profile, t, d.embed_dim)?;
    let mut s = net.scratch();
    let b = d.bottleneck;
    let mut out = vec![0.0; t * b];
    for ti in 0..t {
        net.fusion.step(input.features.row(ti), profile.row(ti), state, &mut s, &mut out[ti * b..(ti + 1) * b]);
    }
    Tensor::new(vec![t, b], out)
}

pub fn localization_forward(net: &Network, fused: &Tensor, profile: &Tensor, state: &mut StreamState) -> Result<DoaFrameMatrix> {
    let d = &net.descriptor;
    let t = fused.expect_matrix("localizer input", d.bottleneck)?;
    check_profile(profile, t, d.embed_dim)?;
    let mut s = net.scratch();
    let k = d.doa_classes;
    let mut out = vec![0.0; t * k];
    for ti in 0..t {
        net.localizer.step(fused.row(ti), profile.row(ti), state, &mut s, &mut out[ti * k..(ti + 1) * k]);
    }
    DoaFrameMatrix::new(k, out)
}

/// Separated stereo signal for one speaker, `input.samples` long.
pub fn extraction_forward(
    net: &Network,
    fused: &Tensor,
    profile: &Tensor,
    doa: &DoaFrameMatrix,
    input: &FrameFeatures,
    state: &mut StreamState,
) -> Result<StereoSignal> {
    let d = &net.descriptor;
    let t = fused.expect_matrix("extractor input", d.bottleneck)?;
    check_profile(profile, t, d.embed_dim)?;
    if doa.frames() != t || doa.classes() != d.doa_classes || input.frames() != t {
        return Err(Error::shape("extractor inputs disagree in frame count or class count"));
    }
    let mut s = net.scratch();
    let n = d.enc_filters;
    let mut ml = vec![0.0; t * n];
    let mut mr = vec![0.0; t * n];
    for ti in 0..t {
        net.extractor.step(
            fused.row(ti),
            doa.row(ti),
            profile.row(ti),
            (input.enc_left.row(ti), input.enc_right.row(ti)),
            state,
            &mut s,
            (&mut ml[ti * n..(ti + 1) * n], &mut mr[ti * n..(ti + 1) * n]),
        );
    }
    let decode = |m: Vec<f32>| -> Result<MonoSignal> {
        let y = super::features::decode(&Tensor::new(vec![t, n], m)?, &net.decoder)?;
        Ok(y.slice(0, input.samples))
    };
    StereoSignal::new(decode(ml)?, decode(mr)?)
}
