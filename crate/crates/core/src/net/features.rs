//! Waveform encoder/decoder and interaural spatial features.
//!
//! Frames are non-overlapping: encoder frame `t` covers samples
//! `[t·hop, (t+1)·hop)`. The STFT frame with the same index uses the window of
//! `stft_window` samples that ends where encoder frame `t` ends (zeros before
//! the start of the signal), so features never look past the current frame.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::container::WeightContainer;
use super::ops::matvec_acc;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::signal::{MonoSignal, StereoSignal};

/// Floor added to magnitudes before the level ratio.
pub const ILD_EPS: f64 = 1e-8;

/// Linear analysis filterbank, weight `[kernel, filters]`.
#[derive(Debug, Clone)]
pub struct Encoder {
    kernel: usize,
    filters: usize,
    weight: Vec<f32>,
}

impl Encoder {
    pub fn load(w: &WeightContainer) -> Result<Self> {
        let t = w.tensor("encoder.weight")?;
        Ok(Self {
            kernel: t.shape()[0],
            filters: t.shape()[1],
            weight: t.data().to_vec(),
        })
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    #[inline]
    pub fn frame(&self, samples: &[f32], out: &mut [f32]) {
        out.fill(0.0);
        matvec_acc(samples, &self.weight, out);
    }
}

/// Linear synthesis filterbank, weight `[filters, kernel]`, overlap-added at
/// hop = kernel.
#[derive(Debug, Clone)]
pub struct Decoder {
    kernel: usize,
    filters: usize,
    weight: Vec<f32>,
}

impl Decoder {
    pub fn load(w: &WeightContainer) -> Result<Self> {
        let t = w.tensor("decoder.weight")?;
        Ok(Self {
            filters: t.shape()[0],
            kernel: t.shape()[1],
            weight: t.data().to_vec(),
        })
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    #[inline]
    pub fn frame(&self, features: &[f32], out: &mut [f32]) {
        out.fill(0.0);
        matvec_acc(features, &self.weight, out);
    }
}

/// Frames the channel (zero-padding the tail to a whole frame) and applies
/// the encoder. Output is `[T, filters]`, `T = ⌈len / kernel⌉`.
pub fn encode(channel: &MonoSignal, encoder: &Encoder) -> Result<Tensor> {
    if channel.is_empty() {
        return Err(Error::Signal("cannot encode an empty signal".into()));
    }
    let l = encoder.kernel;
    let frames = channel.len().div_ceil(l);
    let mut padded: Vec<f32> = channel.samples().iter().map(|v| *v as f32).collect();
    padded.resize(frames * l, 0.0);
    let mut out = vec![0.0; frames * encoder.filters];
    for t in 0..frames {
        encoder.frame(&padded[t * l..(t + 1) * l], &mut out[t * encoder.filters..(t + 1) * encoder.filters]);
    }
    Tensor::new(vec![frames, encoder.filters], out)
}

/// Overlap-add synthesis of `[T, filters]` features; output length `T·kernel`.
pub fn decode(features: &Tensor, decoder: &Decoder) -> Result<MonoSignal> {
    let frames = features.expect_matrix("decoder input", decoder.filters)?;
    let hop = decoder.kernel;
    let mut out = vec![0.0f64; frames * hop];
    let mut buf = vec![0.0f32; decoder.kernel];
    for t in 0..frames {
        decoder.frame(features.row(t), &mut buf);
        for (k, v) in buf.iter().enumerate() {
            out[t * hop + k] += *v as f64;
        }
    }
    MonoSignal::from_samples(out)
}

/// Per-frame IPD (radians, `(−π, π]`) and ILD (dB, left over right).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFeatures {
    pub frames: usize,
    pub bins: usize,
    pub ipd: Vec<f32>,
    pub ild: Vec<f32>,
}

impl SpatialFeatures {
    pub fn ipd_row(&self, t: usize) -> &[f32] {
        &self.ipd[t * self.bins..(t + 1) * self.bins]
    }

    pub fn ild_row(&self, t: usize) -> &[f32] {
        &self.ild[t * self.bins..(t + 1) * self.bins]
    }
}

/// Short-time analysis for interaural cues with a periodic Hann window.
#[derive(Clone)]
pub struct StftAnalyzer {
    window: Vec<f64>,
    hop: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for StftAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StftAnalyzer")
            .field("window", &self.window.len())
            .field("hop", &self.hop)
            .finish()
    }
}

/// Buffers for one analysis frame.
pub(crate) struct StftScratch {
    l: Vec<Complex<f64>>,
    r: Vec<Complex<f64>>,
    fft: Vec<Complex<f64>>,
}

impl StftAnalyzer {
    pub fn new(window: usize, hop: usize) -> Result<Self> {
        if window == 0 || hop == 0 || hop > window {
            return Err(Error::invalid(format!("bad STFT window {window} / hop {hop}")));
        }
        let hann = (0..window)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / window as f64).cos())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(window);
        Ok(Self {
            window: hann,
            hop,
            fft,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn bins(&self) -> usize {
        self.window.len() / 2 + 1
    }

    pub(crate) fn scratch(&self) -> StftScratch {
        let n = self.window.len();
        StftScratch {
            l: vec![Complex::default(); n],
            r: vec![Complex::default(); n],
            fft: vec![Complex::default(); self.fft.get_inplace_scratch_len()],
        }
    }

    /// IPD and ILD for one window of each channel.
    pub(crate) fn analyze(&self, left: &[f32], right: &[f32], ipd: &mut [f32], ild: &mut [f32], s: &mut StftScratch) {
        for (n, w) in self.window.iter().enumerate() {
            s.l[n] = Complex::new(left[n] as f64 * w, 0.0);
            s.r[n] = Complex::new(right[n] as f64 * w, 0.0);
        }
        self.fft.process_with_scratch(&mut s.l, &mut s.fft);
        self.fft.process_with_scratch(&mut s.r, &mut s.fft);
        for k in 0..self.bins() {
            let (l, r) = (s.l[k], s.r[k]);
            let cross = l * r.conj();
            let mut phase = cross.im.atan2(cross.re);
            if phase <= -PI {
                phase = PI;
            }
            ipd[k] = phase as f32;
            ild[k] = (20.0 * ((l.norm() + ILD_EPS) / (r.norm() + ILD_EPS)).log10()) as f32;
        }
    }
}

/// IPD/ILD for every frame of a (tail zero-padded) stereo mixture.
pub fn compute_spatial_features(mix: &StereoSignal, stft: &StftAnalyzer) -> Result<SpatialFeatures> {
    if mix.is_empty() {
        return Err(Error::Signal("cannot analyze an empty mixture".into()));
    }
    let hop = stft.hop();
    let win = stft.window_len();
    let frames = mix.len().div_ceil(hop);
    let lead = win - hop;
    let pad = |ch: &MonoSignal| {
        let mut v = vec![0.0f32; lead];
        v.extend(ch.samples().iter().map(|x| *x as f32));
        v.resize(lead + frames * hop, 0.0);
        v
    };
    let (l, r) = (pad(mix.left()), pad(mix.right()));
    let bins = stft.bins();
    let mut ipd = vec![0.0; frames * bins];
    let mut ild = vec![0.0; frames * bins];
    let mut s = stft.scratch();
    for t in 0..frames {
        let span = t * hop..t * hop + win;
        stft.analyze(
            &l[span.clone()],
            &r[span],
            &mut ipd[t * bins..(t + 1) * bins],
            &mut ild[t * bins..(t + 1) * bins],
            &mut s,
        );
    }
    Ok(SpatialFeatures {
        frames,
        bins,
        ipd,
        ild,
    })
}
