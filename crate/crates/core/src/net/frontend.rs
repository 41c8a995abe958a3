//! Per-frame network input: both encoded channels, IPD and ILD.

use super::container::WeightContainer;
use super::features::{Encoder, StftAnalyzer, StftScratch};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::signal::StereoSignal;

/// Sample history carried between chunks: the last `stft_window − hop`
/// samples of each channel, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontendState {
    left: Vec<f32>,
    right: Vec<f32>,
    frames: u64,
}

impl FrontendState {
    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn reset(&mut self) {
        self.left.fill(0.0);
        self.right.fill(0.0);
        self.frames = 0;
    }
}

/// Frame-level inputs for `T` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    /// `[T, 2·filters + 2·bins]`: encoded left, encoded right, IPD, ILD.
    pub features: Tensor,
    pub enc_left: Tensor,
    pub enc_right: Tensor,
    /// Samples before tail padding.
    pub samples: usize,
}

impl FrameFeatures {
    pub fn frames(&self) -> usize {
        self.features.rows()
    }
}

#[derive(Debug, Clone)]
pub struct Frontend {
    encoder: Encoder,
    stft: StftAnalyzer,
}

pub(crate) struct FrontendScratch {
    win_l: Vec<f32>,
    win_r: Vec<f32>,
    stft: StftScratch,
}

impl Frontend {
    pub fn load(w: &WeightContainer) -> Result<Self> {
        let d = w.descriptor();
        Ok(Self {
            encoder: Encoder::load(w)?,
            stft: StftAnalyzer::new(d.stft_window, d.hop())?,
        })
    }

    pub fn hop(&self) -> usize {
        self.encoder.kernel()
    }

    pub fn filters(&self) -> usize {
        self.encoder.filters()
    }

    pub fn bins(&self) -> usize {
        self.stft.bins()
    }

    pub fn feature_dim(&self) -> usize {
        2 * self.filters() + 2 * self.bins()
    }

    pub fn new_state(&self) -> FrontendState {
        let n = self.stft.window_len() - self.hop();
        FrontendState {
            left: vec![0.0; n],
            right: vec![0.0; n],
            frames: 0,
        }
    }

    pub(crate) fn scratch(&self) -> FrontendScratch {
        let w = self.stft.window_len();
        FrontendScratch {
            win_l: vec![0.0; w],
            win_r: vec![0.0; w],
            stft: self.stft.scratch(),
        }
    }

    /// One hop of samples per channel into `features`; the encoded channels
    /// are its first `2·filters` values.
    pub(crate) fn frame(&self, l: &[f32], r: &[f32], state: &mut FrontendState, features: &mut [f32], s: &mut FrontendScratch) {
        let n = self.filters();
        let f = self.bins();
        let hist = state.left.len();
        let (enc, rest) = features.split_at_mut(2 * n);
        let (ipd, ild) = rest.split_at_mut(f);
        self.encoder.frame(l, &mut enc[..n]);
        self.encoder.frame(r, &mut enc[n..]);

        s.win_l[..hist].copy_from_slice(&state.left);
        s.win_l[hist..].copy_from_slice(l);
        s.win_r[..hist].copy_from_slice(&state.right);
        s.win_r[hist..].copy_from_slice(r);
        self.stft.analyze(&s.win_l, &s.win_r, ipd, ild, &mut s.stft);
        let hop = self.hop();
        state.left.copy_from_slice(&s.win_l[hop..]);
        state.right.copy_from_slice(&s.win_r[hop..]);
        state.frames += 1;
    }

    /// Features for a block of samples; the tail is zero-padded to a whole
    /// frame. Carries history in `state`.
    pub fn process(&self, mix: &StereoSignal, state: &mut FrontendState) -> Result<FrameFeatures> {
        if mix.is_empty() {
            return Err(Error::Signal("cannot featurize an empty mixture".into()));
        }
        let l: Vec<f32> = mix.left().samples().iter().map(|v| *v as f32).collect();
        let r: Vec<f32> = mix.right().samples().iter().map(|v| *v as f32).collect();
        self.process_f32(&l, &r, state)
    }

    pub(crate) fn process_f32(&self, l: &[f32], r: &[f32], state: &mut FrontendState) -> Result<FrameFeatures> {
        let hop = self.hop();
        let frames = l.len().div_ceil(hop);
        let (n, dim) = (self.filters(), self.feature_dim());
        let mut feats = vec![0.0; frames * dim];
        let mut s = self.scratch();
        let mut lf = vec![0.0; hop];
        let mut rf = vec![0.0; hop];
        for t in 0..frames {
            let end = ((t + 1) * hop).min(l.len());
            lf.fill(0.0);
            rf.fill(0.0);
            lf[..end - t * hop].copy_from_slice(&l[t * hop..end]);
            rf[..end - t * hop].copy_from_slice(&r[t * hop..end]);
            self.frame(&lf, &rf, state, &mut feats[t * dim..(t + 1) * dim], &mut s);
        }
        let mut el = Vec::with_capacity(frames * n);
        let mut er = Vec::with_capacity(frames * n);
        for row in feats.chunks_exact(dim) {
            el.extend_from_slice(&row[..n]);
            er.extend_from_slice(&row[n..2 * n]);
        }
        Ok(FrameFeatures {
            features: Tensor::new(vec![frames, dim], feats)?,
            enc_left: Tensor::new(vec![frames, n], el)?,
            enc_right: Tensor::new(vec![frames, n], er)?,
            samples: l.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::container::gen_weights;
    use crate::net::descriptor::ArchitectureDescriptor;
    use crate::net::features::{compute_spatial_features, encode};
    use crate::signal::MonoSignal;

    #[test]
    fn matches_offline_features_and_streams() {
        let w = gen_weights(&ArchitectureDescriptor::default(), 9).unwrap();
        let fe = Frontend::load(&w).unwrap();
        let l: Vec<f64> = (0..3000).map(|n| (n as f64 * 0.031).sin() * 0.4).collect();
        let r: Vec<f64> = (0..3000).map(|n| (n as f64 * 0.017).cos() * 0.3).collect();
        let mix = StereoSignal::from_channels(l.clone(), r).unwrap();
        let whole = fe.process(&mix, &mut fe.new_state()).unwrap();
        assert_eq!(whole.frames(), 47);
        assert_eq!(whole.features.cols(), 386);

        let enc = encode(&MonoSignal::from_samples(l).unwrap(), &Encoder::load(&w).unwrap()).unwrap();
        assert_eq!(whole.enc_left, enc);
        let spatial = compute_spatial_features(&mix, &StftAnalyzer::new(256, 64).unwrap()).unwrap();
        for t in 0..47 {
            let row = whole.features.row(t);
            assert_eq!(&row[128..257], spatial.ipd_row(t));
            assert_eq!(&row[257..], spatial.ild_row(t));
        }

        // chunks of whole frames reproduce the single pass
        let mut st = fe.new_state();
        let mut rows = Vec::new();
        for (a, b) in [(0, 640), (640, 704), (704, 3000)] {
            let part = fe.process(&mix.slice(a, b), &mut st).unwrap();
            rows.extend_from_slice(part.features.data());
        }
        assert_eq!(rows, whole.features.data());
    }
}
