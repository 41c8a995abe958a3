//! Core audio containers and frame arithmetic.
//!
//! All audio in the toolkit runs at [`SAMPLE_RATE`]. Constructors validate the
//! rate and reject anything else instead of resampling.

use crate::error::{Error, Result};

/// Project-wide sample rate in Hz.
pub const SAMPLE_RATE: u32 = 16_000;

/// A single channel of finite samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl MonoSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Signal("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Signal(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Builds a signal at [`SAMPLE_RATE`].
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, SAMPLE_RATE)
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate: SAMPLE_RATE,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Two synchronized channels.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoSignal {
    left: MonoSignal,
    right: MonoSignal,
}

impl StereoSignal {
    pub fn new(left: MonoSignal, right: MonoSignal) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::Signal(format!(
                "channel length mismatch: left {} vs right {}",
                left.len(),
                right.len()
            )));
        }
        if left.sample_rate() != right.sample_rate() {
            return Err(Error::Signal(format!(
                "channel rate mismatch: left {} vs right {}",
                left.sample_rate(),
                right.sample_rate()
            )));
        }
        Ok(Self { left, right })
    }

    pub fn from_channels(left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        Self::new(MonoSignal::from_samples(left)?, MonoSignal::from_samples(right)?)
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            left: MonoSignal::zeros(len),
            right: MonoSignal::zeros(len),
        }
    }

    pub fn left(&self) -> &MonoSignal {
        &self.left
    }

    pub fn right(&self) -> &MonoSignal {
        &self.right
    }

    pub fn channels(&self) -> [&MonoSignal; 2] {
        [&self.left, &self.right]
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.left.sample_rate()
    }

    /// Summed energy over both channels.
    pub fn energy(&self) -> f64 {
        self.left.energy() + self.right.energy()
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            left: self.left.scaled(gain),
            right: self.right.scaled(gain),
        }
    }

    pub fn add(&self, other: &StereoSignal) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Signal(format!(
                "cannot add signals of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        let sum = |a: &MonoSignal, b: &MonoSignal| {
            a.samples()
                .iter()
                .zip(b.samples())
                .map(|(x, y)| x + y)
                .collect::<Vec<_>>()
        };
        StereoSignal::new(
            MonoSignal::new(sum(&self.left, &other.left), self.sample_rate())?,
            MonoSignal::new(sum(&self.right, &other.right), self.sample_rate())?,
        )
    }

    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            left: self.left.slice(start, end),
            right: self.right.slice(start, end),
        }
    }
}

/// Framing parameters in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    frame_len: usize,
    hop: usize,
}

impl FrameSpec {
    pub fn new(frame_len: usize, hop: usize) -> Result<Self> {
        if hop == 0 || hop > frame_len {
            return Err(Error::invalid(format!(
                "frame spec requires 0 < hop <= frame_len, got frame_len {frame_len}, hop {hop}"
            )));
        }
        Ok(Self { frame_len, hop })
    }

    /// Non-overlapping 4 ms frames (64 samples at 16 kHz).
    pub fn encoder() -> Self {
        Self {
            frame_len: 64,
            hop: 64,
        }
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }
}

/// Number of fully populated frames; tail samples that do not fill a frame are
/// not counted.
pub fn frame_count(signal_len: usize, spec: FrameSpec) -> usize {
    if signal_len < spec.frame_len {
        0
    } else {
        (signal_len - spec.frame_len) / spec.hop + 1
    }
}
