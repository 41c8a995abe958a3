//! Deterministic speech-like test sources.
//!
//! A "voice" is a harmonic source with a speaker-specific pitch range and
//! spectral tilt, gated into syllable-length bursts with pauses and occasional
//! noise (fricative) bursts. The voice parameters depend only on the speaker
//! id; the utterance content depends on both the speaker id and a content seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::signal::{MonoSignal, SAMPLE_RATE};

const TARGET_RMS: f64 = 0.1;
const MAX_HARMONICS: usize = 24;

struct Voice {
    f0: f64,
    tilt: f64,
    formants: [f64; 3],
}

impl Voice {
    fn for_speaker(speaker: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(speaker.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x5eed);
        Self {
            f0: rng.gen_range(90.0..240.0),
            tilt: rng.gen_range(0.6..1.2),
            formants: [
                rng.gen_range(400.0..900.0),
                rng.gen_range(1000.0..2200.0),
                rng.gen_range(2300.0..3500.0),
            ],
        }
    }

    fn harmonic_gain(&self, freq: f64, k: usize) -> f64 {
        let peak: f64 = self
            .formants
            .iter()
            .map(|f| (-((freq - f) / 250.0).powi(2)).exp())
            .sum();
        (1.0 + 3.0 * peak) / (k as f64).powf(self.tilt)
    }
}

/// `len` samples of speech-like audio for `speaker`, content drawn from `seed`.
pub fn speech_like(speaker: u64, seed: u64, len: usize) -> MonoSignal {
    let voice = Voice::for_speaker(speaker);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ speaker.rotate_left(17) ^ 0xC0FFEE);
    let fs = SAMPLE_RATE as f64;
    let mut out = vec![0.0; len];
    let mut n = 0usize;
    let mut phase = 0.0f64;
    while n < len {
        let pause = rng.gen_bool(0.2);
        let dur = if pause {
            rng.gen_range(0.08..0.3)
        } else {
            rng.gen_range(0.1..0.3)
        };
        let seg = ((dur * fs) as usize).max(1).min(len - n);
        if !pause {
            let fricative = rng.gen_bool(0.12);
            let contour = rng.gen_range(-0.15..0.15);
            let level = rng.gen_range(0.5..1.0);
            let mut prev = 0.0;
            for i in 0..seg {
                let x = i as f64 / seg as f64;
                let env = level * (PI * x).sin().powi(2);
                let sample = if fricative {
                    let white: f64 = rng.gen_range(-1.0..1.0);
                    let hp = white - prev;
                    prev = white;
                    0.4 * hp
                } else {
                    let f0 = voice.f0 * (1.0 + contour * (x - 0.5));
                    phase += 2.0 * PI * f0 / fs;
                    if phase > 2.0 * PI * 1e6 {
                        phase -= 2.0 * PI * 1e6;
                    }
                    let mut acc = 0.0;
                    for k in 1..=MAX_HARMONICS {
                        let freq = f0 * k as f64;
                        if freq > 4000.0 {
                            break;
                        }
                        acc += voice.harmonic_gain(freq, k) * (k as f64 * phase).sin();
                    }
                    acc
                };
                out[n + i] = env * sample;
            }
        }
        n += seg;
    }
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / len.max(1) as f64).sqrt();
    if rms > 0.0 {
        let g = TARGET_RMS / rms;
        out.iter_mut().for_each(|v| *v *= g);
    }
    MonoSignal::from_samples(out).expect("synthetic samples are finite")
}
