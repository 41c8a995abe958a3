//! RIFF/WAV ingestion and emission (PCM-16 and IEEE float-32, 1 or 2 channels).

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::signal::{MonoSignal, StereoSignal};

/// On-disk sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavCodec {
    Pcm16,
    #[default]
    Float32,
}

/// A decoded file, channel count preserved.
#[derive(Debug, Clone, PartialEq)]
pub enum AudioFile {
    Mono(MonoSignal),
    Stereo(StereoSignal),
}

impl AudioFile {
    pub fn sample_rate(&self) -> u32 {
        match self {
            AudioFile::Mono(m) => m.sample_rate(),
            AudioFile::Stereo(s) => s.sample_rate(),
        }
    }

    pub fn into_stereo(self) -> Result<StereoSignal> {
        match self {
            AudioFile::Stereo(s) => Ok(s),
            AudioFile::Mono(_) => Err(Error::Wav("expected a 2-channel file".into())),
        }
    }

    pub fn into_mono(self) -> Result<MonoSignal> {
        match self {
            AudioFile::Mono(m) => Ok(m),
            AudioFile::Stereo(_) => Err(Error::Wav("expected a 1-channel file".into())),
        }
    }
}

fn map_hound_write(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::io(path, e),
        other => Error::Wav(format!("{}: {other}", path.display())),
    }
}

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        // the file itself opened, so read failures mean a short or corrupt body
        hound::Error::IoError(e) => Error::Wav(format!("{}: malformed or truncated file: {e}", path.display())),
        other => Error::Wav(format!("{}: {other}", path.display())),
    }
}

const PCM16_SCALE: f64 = 32768.0;

/// Reads a WAV file. PCM-16 samples are divided by 32768.
///
/// When `expected_rate` is given, a file at any other rate is rejected.
pub fn read_wav(path: impl AsRef<Path>, expected_rate: Option<u32>) -> Result<AudioFile> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = WavReader::new(std::io::BufReader::new(file)).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if let Some(rate) = expected_rate {
        if spec.sample_rate != rate {
            return Err(Error::Wav(format!(
                "{}: sample rate {} does not match expected {rate}",
                path.display(),
                spec.sample_rate
            )));
        }
    }
    if spec.channels != 1 && spec.channels != 2 {
        return Err(Error::Wav(format!(
            "{}: unsupported channel count {}",
            path.display(),
            spec.channels
        )));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (fmt, bits) => {
            return Err(Error::Wav(format!(
                "{}: unsupported codec {fmt:?}/{bits} bits",
                path.display()
            )))
        }
    };
    let rate = spec.sample_rate;
    if spec.channels == 1 {
        Ok(AudioFile::Mono(MonoSignal::new(interleaved, rate)?))
    } else {
        let left = interleaved.iter().step_by(2).copied().collect();
        let right = interleaved.iter().skip(1).step_by(2).copied().collect();
        Ok(AudioFile::Stereo(StereoSignal::new(
            MonoSignal::new(left, rate)?,
            MonoSignal::new(right, rate)?,
        )?))
    }
}

fn encode_pcm16(x: f64, clips: &mut usize) -> i16 {
    let v = (x * PCM16_SCALE).round();
    if v > i16::MAX as f64 {
        *clips += 1;
        i16::MAX
    } else if v < i16::MIN as f64 {
        *clips += 1;
        i16::MIN
    } else {
        v as i16
    }
}

fn write_channels(channels: &[&MonoSignal], path: &Path, codec: WavCodec) -> Result<usize> {
    let rate = channels[0].sample_rate();
    let spec = match codec {
        WavCodec::Pcm16 => WavSpec {
            channels: channels.len() as u16,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        },
        WavCodec::Float32 => WavSpec {
            channels: channels.len() as u16,
            sample_rate: rate,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        },
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| map_hound_write(path, e))?;
    let mut clips = 0usize;
    let len = channels[0].len();
    for n in 0..len {
        for ch in channels {
            let x = ch.samples()[n];
            match codec {
                WavCodec::Pcm16 => writer.write_sample(encode_pcm16(x, &mut clips)),
                WavCodec::Float32 => writer.write_sample(x as f32),
            }
            .map_err(|e| map_hound_write(path, e))?;
        }
    }
    writer.finalize().map_err(|e| map_hound_write(path, e))?;
    Ok(clips)
}

/// Writes a stereo file, returning the number of clipped samples (PCM-16 only;
/// float-32 never clips but rounds to single precision).
pub fn write_wav(signal: &StereoSignal, path: impl AsRef<Path>, codec: WavCodec) -> Result<usize> {
    write_channels(&[signal.left(), signal.right()], path.as_ref(), codec)
}

pub fn write_mono_wav(signal: &MonoSignal, path: impl AsRef<Path>, codec: WavCodec) -> Result<usize> {
    write_channels(&[signal], path.as_ref(), codec)
}

pub fn write_audio(file: &AudioFile, path: impl AsRef<Path>, codec: WavCodec) -> Result<usize> {
    match file {
        AudioFile::Mono(m) => write_mono_wav(m, path, codec),
        AudioFile::Stereo(s) => write_wav(s, path, codec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_second_stereo_pcm16() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let sig = StereoSignal::zeros(16_000);
        write_wav(&sig, &p, WavCodec::Pcm16).unwrap();
        let back = read_wav(&p, Some(16_000)).unwrap().into_stereo().unwrap();
        assert_eq!(back.len(), 16_000);
    }

    #[test]
    fn full_scale_pcm16_normalization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fs.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(32767i16).unwrap();
        w.write_sample(-32768i16).unwrap();
        w.finalize().unwrap();
        let m = read_wav(&p, None).unwrap().into_mono().unwrap();
        assert_eq!(m.samples(), &[32767.0 / 32768.0, -1.0]);
    }

    #[test]
    fn silence_and_clipping() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let clips = write_mono_wav(&MonoSignal::zeros(100), &p, WavCodec::Pcm16).unwrap();
        assert_eq!(clips, 0);
        assert_eq!(read_wav(&p, None).unwrap().into_mono().unwrap().len(), 100);

        let loud = MonoSignal::from_samples(vec![0.25, 2.0, -0.5]).unwrap();
        let clips = write_mono_wav(&loud, &p, WavCodec::Pcm16).unwrap();
        assert_eq!(clips, 1);
        let back = read_wav(&p, None).unwrap().into_mono().unwrap();
        assert_eq!(back.samples()[1], 32767.0 / 32768.0);
        assert_eq!(back.samples()[0], 0.25);
    }

    #[test]
    fn rate_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.wav");
        write_mono_wav(&MonoSignal::new(vec![0.0; 10], 8_000).unwrap(), &p, WavCodec::Float32).unwrap();
        assert!(matches!(read_wav(&p, Some(16_000)), Err(Error::Wav(_))));
        assert!(read_wav(&p, None).is_ok());
    }

    #[test]
    fn malformed_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.wav");
        std::fs::write(&p, b"RIFF\x10\x00\x00\x00WAVEjunkjunkjunk").unwrap();
        let err = read_wav(&p, None).unwrap_err();
        assert!(matches!(err, Error::Wav(_)), "{err:?}");
    }

    #[test]
    fn unsupported_codec_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("24.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 24,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(5i32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&p, None), Err(Error::Wav(_))));
    }

    #[test]
    fn float32_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.wav");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for len in [0usize, 1, 777, 4096] {
            let gen = |rng: &mut ChaCha8Rng| {
                (0..len)
                    .map(|_| rng.gen_range(-4.0f32..4.0) as f64)
                    .collect::<Vec<_>>()
            };
            let sig = StereoSignal::from_channels(gen(&mut rng), gen(&mut rng)).unwrap();
            assert_eq!(write_wav(&sig, &p, WavCodec::Float32).unwrap(), 0);
            let back = read_wav(&p, Some(16_000)).unwrap().into_stereo().unwrap();
            assert_eq!(back, sig);
        }
    }
}
