//! C ABI for the streaming separator and the scoring metrics.
//!
//! Every entry point returns a [`BinsepStatus`]; on failure the message is
//! kept per thread and read back with [`binsep_last_error`]. Handles are
//! opaque and owned by the caller until passed to their `_free` function.
//! Panics never cross the boundary: they surface as `BINSEP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use binsep::harness::DescriptorPreset;
use binsep::metrics::{count_swaps, snr_db_slices};
use binsep::net::{gen_weights, load_weights, Network, WeightContainer};
use binsep::pipeline::{PipelineConfig, PipelineOutput, StreamingSeparator};
use binsep::signal::StereoSignal;
use binsep::tracker::{KMeansConfig, OracleEmbeddingSeq, ProfileMode};
use binsep::Error;

/// Status codes; values 3 to 10 equal the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinsepStatus {
    Ok = 0,
    Config = 3,
    Io = 4,
    Wav = 5,
    Container = 6,
    Shape = 7,
    InvalidArgument = 8,
    Evaluation = 9,
    MissingAsset = 10,
    NullPointer = 11,
    Panic = 12,
}

pub const BINSEP_PRESET_DEFAULT: u32 = 0;
pub const BINSEP_PRESET_TINY: u32 = 1;

pub const BINSEP_PROFILE_CENTROID: u32 = 0;
pub const BINSEP_PROFILE_ORACLE: u32 = 1;

/// Loaded weights plus the network built from them.
pub struct BinsepWeights {
    container: WeightContainer,
    net: Arc<Network>,
}

/// One separation stream. After `binsep_separator_finish` no more input is
/// accepted, but unread output and the DOA tracks stay readable.
pub struct BinsepSeparator {
    stream: Option<StreamingSeparator>,
    done: Option<PipelineOutput>,
    read: Vec<usize>,
}

/// Separator settings; start from `binsep_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BinsepOptions {
    /// `BINSEP_PROFILE_CENTROID` or `BINSEP_PROFILE_ORACLE`.
    pub profile_mode: u32,
    /// Frames per DOA vote.
    pub doa_chunk_frames: usize,
    /// L2-normalize slot embeddings before clustering.
    pub kmeans_normalize: bool,
    /// Update-weight floor for the centroids; 0 keeps the running mean.
    pub kmeans_decay: f64,
    /// Oracle embedding container; required in oracle mode, else NULL.
    pub oracle_path: *const c_char,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail {
    status: BinsepStatus,
    message: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            3 => BinsepStatus::Config,
            4 => BinsepStatus::Io,
            5 => BinsepStatus::Wav,
            6 => BinsepStatus::Container,
            7 => BinsepStatus::Shape,
            9 => BinsepStatus::Evaluation,
            10 => BinsepStatus::MissingAsset,
            _ => BinsepStatus::InvalidArgument,
        };
        Fail {
            status,
            message: e.to_string(),
        }
    }
}

fn null(what: &str) -> Fail {
    Fail {
        status: BinsepStatus::NullPointer,
        message: format!("{what} is NULL"),
    }
}

fn invalid(message: impl Into<String>) -> Fail {
    Fail {
        status: BinsepStatus::InvalidArgument,
        message: message.into(),
    }
}

fn set_error(message: String) {
    // Interior NULs would truncate the C string; replace them.
    let c = CString::new(message.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BinsepStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BinsepStatus::Ok,
        Ok(Err(fail)) => {
            set_error(fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            BinsepStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

/// A zero-length slice may come with a NULL pointer.
unsafe fn slice_arg<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut_arg<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn binsep_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn binsep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn wrap_weights(container: WeightContainer) -> Result<Box<BinsepWeights>, Fail> {
    let net = Arc::new(Network::load(&container)?);
    Ok(Box::new(BinsepWeights { container, net }))
}

/// Seeded weights for a preset architecture.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn binsep_weights_generate(preset: u32, seed: u64, out: *mut *mut BinsepWeights) -> BinsepStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let preset = match preset {
            BINSEP_PRESET_DEFAULT => DescriptorPreset::Default,
            BINSEP_PRESET_TINY => DescriptorPreset::Tiny,
            other => return Err(invalid(format!("unknown preset {other}"))),
        };
        let w = wrap_weights(gen_weights(&preset.descriptor(), seed)?)?;
        *out = Box::into_raw(w);
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` as for
/// [`binsep_weights_generate`].
#[no_mangle]
pub unsafe extern "C" fn binsep_weights_load(path: *const c_char, out: *mut *mut BinsepWeights) -> BinsepStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let w = wrap_weights(load_weights(path_arg(path, "path")?)?)?;
        *out = Box::into_raw(w);
        Ok(())
    })
}

/// # Safety
/// `weights` must come from this library and not be freed; `path` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn binsep_weights_save(weights: *const BinsepWeights, path: *const c_char) -> BinsepStatus {
    guard(|| {
        let w = weights.as_ref().ok_or_else(|| null("weights"))?;
        w.container.save(path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Samples per frame; pushes of this many samples produce one output frame.
///
/// # Safety
/// `weights` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn binsep_weights_hop(weights: *const BinsepWeights, out: *mut usize) -> BinsepStatus {
    guard(|| {
        let w = weights.as_ref().ok_or_else(|| null("weights"))?;
        *out_arg(out, "out")? = w.net.hop();
        Ok(())
    })
}

/// # Safety
/// `weights` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn binsep_weights_num_speakers(weights: *const BinsepWeights, out: *mut usize) -> BinsepStatus {
    guard(|| {
        let w = weights.as_ref().ok_or_else(|| null("weights"))?;
        *out_arg(out, "out")? = w.net.descriptor().num_speakers;
        Ok(())
    })
}

/// NULL is ignored.
///
/// # Safety
/// `weights` must be NULL or a handle not yet freed. Separators created
/// from it keep their own reference and stay usable.
#[no_mangle]
pub unsafe extern "C" fn binsep_weights_free(weights: *mut BinsepWeights) {
    if !weights.is_null() {
        drop(Box::from_raw(weights));
    }
}

#[no_mangle]
pub extern "C" fn binsep_options_default() -> BinsepOptions {
    let c = PipelineConfig::default();
    BinsepOptions {
        profile_mode: BINSEP_PROFILE_CENTROID,
        doa_chunk_frames: c.doa_chunk_frames,
        kmeans_normalize: c.kmeans.normalize,
        kmeans_decay: c.kmeans.decay.unwrap_or(0.0),
        oracle_path: ptr::null(),
    }
}

unsafe fn pipeline_config(o: &BinsepOptions) -> Result<(PipelineConfig, Option<OracleEmbeddingSeq>), Fail> {
    let profile_mode = match o.profile_mode {
        BINSEP_PROFILE_CENTROID => ProfileMode::Centroid,
        BINSEP_PROFILE_ORACLE => ProfileMode::Oracle,
        other => return Err(invalid(format!("unknown profile mode {other}"))),
    };
    if !(o.kmeans_decay >= 0.0 && o.kmeans_decay <= 1.0) {
        return Err(invalid(format!("k-means decay {} outside [0, 1]", o.kmeans_decay)));
    }
    let oracle = if o.oracle_path.is_null() {
        None
    } else {
        Some(OracleEmbeddingSeq::load(path_arg(o.oracle_path, "oracle_path")?)?)
    };
    let config = PipelineConfig {
        profile_mode,
        doa_chunk_frames: o.doa_chunk_frames,
        kmeans: KMeansConfig {
            normalize: o.kmeans_normalize,
            decay: (o.kmeans_decay > 0.0).then_some(o.kmeans_decay),
        },
        ..PipelineConfig::default()
    };
    Ok((config, oracle))
}

/// New stream over `weights`. `options` may be NULL for the defaults.
///
/// # Safety
/// `weights` must be a live handle, `options` NULL or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn binsep_separator_new(
    weights: *const BinsepWeights,
    options: *const BinsepOptions,
    out: *mut *mut BinsepSeparator,
) -> BinsepStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let w = weights.as_ref().ok_or_else(|| null("weights"))?;
        let opts = options.as_ref().copied().unwrap_or_else(|| binsep_options_default());
        let (config, oracle) = pipeline_config(&opts)?;
        let stream = StreamingSeparator::new(Arc::clone(&w.net), config, oracle)?;
        let n = w.net.descriptor().num_speakers;
        *out = Box::into_raw(Box::new(BinsepSeparator {
            stream: Some(stream),
            done: None,
            read: vec![0; n],
        }));
        Ok(())
    })
}

/// Appends `n` samples per channel at 16 kHz. Any `n` works; output appears
/// frame by frame.
///
/// # Safety
/// `sep` must be a live handle; `left` and `right` must each hold `n`
/// readable samples (they may be NULL when `n` is 0).
#[no_mangle]
pub unsafe extern "C" fn binsep_separator_push(
    sep: *mut BinsepSeparator,
    left: *const f64,
    right: *const f64,
    n: usize,
) -> BinsepStatus {
    guard(|| {
        let s = sep.as_mut().ok_or_else(|| null("separator"))?;
        let stream = s.stream.as_mut().ok_or_else(|| invalid("separator already finished"))?;
        stream.push(slice_arg(left, n, "left")?, slice_arg(right, n, "right")?)?;
        Ok(())
    })
}

impl BinsepSeparator {
    fn available(&self, speaker: usize) -> Result<usize, Fail> {
        if speaker >= self.read.len() {
            return Err(invalid(format!("no speaker {speaker}")));
        }
        Ok(match (&self.stream, &self.done) {
            (Some(s), _) => s.available(speaker),
            (None, Some(d)) => d.speakers[speaker].len() - self.read[speaker],
            (None, None) => 0,
        })
    }
}

/// Unread samples of `speaker`.
///
/// # Safety
/// `sep` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn binsep_separator_available(
    sep: *const BinsepSeparator,
    speaker: usize,
    out: *mut usize,
) -> BinsepStatus {
    guard(|| {
        let s = sep.as_ref().ok_or_else(|| null("separator"))?;
        *out_arg(out, "out")? = s.available(speaker)?;
        Ok(())
    })
}

/// Copies up to `cap` unread samples of `speaker` into `left`/`right` and
/// stores the count in `written`.
///
/// # Safety
/// `sep` must be a live handle; `left` and `right` must each have room for
/// `cap` samples; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn binsep_separator_read(
    sep: *mut BinsepSeparator,
    speaker: usize,
    left: *mut f64,
    right: *mut f64,
    cap: usize,
    written: *mut usize,
) -> BinsepStatus {
    guard(|| {
        let s = sep.as_mut().ok_or_else(|| null("separator"))?;
        let written = out_arg(written, "written")?;
        *written = 0;
        let n = s.available(speaker)?.min(cap);
        let l = slice_mut_arg(left, n, "left")?;
        let r = slice_mut_arg(right, n, "right")?;
        let got = match (&mut s.stream, &s.done) {
            (Some(stream), _) => stream.read(speaker, l, r)?,
            (None, Some(d)) => {
                let at = s.read[speaker];
                let sig = &d.speakers[speaker];
                l.copy_from_slice(&sig.left().samples()[at..at + n]);
                r.copy_from_slice(&sig.right().samples()[at..at + n]);
                n
            }
            (None, None) => 0,
        };
        s.read[speaker] += got;
        *written = got;
        Ok(())
    })
}

/// Flushes the final partial frame. Output length then equals input length.
///
/// # Safety
/// `sep` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn binsep_separator_finish(sep: *mut BinsepSeparator) -> BinsepStatus {
    guard(|| {
        let s = sep.as_mut().ok_or_else(|| null("separator"))?;
        let stream = s.stream.take().ok_or_else(|| invalid("separator already finished"))?;
        s.done = Some(stream.finish()?);
        Ok(())
    })
}

/// Voted azimuths of `speaker` in degrees, one per DOA chunk, available
/// after finish. Writes up to `cap` values and stores the full track length
/// in `len`; call with `cap` 0 to size the buffer.
///
/// # Safety
/// `sep` must be a live handle; `out` must have room for `cap` values;
/// `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn binsep_separator_doa_track(
    sep: *const BinsepSeparator,
    speaker: usize,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> BinsepStatus {
    guard(|| {
        let s = sep.as_ref().ok_or_else(|| null("separator"))?;
        let len = out_arg(len, "len")?;
        let d = s.done.as_ref().ok_or_else(|| invalid("DOA tracks exist only after finish"))?;
        let track = d.doa_tracks.get(speaker).ok_or_else(|| invalid(format!("no speaker {speaker}")))?;
        let n = track.len().min(cap);
        slice_mut_arg(out, n, "out")?.copy_from_slice(&track[..n]);
        *len = track.len();
        Ok(())
    })
}

/// NULL is ignored.
///
/// # Safety
/// `sep` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn binsep_separator_free(sep: *mut BinsepSeparator) {
    if !sep.is_null() {
        drop(Box::from_raw(sep));
    }
}

/// Signal-to-noise ratio of `estimate` against `reference`, clamped to
/// ±120 dB.
///
/// # Safety
/// Both arrays must hold `n` samples; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn binsep_snr_db(
    reference: *const f64,
    estimate: *const f64,
    n: usize,
    out: *mut f64,
) -> BinsepStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = snr_db_slices(slice_arg(reference, n, "reference")?, slice_arg(estimate, n, "estimate")?)?;
        Ok(())
    })
}

unsafe fn stereo_list(
    left: *const *const f64,
    right: *const *const f64,
    count: usize,
    n: usize,
    what: &str,
) -> Result<Vec<StereoSignal>, Fail> {
    if left.is_null() || right.is_null() {
        return Err(null(what));
    }
    (0..count)
        .map(|i| {
            let l = slice_arg(*left.add(i), n, what)?.to_vec();
            let r = slice_arg(*right.add(i), n, what)?.to_vec();
            Ok(StereoSignal::from_channels(l, r)?)
        })
        .collect()
}

/// Speaker swaps between `speakers` stereo outputs and references of `n`
/// samples each, over `segments` equal segments.
///
/// # Safety
/// Each of the four pointer arrays must hold `speakers` pointers to `n`
/// samples; `swaps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn binsep_count_swaps(
    outputs_left: *const *const f64,
    outputs_right: *const *const f64,
    references_left: *const *const f64,
    references_right: *const *const f64,
    speakers: usize,
    n: usize,
    segments: usize,
    swaps: *mut usize,
) -> BinsepStatus {
    guard(|| {
        let swaps = out_arg(swaps, "swaps")?;
        let outs = stereo_list(outputs_left, outputs_right, speakers, n, "outputs")?;
        let refs = stereo_list(references_left, references_right, speakers, n, "references")?;
        *swaps = count_swaps(&outs, &refs, segments)?.swaps;
        Ok(())
    })
}
