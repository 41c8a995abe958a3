use crate::error::{Error, Result};
use crate::signal::{MonoSignal, StereoSignal};

/// Magnitude bound on every reported SNR, dB.
pub const SNR_CLAMP_DB: f64 = 120.0;
/// Error-energy floor relative to the reference energy.
pub const SNR_EPS: f64 = 1e-12;

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Evaluation(format!("reference has {a} samples, estimate {b}")));
    }
    Ok(())
}

fn ratio_db(reference: &[f64], estimate: &[f64]) -> Option<f64> {
    let signal: f64 = reference.iter().map(|x| x * x).sum();
    if signal == 0.0 {
        return None;
    }
    let error: f64 = reference.iter().zip(estimate).map(|(x, y)| (y - x) * (y - x)).sum();
    let db = 10.0 * (signal / (error + SNR_EPS * signal)).log10();
    Some(db.clamp(-SNR_CLAMP_DB, SNR_CLAMP_DB))
}

/// `10·log10(‖x‖² / (‖x̂ − x‖² + ε‖x‖²))`, clamped to ±120 dB.
pub fn snr_db_slices(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    check_len(reference.len(), estimate.len())?;
    ratio_db(reference, estimate).ok_or_else(|| Error::Evaluation("reference has zero energy".into()))
}

/// As [`snr_db_slices`], but a silent reference scores +120 dB against a
/// silent estimate and −120 dB otherwise.
pub fn snr_db_clamped(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    check_len(reference.len(), estimate.len())?;
    Ok(ratio_db(reference, estimate).unwrap_or_else(|| {
        if estimate.iter().all(|v| *v == 0.0) {
            SNR_CLAMP_DB
        } else {
            -SNR_CLAMP_DB
        }
    }))
}

pub fn snr_db(reference: &MonoSignal, estimate: &MonoSignal) -> Result<f64> {
    snr_db_slices(reference.samples(), estimate.samples())
}

/// Left plus right channel SNR.
pub fn stereo_snr(reference: &StereoSignal, estimate: &StereoSignal) -> Result<f64> {
    Ok(snr_db(reference.left(), estimate.left())? + snr_db(reference.right(), estimate.right())?)
}

/// Mean of the left and right channel SNR.
pub fn stereo_snr_mean(reference: &StereoSignal, estimate: &StereoSignal) -> Result<f64> {
    Ok(0.5 * stereo_snr(reference, estimate)?)
}

pub(crate) fn stereo_snr_clamped(reference: &StereoSignal, estimate: &StereoSignal) -> Result<f64> {
    Ok(snr_db_clamped(reference.left().samples(), estimate.left().samples())?
        + snr_db_clamped(reference.right().samples(), estimate.right().samples())?)
}
