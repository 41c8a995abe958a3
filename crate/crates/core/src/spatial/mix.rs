use crate::error::{Error, Result};
use crate::signal::StereoSignal;

/// Gain to apply to `b` so that `energy(a) / energy(gain·b)` equals
/// `10^(rel_snr_db/10)`, energies summed over both channels.
pub fn relative_snr_gain(a: &StereoSignal, b: &StereoSignal, rel_snr_db: f64) -> Result<f64> {
    let pa = a.energy();
    let pb = b.energy();
    if pa <= 0.0 || pb <= 0.0 {
        return Err(Error::Signal(
            "relative-SNR mixing needs both signals to have nonzero energy".into(),
        ));
    }
    if !rel_snr_db.is_finite() {
        return Err(Error::invalid("relative SNR must be finite"));
    }
    Ok((pa / (pb * 10f64.powf(rel_snr_db / 10.0))).sqrt())
}

/// Returns `(a + gain·b, gain)`.
pub fn mix_at_relative_snr(
    a: &StereoSignal,
    b: &StereoSignal,
    rel_snr_db: f64,
) -> Result<(StereoSignal, f64)> {
    if a.len() != b.len() {
        return Err(Error::Signal(format!(
            "cannot mix signals of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let gain = relative_snr_gain(a, b, rel_snr_db)?;
    Ok((a.add(&b.scaled(gain))?, gain))
}
