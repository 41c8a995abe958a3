//! Signal-based DOA scoring: a delay lookup table derived from the BRIRs and
//! a GCC-PHAT interaural delay estimate per analysis window.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{StereoSignal, SAMPLE_RATE};
use crate::spatial::{AzimuthGrid, BrirSet, Trajectory};

/// 80 ms at 16 kHz.
pub const DOA_WINDOW: usize = 1280;
/// Windows whose mean-square level falls below this are not scored.
pub const SILENCE_THRESHOLD: f64 = 1e-6;

/// Interaural delay per azimuth; positive when the right ear lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalLocalizerTable {
    pub grid: AzimuthGrid,
    /// Integer cross-correlation peak per azimuth, samples.
    pub lags: Vec<i64>,
    /// Peak refined by a parabola through its neighbours, samples.
    pub delays: Vec<f64>,
}

impl EvalLocalizerTable {
    /// Grid index whose delay is closest to `delay`; lower index on ties.
    pub fn nearest(&self, delay: f64) -> usize {
        let mut best = 0;
        for (j, d) in self.delays.iter().enumerate().skip(1) {
            if (d - delay).abs() < (self.delays[best] - delay).abs() {
                best = j;
            }
        }
        best
    }

    pub fn max_abs_delay(&self) -> f64 {
        self.delays.iter().fold(0.0, |m, d| m.max(d.abs()))
    }
}

fn fft_len(n: usize) -> usize {
    n.next_power_of_two().max(2)
}

/// Full cross-correlation `c[k] = Σ_n r[n+k]·l[n]` for `k ∈ [−(L−1), L−1]`,
/// returned with `c[0]` at index `L−1`.
pub fn cross_correlation(l: &[f64], r: &[f64]) -> Vec<f64> {
    let n = l.len().max(r.len());
    let m = fft_len(2 * n - 1);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let load = |x: &[f64]| {
        let mut v = vec![Complex::new(0.0, 0.0); m];
        for (o, s) in v.iter_mut().zip(x) {
            o.re = *s;
        }
        v
    };
    let (mut a, mut b) = (load(l), load(r));
    fwd.process(&mut a);
    fwd.process(&mut b);
    let mut c: Vec<Complex<f64>> = b.iter().zip(&a).map(|(rb, la)| rb * la.conj()).collect();
    inv.process(&mut c);
    let scale = 1.0 / m as f64;
    (-(n as i64 - 1)..n as i64)
        .map(|k| c[k.rem_euclid(m as i64) as usize].re * scale)
        .collect()
}

/// Offset of a parabola's vertex through `(−1, a)`, `(0, b)`, `(1, c)`.
fn parabolic(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den.abs() < 1e-300 {
        0.0
    } else {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    }
}

pub fn build_eval_localizer(brirs: &BrirSet) -> Result<EvalLocalizerTable> {
    let mut lags = Vec::with_capacity(brirs.len());
    let mut delays = Vec::with_capacity(brirs.len());
    for (j, pair) in brirs.pairs().iter().enumerate() {
        if pair.left.iter().all(|v| *v == 0.0) || pair.right.iter().all(|v| *v == 0.0) {
            return Err(Error::Evaluation(format!("BRIR {j} has an all-zero channel")));
        }
        let c = cross_correlation(&pair.left, &pair.right);
        let zero = (c.len() - 1) / 2;
        let mut best = 0;
        for (i, v) in c.iter().enumerate().skip(1) {
            if *v > c[best] {
                best = i;
            }
        }
        let frac = if best > 0 && best + 1 < c.len() { parabolic(c[best - 1], c[best], c[best + 1]) } else { 0.0 };
        let lag = best as i64 - zero as i64;
        lags.push(lag);
        delays.push(lag as f64 + frac);
    }
    Ok(EvalLocalizerTable {
        grid: *brirs.grid(),
        lags,
        delays,
    })
}

/// Cross-spectrum bins below this fraction of the peak bin are dropped.
const PHAT_FLOOR: f64 = 1e-8;

/// GCC-PHAT delay estimator for fixed-length windows.
pub struct GccPhat {
    window: usize,
    max_lag: usize,
    taper: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl GccPhat {
    pub fn new(window: usize, max_lag: usize) -> Result<Self> {
        if window < 2 || max_lag >= window {
            return Err(Error::invalid(format!("GCC-PHAT window {window} must exceed the lag range {max_lag}")));
        }
        let m = fft_len(2 * window - 1);
        let mut planner = FftPlanner::new();
        let taper = (0..window)
            .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / window as f64).cos())
            .collect();
        Ok(Self {
            window,
            max_lag,
            taper,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        })
    }

    /// Delay of `r` relative to `l`, samples, with sub-sample refinement.
    ///
    /// Both windows are Hann-tapered so that the shared window edges do not
    /// pull the peak to lag 0, and bins more than 80 dB below the strongest
    /// cross-spectrum bin get no weight.
    pub fn delay(&self, l: &[f64], r: &[f64]) -> f64 {
        let m = self.fwd.len();
        let load = |x: &[f64]| {
            let mut v = vec![Complex::new(0.0, 0.0); m];
            for ((o, s), w) in v.iter_mut().zip(&x[..self.window]).zip(&self.taper) {
                o.re = *s * w;
            }
            v
        };
        let (mut a, mut b) = (load(l), load(r));
        self.fwd.process(&mut a);
        self.fwd.process(&mut b);
        let mut g: Vec<Complex<f64>> = b.iter().zip(&a).map(|(rb, la)| rb * la.conj()).collect();
        let peak = g.iter().fold(0.0f64, |p, x| p.max(x.norm()));
        let floor = (peak * PHAT_FLOOR).max(1e-300);
        for x in &mut g {
            let mag = x.norm();
            *x = if mag > floor { *x / mag } else { Complex::new(0.0, 0.0) };
        }
        self.inv.process(&mut g);
        let at = |k: i64| g[k.rem_euclid(m as i64) as usize].re;
        let lim = self.max_lag as i64;
        let mut best = -lim;
        for k in -lim + 1..=lim {
            if at(k) > at(best) {
                best = k;
            }
        }
        best as f64 + parabolic(at(best - 1), at(best), at(best + 1))
    }
}

/// Azimuth per whole window of `out`; `None` for silent windows.
pub fn estimate_doa_track(out: &StereoSignal, table: &EvalLocalizerTable, window: usize) -> Result<Vec<Option<f64>>> {
    if table.delays.is_empty() {
        return Err(Error::Evaluation("empty localizer table".into()));
    }
    if out.len() < window {
        return Err(Error::Evaluation(format!(
            "{} samples is shorter than one {window}-sample window",
            out.len()
        )));
    }
    let max_lag = (table.max_abs_delay().ceil() as usize + 2).min(window - 1);
    let gcc = GccPhat::new(window, max_lag)?;
    let (l, r) = (out.left().samples(), out.right().samples());
    (0..out.len() / window)
        .map(|w| {
            let span = w * window..(w + 1) * window;
            let (lw, rw) = (&l[span.clone()], &r[span]);
            let power = lw.iter().chain(rw).map(|v| v * v).sum::<f64>() / (2 * window) as f64;
            if power < SILENCE_THRESHOLD {
                return Ok(None);
            }
            let j = table.nearest(gcc.delay(lw, rw));
            table.grid.degrees(j).map(Some)
        })
        .collect()
}

/// True azimuth at the centre sample of each window.
pub fn truth_doa_track(traj: &Trajectory, grid: &AzimuthGrid, window: usize, windows: usize) -> Result<Vec<f64>> {
    (0..windows).map(|w| grid.degrees(traj.index_at(w * window + window / 2))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaError {
    pub mae_deg: f64,
    pub scored: usize,
    pub skipped: usize,
}

/// Mean absolute error over windows with an estimate.
pub fn doa_error(estimate: &[Option<f64>], truth: &[f64]) -> Result<DoaError> {
    if estimate.len() != truth.len() {
        return Err(Error::Evaluation(format!(
            "{} estimated windows vs {} truth windows",
            estimate.len(),
            truth.len()
        )));
    }
    let (mut sum, mut scored) = (0.0, 0);
    for (e, t) in estimate.iter().zip(truth) {
        if let Some(e) = e {
            sum += (e - t).abs();
            scored += 1;
        }
    }
    if scored == 0 {
        return Err(Error::Evaluation("no window carried a DOA estimate".into()));
    }
    Ok(DoaError {
        mae_deg: sum / scored as f64,
        scored,
        skipped: estimate.len() - scored,
    })
}

/// Window length in samples for a duration in seconds at the working rate.
pub fn window_samples(seconds: f64) -> usize {
    (seconds * SAMPLE_RATE as f64).round() as usize
}
