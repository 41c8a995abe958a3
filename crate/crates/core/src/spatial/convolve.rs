//! Time-varying binaural convolution.
//!
//! The filter pair is selected by the output sample index: for `n` inside a
//! trajectory run at grid index `j`, `y[n] = Σ_k h_j[k]·s[n−k]` with `s[m] = 0`
//! for `m < 0`. A switch therefore swaps the whole convolution tail at once.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::brir::BrirSet;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::signal::{MonoSignal, StereoSignal};

/// Below this many multiply-adds per run the direct sum is used.
const DIRECT_WORK_LIMIT: usize = 1 << 16;

pub fn spatialize(source: &MonoSignal, brirs: &BrirSet, traj: &Trajectory) -> Result<StereoSignal> {
    if source.sample_rate() != brirs.sample_rate() {
        return Err(Error::invalid(format!(
            "source rate {} does not match BRIR rate {}",
            source.sample_rate(),
            brirs.sample_rate()
        )));
    }
    if traj.max_index() >= brirs.len() {
        return Err(Error::invalid(format!(
            "trajectory visits grid index {} but the BRIR set has {} azimuths",
            traj.max_index(),
            brirs.len()
        )));
    }
    let s = source.samples();
    let mut left = vec![0.0; s.len()];
    let mut right = vec![0.0; s.len()];
    let mut planner = FftPlanner::<f64>::new();
    for (start, end, j) in traj.segments(s.len()) {
        let pair = brirs.pair(j)?;
        convolve_run(s, &pair.left, start, end, &mut left[start..end], &mut planner);
        convolve_run(s, &pair.right, start, end, &mut right[start..end], &mut planner);
    }
    StereoSignal::new(
        MonoSignal::new(left, source.sample_rate())?,
        MonoSignal::new(right, source.sample_rate())?,
    )
}

/// Writes `(h * s)[n]` for `n ∈ [start, end)` into `out`.
fn convolve_run(
    s: &[f64],
    h: &[f64],
    start: usize,
    end: usize,
    out: &mut [f64],
    planner: &mut FftPlanner<f64>,
) {
    let run = end - start;
    if run == 0 {
        return;
    }
    if run * h.len() <= DIRECT_WORK_LIMIT {
        for (o, n) in out.iter_mut().zip(start..end) {
            let kmax = h.len().min(n + 1);
            *o = (0..kmax).map(|k| h[k] * s[n - k]).sum();
        }
        return;
    }
    let in_start = start.saturating_sub(h.len() - 1);
    let input = &s[in_start..end];
    let size = (input.len() + h.len() - 1).next_power_of_two();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);
    let mut a: Vec<Complex<f64>> = input.iter().map(|&x| Complex::new(x, 0.0)).collect();
    a.resize(size, Complex::default());
    let mut b: Vec<Complex<f64>> = h.iter().map(|&x| Complex::new(x, 0.0)).collect();
    b.resize(size, Complex::default());
    fft.process(&mut a);
    fft.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    ifft.process(&mut a);
    let norm = 1.0 / size as f64;
    for (o, n) in out.iter_mut().zip(start..end) {
        *o = a[n - in_start].re * norm;
    }
}
