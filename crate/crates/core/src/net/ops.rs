//! Per-frame kernels. Every kernel processes one frame at a time with a fixed
//! accumulation order, so chunked and whole-sequence evaluation agree bit for
//! bit.

use super::container::WeightContainer;
use super::tensor::Tensor;
use crate::error::{Error, Result};

const NORM_EPS: f32 = 1e-5;

/// Fully connected layer, weight stored `[in, out]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    weight: Vec<f32>,
    bias: Vec<f32>,
}

impl Dense {
    pub fn new(input: usize, output: usize, weight: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if weight.len() != input * output || bias.len() != output {
            return Err(Error::shape(format!(
                "dense {input}->{output}: weight {} / bias {}",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Self {
            input,
            output,
            weight,
            bias,
        })
    }

    pub fn load(w: &WeightContainer, prefix: &str) -> Result<Self> {
        let weight = w.tensor(&format!("{prefix}.weight"))?;
        let bias = w.tensor(&format!("{prefix}.bias"))?;
        let s = weight.shape();
        Self::new(s[0], s[1], weight.data().to_vec(), bias.data().to_vec())
    }

    #[inline]
    pub fn forward(&self, x: &[f32], out: &mut [f32]) {
        debug_assert_eq!(x.len(), self.input);
        out.copy_from_slice(&self.bias);
        matvec_acc(x, &self.weight, out);
    }
}

/// `out += xᵀ·W` for `W` stored `[x.len(), out.len()]`.
#[inline]
pub fn matvec_acc(x: &[f32], weight: &[f32], out: &mut [f32]) {
    let n = out.len();
    for (xi, row) in x.iter().zip(weight.chunks_exact(n)) {
        let xi = *xi;
        if xi == 0.0 {
            continue;
        }
        for (o, w) in out.iter_mut().zip(row) {
            *o += xi * w;
        }
    }
}

#[inline]
pub fn prelu(x: &mut [f32], slope: f32) {
    for v in x {
        if *v < 0.0 {
            *v *= slope;
        }
    }
}

/// Normalizes one frame across channels, then applies gain and bias.
#[inline]
pub fn layer_norm(x: &mut [f32], gain: &[f32], bias: &[f32]) {
    let n = x.len() as f32;
    let mean = x.iter().sum::<f32>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / n;
    let inv = 1.0 / (var + NORM_EPS).sqrt();
    for ((v, g), b) in x.iter_mut().zip(gain).zip(bias) {
        *v = (*v - mean) * inv * g + b;
    }
}

#[inline]
pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softmax(x: &mut [f32]) {
    let max = x.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0;
    for v in x.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in x.iter_mut() {
        *v /= sum;
    }
}

/// Feature-wise linear modulation: `γ = p·f`, `β = p·g`, `y = γ ⊙ x + β`,
/// with `f` and `g` stored `[D, C]`.
#[derive(Debug, Clone)]
pub struct Film {
    pub dim: usize,
    pub channels: usize,
    f: Vec<f32>,
    g: Vec<f32>,
}

impl Film {
    pub fn new(dim: usize, channels: usize, f: Vec<f32>, g: Vec<f32>) -> Result<Self> {
        if f.len() != dim * channels || g.len() != dim * channels {
            return Err(Error::shape(format!(
                "FiLM projections must be [{dim}, {channels}]"
            )));
        }
        Ok(Self { dim, channels, f, g })
    }

    pub fn load(w: &WeightContainer, prefix: &str) -> Result<Self> {
        let f = w.tensor(&format!("{prefix}.f"))?;
        let g = w.tensor(&format!("{prefix}.g"))?;
        Self::new(f.shape()[0], f.shape()[1], f.data().to_vec(), g.data().to_vec())
    }

    /// Modulates `x` in place; `scratch` holds at least `2·channels` values.
    #[inline]
    pub fn apply(&self, x: &mut [f32], profile: &[f32], scratch: &mut [f32]) {
        let (gamma, beta) = scratch[..2 * self.channels].split_at_mut(self.channels);
        gamma.fill(0.0);
        beta.fill(0.0);
        matvec_acc(profile, &self.f, gamma);
        matvec_acc(profile, &self.g, beta);
        for ((v, g), b) in x.iter_mut().zip(gamma.iter()).zip(beta.iter()) {
            *v = g * *v + b;
        }
    }
}

/// FiLM over a `[T, C]` activation with a `[T, D]` profile.
pub fn film(x: &Tensor, profile: &Tensor, f: &Tensor, g: &Tensor) -> Result<Tensor> {
    if x.rank() != 2 || profile.rank() != 2 || f.rank() != 2 || g.rank() != 2 {
        return Err(Error::shape("film expects rank-2 tensors"));
    }
    let (t, c) = (x.rows(), x.cols());
    let d = profile.cols();
    if profile.rows() != t || f.shape() != [d, c] || g.shape() != [d, c] {
        return Err(Error::shape(format!(
            "film: x {:?}, profile {:?}, f {:?}, g {:?}",
            x.shape(),
            profile.shape(),
            f.shape(),
            g.shape()
        )));
    }
    let layer = Film::new(d, c, f.data().to_vec(), g.data().to_vec())?;
    let mut out = x.clone();
    let mut scratch = vec![0.0; 2 * c];
    for ti in 0..t {
        layer.apply(&mut out.data_mut()[ti * c..(ti + 1) * c], profile.row(ti), &mut scratch);
    }
    Ok(out)
}
