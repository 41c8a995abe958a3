//! Causal dilated convolution blocks.
//!
//! One block, for input frame `x_t` of width B:
//!
//! ```text
//! u_t = LN(PReLU(W_in·x_t + b_in))                       (width H)
//! v_t = LN(PReLU(b_dw + Σ_k w_dw[k] ⊙ u_{t − (K−1−k)·d})) (depthwise, dilation d)
//! y_t = x_t + W_out·v_t + b_out
//! ```
//!
//! An optional FiLM layer modulates `x_t` by the speaker profile before the
//! block. Output `t` depends on inputs `t − d·(K−1) … t` only. Stacks use
//! dilations 1, 2, …, 2^(blocks−1).

use super::container::WeightContainer;
use super::descriptor::ArchitectureDescriptor;
use super::ops::{layer_norm, prelu, Dense, Film};
use super::state::{RingBuffer, StreamState};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TcnBlock {
    dilation: usize,
    kernel: usize,
    hidden: usize,
    bottleneck: usize,
    film: Option<Film>,
    input: Dense,
    prelu1: f32,
    norm1: (Vec<f32>, Vec<f32>),
    /// Depthwise taps stored `[K, H]`.
    dw: Vec<f32>,
    dw_bias: Vec<f32>,
    prelu2: f32,
    norm2: (Vec<f32>, Vec<f32>),
    output: Dense,
}

/// Reusable per-call buffers.
pub(crate) struct BlockScratch {
    u: Vec<f32>,
    v: Vec<f32>,
    film: Vec<f32>,
    res: Vec<f32>,
}

impl BlockScratch {
    pub(crate) fn new(hidden: usize, bottleneck: usize) -> Self {
        Self {
            u: vec![0.0; hidden],
            v: vec![0.0; hidden],
            film: vec![0.0; 2 * bottleneck],
            res: vec![0.0; bottleneck],
        }
    }
}

impl TcnBlock {
    pub fn load(w: &WeightContainer, prefix: &str, dilation: usize, with_film: bool) -> Result<Self> {
        let t = |name: &str| w.tensor(&format!("{prefix}.{name}"));
        let dw = t("dw.weight")?;
        let (hidden, kernel) = (dw.shape()[0], dw.shape()[1]);
        let mut dw_t = vec![0.0; hidden * kernel];
        for c in 0..hidden {
            for k in 0..kernel {
                dw_t[k * hidden + c] = dw.data()[c * kernel + k];
            }
        }
        let input = Dense::load(w, &format!("{prefix}.in"))?;
        let output = Dense::load(w, &format!("{prefix}.out"))?;
        if input.output != hidden || output.input != hidden || output.output != input.input {
            return Err(Error::shape(format!("inconsistent block {prefix}")));
        }
        let film = if with_film {
            let f = Film::load(w, &format!("{prefix}.film"))?;
            if f.channels != input.input {
                return Err(Error::shape(format!("FiLM width mismatch in {prefix}")));
            }
            Some(f)
        } else {
            None
        };
        Ok(Self {
            dilation,
            kernel,
            hidden,
            bottleneck: input.input,
            film,
            input,
            prelu1: t("prelu1")?.data()[0],
            norm1: (t("norm1.gain")?.data().to_vec(), t("norm1.bias")?.data().to_vec()),
            dw: dw_t,
            dw_bias: t("dw.bias")?.data().to_vec(),
            prelu2: t("prelu2")?.data()[0],
            norm2: (t("norm2.gain")?.data().to_vec(), t("norm2.bias")?.data().to_vec()),
            output,
        })
    }

    pub fn dilation(&self) -> usize {
        self.dilation
    }

    pub fn bottleneck(&self) -> usize {
        self.bottleneck
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn has_film(&self) -> bool {
        self.film.is_some()
    }

    /// Frames of history this block needs: `dilation·(kernel − 1)`.
    pub fn left_context(&self) -> usize {
        self.dilation * (self.kernel - 1)
    }

    pub fn new_ring(&self) -> RingBuffer {
        RingBuffer::new(self.left_context(), self.hidden)
    }

    /// Advances one frame in place.
    #[inline]
    pub(crate) fn step(&self, x: &mut [f32], profile: Option<&[f32]>, ring: &mut RingBuffer, s: &mut BlockScratch) {
        if let (Some(film), Some(p)) = (&self.film, profile) {
            film.apply(x, p, &mut s.film);
        }
        self.input.forward(x, &mut s.u);
        prelu(&mut s.u, self.prelu1);
        layer_norm(&mut s.u, &self.norm1.0, &self.norm1.1);

        let h = self.hidden;
        s.v.copy_from_slice(&self.dw_bias);
        for k in 0..self.kernel {
            let lag = (self.kernel - 1 - k) * self.dilation;
            let taps = &self.dw[k * h..(k + 1) * h];
            let frame = if lag == 0 { &s.u[..] } else { ring.lagged(lag) };
            for ((v, w), u) in s.v.iter_mut().zip(taps).zip(frame) {
                *v += w * u;
            }
        }
        ring.push(&s.u);
        prelu(&mut s.v, self.prelu2);
        layer_norm(&mut s.v, &self.norm2.0, &self.norm2.1);
        self.output.forward(&s.v, &mut s.res);
        for (xi, r) in x.iter_mut().zip(&s.res) {
            *xi += r;
        }
    }
}

/// Runs a single block over `[T, B]` frames, carrying its history in `state`.
pub fn causal_tcn_block(x: &Tensor, state: &mut StreamState, block: &TcnBlock, profile: Option<&Tensor>) -> Result<Tensor> {
    let t = x.expect_matrix("tcn block input", block.bottleneck)?;
    if state.rings.len() != 1
        || state.rings[0].context() != block.left_context()
        || state.rings[0].width() != block.hidden
    {
        return Err(Error::shape(format!(
            "block state must hold {} frames of width {}",
            block.left_context(),
            block.hidden
        )));
    }
    if block.has_film() {
        match profile {
            Some(p) if p.shape() == [t, block.film.as_ref().map_or(0, |f| f.dim)] => {}
            _ => return Err(Error::shape("FiLM block needs a [T, D] profile")),
        }
    }
    let b = block.bottleneck;
    let mut out = x.clone();
    let mut s = BlockScratch::new(block.hidden, b);
    for ti in 0..t {
        let p = profile.map(|p| p.row(ti));
        block.step(&mut out.data_mut()[ti * b..(ti + 1) * b], p, &mut state.rings[0], &mut s);
    }
    state.advance(t);
    Ok(out)
}

/// A sequence of repeated stacks.
#[derive(Debug, Clone)]
pub struct TcnStacks {
    blocks: Vec<TcnBlock>,
}

impl TcnStacks {
    pub fn load(w: &WeightContainer, net: &str, stacks: usize, with_film: bool) -> Result<Self> {
        let d: &ArchitectureDescriptor = w.descriptor();
        let mut blocks = Vec::with_capacity(stacks * d.blocks_per_stack);
        for s in 0..stacks {
            for b in 0..d.blocks_per_stack {
                blocks.push(TcnBlock::load(w, &format!("{net}.s{s}.b{b}"), d.dilation(b), with_film)?);
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[TcnBlock] {
        &self.blocks
    }

    pub fn new_rings(&self) -> Vec<RingBuffer> {
        self.blocks.iter().map(TcnBlock::new_ring).collect()
    }

    #[inline]
    pub(crate) fn step(&self, x: &mut [f32], profile: Option<&[f32]>, rings: &mut [RingBuffer], s: &mut BlockScratch) {
        for (block, ring) in self.blocks.iter().zip(rings.iter_mut()) {
            block.step(x, profile, ring, s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::container::gen_weights;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(dilation_block: usize) -> (TcnBlock, WeightContainer) {
        let d = ArchitectureDescriptor::tiny();
        let w = gen_weights(&d, 5).unwrap();
        let b = TcnBlock::load(&w, &format!("speaker.s0.b{dilation_block}"), d.dilation(dilation_block), false).unwrap();
        (b, w)
    }

    fn random(rng: &mut ChaCha8Rng, t: usize, c: usize) -> Tensor {
        Tensor::new(vec![t, c], (0..t * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn left_context_formula() {
        let d = ArchitectureDescriptor::default();
        let w = gen_weights(&d, 1).unwrap();
        let b = TcnBlock::load(&w, "speaker.s0.b6", d.dilation(6), false).unwrap();
        assert_eq!(b.left_context(), 128);
        assert_eq!(b.new_ring().context(), 128);
    }

    #[test]
    fn impulse_response_is_causal() {
        let (block, _) = setup(1);
        let b = block.bottleneck();
        let t = 20;
        let t0 = 9;
        let base = Tensor::zeros(vec![t, b]);
        let mut bumped = base.clone();
        bumped.data_mut()[t0 * b] = 1.0;
        let mut s1 = StreamState::for_block(block.left_context(), block.hidden());
        let mut s2 = s1.clone();
        let y0 = causal_tcn_block(&base, &mut s1, &block, None).unwrap();
        let y1 = causal_tcn_block(&bumped, &mut s2, &block, None).unwrap();
        for ti in 0..t0 {
            assert_eq!(y0.row(ti), y1.row(ti));
        }
        assert_ne!(y0.row(t0), y1.row(t0));
    }

    #[test]
    fn chunked_equals_whole() {
        let (block, _) = setup(2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random(&mut rng, 50, block.bottleneck());
        let mut st = StreamState::for_block(block.left_context(), block.hidden());
        let whole = causal_tcn_block(&x, &mut st, &block, None).unwrap();
        let mut st = StreamState::for_block(block.left_context(), block.hidden());
        let mut parts = Vec::new();
        for t in 0..50 {
            let frame = Tensor::new(vec![1, block.bottleneck()], x.row(t).to_vec()).unwrap();
            parts.extend_from_slice(causal_tcn_block(&frame, &mut st, &block, None).unwrap().data());
        }
        assert_eq!(parts, whole.data());
        assert_eq!(st.frames(), 50);
        st.reset();
        assert!(st.is_zeroed());
    }

    #[test]
    fn state_mismatch_rejected() {
        let (block, _) = setup(2);
        let x = Tensor::zeros(vec![3, block.bottleneck()]);
        let mut wrong = StreamState::for_block(block.left_context() + 1, block.hidden());
        assert!(causal_tcn_block(&x, &mut wrong, &block, None).is_err());
        let mut st = StreamState::for_block(block.left_context(), block.hidden());
        assert!(causal_tcn_block(&Tensor::zeros(vec![3, 1]), &mut st, &block, None).is_err());
    }
}
