use super::container::WeightContainer;
use super::ops::{matvec_acc, sigmoid};
use crate::error::{Error, Result};

/// Unidirectional LSTM layer. Gates are packed `[i, f, g, o]`, each of width
/// `hidden`; `w_ih` is `[input, 4·hidden]`, `w_hh` is `[hidden, 4·hidden]`.
#[derive(Debug, Clone)]
pub struct LstmLayer {
    input: usize,
    hidden: usize,
    w_ih: Vec<f32>,
    w_hh: Vec<f32>,
    bias: Vec<f32>,
}

impl LstmLayer {
    pub fn new(input: usize, hidden: usize, w_ih: Vec<f32>, w_hh: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if w_ih.len() != input * 4 * hidden || w_hh.len() != hidden * 4 * hidden || bias.len() != 4 * hidden {
            return Err(Error::shape(format!("LSTM {input}->{hidden}: bad parameter sizes")));
        }
        Ok(Self {
            input,
            hidden,
            w_ih,
            w_hh,
            bias,
        })
    }

    pub fn load(w: &WeightContainer, prefix: &str) -> Result<Self> {
        let ih = w.tensor(&format!("{prefix}.w_ih"))?;
        let hh = w.tensor(&format!("{prefix}.w_hh"))?;
        let b = w.tensor(&format!("{prefix}.bias"))?;
        Self::new(
            ih.shape()[0],
            hh.shape()[0],
            ih.data().to_vec(),
            hh.data().to_vec(),
            b.data().to_vec(),
        )
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// One time step; updates `h` and `c` in place. `gates` holds `4·hidden`.
    #[inline]
    pub fn step(&self, x: &[f32], h: &mut [f32], c: &mut [f32], gates: &mut [f32]) {
        let n = self.hidden;
        gates.copy_from_slice(&self.bias);
        matvec_acc(x, &self.w_ih, gates);
        matvec_acc(h, &self.w_hh, gates);
        for j in 0..n {
            let i = sigmoid(gates[j]);
            let f = sigmoid(gates[n + j]);
            let g = gates[2 * n + j].tanh();
            let o = sigmoid(gates[3 * n + j]);
            c[j] = f * c[j] + i * g;
            h[j] = o * c[j].tanh();
        }
    }
}
