use crate::error::{Error, Result};
use crate::net::{Tensor, TensorFile};

/// Tensor name used when an embedding sequence is stored in a container file.
pub const EMBEDDINGS_TENSOR: &str = "embeddings";

/// N slots × T frames × D dims, stored frame-major so frames can be appended
/// while streaming. Slot order carries no meaning across frames.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFrameSeq {
    slots: usize,
    dim: usize,
    values: Vec<f64>,
}

/// Same layout as [`EmbeddingFrameSeq`], but slot `i` is speaker `i` at every
/// frame.
pub type OracleEmbeddingSeq = EmbeddingFrameSeq;

impl EmbeddingFrameSeq {
    /// `values` is frame-major: `values[(t·slots + i)·dim + k]`.
    pub fn new(slots: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if slots == 0 || dim == 0 {
            return Err(Error::shape("embedding sequence needs slots > 0 and dim > 0"));
        }
        if values.len() % (slots * dim) != 0 {
            return Err(Error::shape(format!(
                "{} values do not form whole frames of {slots}×{dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding values must be finite"));
        }
        Ok(Self { slots, dim, values })
    }

    pub fn empty(slots: usize, dim: usize) -> Result<Self> {
        Self::new(slots, dim, Vec::new())
    }

    /// Builds from per-slot `T×D` tracks.
    pub fn from_tracks(tracks: &[Vec<f64>], dim: usize) -> Result<Self> {
        let slots = tracks.len();
        if slots == 0 || dim == 0 || tracks[0].len() % dim != 0 {
            return Err(Error::shape("tracks must be non-empty whole T×D matrices"));
        }
        let frames = tracks[0].len() / dim;
        if tracks.iter().any(|t| t.len() != frames * dim) {
            return Err(Error::shape("tracks differ in length"));
        }
        let mut values = Vec::with_capacity(slots * frames * dim);
        for t in 0..frames {
            for track in tracks {
                values.extend_from_slice(&track[t * dim..(t + 1) * dim]);
            }
        }
        Self::new(slots, dim, values)
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frames(&self) -> usize {
        self.values.len() / (self.slots * self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All slots of frame `t`, `slots·dim` values.
    pub fn frame(&self, t: usize) -> &[f64] {
        let w = self.slots * self.dim;
        &self.values[t * w..(t + 1) * w]
    }

    pub fn get(&self, slot: usize, t: usize) -> &[f64] {
        let at = (t * self.slots + slot) * self.dim;
        &self.values[at..at + self.dim]
    }

    pub fn push_frame(&mut self, frame: &[f64]) -> Result<()> {
        if frame.len() != self.slots * self.dim {
            return Err(Error::shape(format!(
                "frame of {} values, expected {}",
                frame.len(),
                self.slots * self.dim
            )));
        }
        if frame.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding values must be finite"));
        }
        self.values.extend_from_slice(frame);
        Ok(())
    }

    /// Slot `i`'s `T×D` track.
    pub fn track(&self, slot: usize) -> Vec<f64> {
        (0..self.frames()).flat_map(|t| self.get(slot, t).iter().copied()).collect()
    }

    /// Frames `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        let w = self.slots * self.dim;
        Self {
            slots: self.slots,
            dim: self.dim,
            values: self.values[start * w..end * w].to_vec(),
        }
    }

    /// The same frames with slots reordered per frame: output slot `j` at
    /// frame `t` is input slot `perms[t][j]`.
    pub fn permuted(&self, perms: &[Vec<usize>]) -> Result<Self> {
        if perms.len() != self.frames() {
            return Err(Error::shape("one permutation per frame required"));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for (t, p) in perms.iter().enumerate() {
            for &slot in p {
                values.extend_from_slice(self.get(slot, t));
            }
        }
        Self::new(self.slots, self.dim, values)
    }

    /// Slot-major `[N, T, D]` tensor, as stored on disk.
    pub fn to_tensor(&self) -> Tensor {
        let (n, t, d) = (self.slots, self.frames(), self.dim);
        let mut data = Vec::with_capacity(n * t * d);
        for i in 0..n {
            for ti in 0..t {
                data.extend(self.get(i, ti).iter().map(|v| *v as f32));
            }
        }
        Tensor::new(vec![n, t, d], data).expect("shape matches data")
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        if t.rank() != 3 {
            return Err(Error::shape(format!("embeddings must be [N, T, D], got {:?}", t.shape())));
        }
        let (n, frames, d) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let tracks: Vec<Vec<f64>> = (0..n)
            .map(|i| t.data()[i * frames * d..(i + 1) * frames * d].iter().map(|v| *v as f64).collect())
            .collect();
        if frames == 0 {
            return Self::empty(n, d);
        }
        Self::from_tracks(&tracks, d)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut file = TensorFile {
            header: String::new(),
            tensors: Default::default(),
        };
        file.tensors.insert(EMBEDDINGS_TENSOR.to_string(), self.to_tensor());
        file.save(path)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = TensorFile::load(path)?;
        let t = file
            .tensors
            .get(EMBEDDINGS_TENSOR)
            .ok_or_else(|| Error::Shape(format!("container has no `{EMBEDDINGS_TENSOR}` tensor")))?;
        Self::from_tensor(t)
    }
}
