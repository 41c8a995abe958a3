//! Binary tensor containers.
//!
//! Layout (all integers little-endian `u32`):
//!
//! ```text
//! "BSRW" | version | header_len | header (UTF-8 TOML) | tensor_count |
//!   repeated: name_len | name | rank | dims[rank] | f32 payload (prod(dims) values)
//! ```
//!
//! Weight files carry an [`ArchitectureDescriptor`] as the header; oracle
//! embedding files carry `kind = "oracle-embeddings"` and a single
//! `embeddings` tensor of shape `[N, T, D]`. Dense matrices are stored
//! `[in, out]`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::descriptor::ArchitectureDescriptor;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BSRW";
pub const CONTAINER_VERSION: u32 = 1;

/// A header text plus named tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    pub header: String,
    pub tensors: BTreeMap<String, Tensor>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Container(format!(
                "truncated container while reading {what} at byte {}",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

impl TensorFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.header.len() as u32).to_le_bytes());
        out.extend_from_slice(self.header.as_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
            for d in t.shape() {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parses a container. `expected` maps tensor names to required shapes;
    /// a declared shape that disagrees is rejected before its payload is read.
    pub fn from_bytes(bytes: &[u8], expected: Option<&BTreeMap<String, Vec<usize>>>) -> Result<Self> {
        let mut c = Cursor { bytes, pos: 0 };
        if c.take(4, "magic")? != MAGIC {
            return Err(Error::Container("bad magic; not a BSRW container".into()));
        }
        let version = c.u32("version")?;
        if version != CONTAINER_VERSION {
            return Err(Error::Container(format!("unsupported container version {version}")));
        }
        let hlen = c.u32("header length")? as usize;
        let header = std::str::from_utf8(c.take(hlen, "header")?)
            .map_err(|_| Error::Container("header is not UTF-8".into()))?
            .to_string();
        let count = c.u32("tensor count")? as usize;
        let mut tensors = BTreeMap::new();
        for _ in 0..count {
            let nlen = c.u32("name length")? as usize;
            let name = std::str::from_utf8(c.take(nlen, "tensor name")?)
                .map_err(|_| Error::Container("tensor name is not UTF-8".into()))?
                .to_string();
            let rank = c.u32("rank")? as usize;
            if rank > 8 {
                return Err(Error::Shape(format!("tensor {name}: implausible rank {rank}")));
            }
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(c.u32("dims")? as usize);
            }
            if let Some(exp) = expected {
                match exp.get(&name) {
                    None => return Err(Error::Shape(format!("unexpected tensor {name}"))),
                    Some(shape) if *shape != dims => {
                        return Err(Error::Shape(format!(
                            "tensor {name}: declared shape {dims:?}, descriptor requires {shape:?}"
                        )))
                    }
                    _ => {}
                }
            }
            let n: usize = dims.iter().product();
            let payload = c.take(n.checked_mul(4).ok_or_else(|| Error::Shape("tensor too large".into()))?, "payload")?;
            let data = payload
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            let t = Tensor::new(dims, data).map_err(|e| Error::Container(format!("tensor {name}: {e}")))?;
            if tensors.insert(name.clone(), t).is_some() {
                return Err(Error::Container(format!("duplicate tensor {name}")));
            }
        }
        if c.pos != bytes.len() {
            return Err(Error::Container(format!(
                "{} trailing bytes after last tensor",
                bytes.len() - c.pos
            )));
        }
        Ok(Self { header, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, None)
    }
}

/// How a parameter is initialised by [`gen_weights`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform on ±1/√fan_in.
    Uniform { fan_in: usize },
    Ones,
    Zeros,
    Constant(f32),
}

/// Every parameter the descriptor implies, in generation order.
pub fn parameter_specs(d: &ArchitectureDescriptor) -> Vec<(String, Vec<usize>, Init)> {
    let mut out = Vec::new();
    let dense = |out: &mut Vec<_>, prefix: &str, fan_in: usize, fan_out: usize| {
        out.push((format!("{prefix}.weight"), vec![fan_in, fan_out], Init::Uniform { fan_in }));
        out.push((format!("{prefix}.bias"), vec![fan_out], Init::Uniform { fan_in }));
    };
    let (b, h, k, dd) = (d.bottleneck, d.hidden, d.kernel, d.embed_dim);
    let block = |out: &mut Vec<(String, Vec<usize>, Init)>, prefix: &str, film: bool| {
        if film {
            out.push((format!("{prefix}.film.f"), vec![dd, b], Init::Uniform { fan_in: dd }));
            out.push((format!("{prefix}.film.g"), vec![dd, b], Init::Uniform { fan_in: dd }));
        }
        out.push((format!("{prefix}.in.weight"), vec![b, h], Init::Uniform { fan_in: b }));
        out.push((format!("{prefix}.in.bias"), vec![h], Init::Uniform { fan_in: b }));
        out.push((format!("{prefix}.prelu1"), vec![1], Init::Constant(0.25)));
        out.push((format!("{prefix}.norm1.gain"), vec![h], Init::Ones));
        out.push((format!("{prefix}.norm1.bias"), vec![h], Init::Zeros));
        out.push((format!("{prefix}.dw.weight"), vec![h, k], Init::Uniform { fan_in: k }));
        out.push((format!("{prefix}.dw.bias"), vec![h], Init::Uniform { fan_in: k }));
        out.push((format!("{prefix}.prelu2"), vec![1], Init::Constant(0.25)));
        out.push((format!("{prefix}.norm2.gain"), vec![h], Init::Ones));
        out.push((format!("{prefix}.norm2.bias"), vec![h], Init::Zeros));
        out.push((format!("{prefix}.out.weight"), vec![h, b], Init::Uniform { fan_in: h }));
        out.push((format!("{prefix}.out.bias"), vec![b], Init::Uniform { fan_in: h }));
    };
    let stacks = |out: &mut Vec<_>, net: &str, count: usize, film: bool| {
        for s in 0..count {
            for j in 0..d.blocks_per_stack {
                block(out, &format!("{net}.s{s}.b{j}"), film);
            }
        }
    };

    out.push(("encoder.weight".into(), vec![d.enc_kernel, d.enc_filters], Init::Uniform { fan_in: d.enc_kernel }));
    out.push(("decoder.weight".into(), vec![d.enc_filters, d.enc_kernel], Init::Uniform { fan_in: d.enc_filters }));

    dense(&mut out, "speaker.input", d.feature_dim(), b);
    stacks(&mut out, "speaker", d.speaker_stacks, false);
    out.push(("speaker.output.prelu".into(), vec![1], Init::Constant(0.25)));
    dense(&mut out, "speaker.output", b, d.num_speakers * dd);

    dense(&mut out, "fusion.input", d.feature_dim(), b);
    stacks(&mut out, "fusion", d.fusion_stacks, true);

    out.push(("localizer.film.f".into(), vec![dd, b], Init::Uniform { fan_in: dd }));
    out.push(("localizer.film.g".into(), vec![dd, b], Init::Uniform { fan_in: dd }));
    for l in 0..d.lstm_layers {
        let input = if l == 0 { b } else { d.lstm_hidden };
        let hs = d.lstm_hidden;
        out.push((format!("localizer.lstm{l}.w_ih"), vec![input, 4 * hs], Init::Uniform { fan_in: hs }));
        out.push((format!("localizer.lstm{l}.w_hh"), vec![hs, 4 * hs], Init::Uniform { fan_in: hs }));
        out.push((format!("localizer.lstm{l}.bias"), vec![4 * hs], Init::Uniform { fan_in: hs }));
    }
    dense(&mut out, "localizer.output", d.lstm_hidden, d.doa_classes);

    dense(&mut out, "extraction.input", b + d.doa_classes, b);
    stacks(&mut out, "extraction", d.extraction_stacks, true);
    out.push(("extraction.output.prelu".into(), vec![1], Init::Constant(0.25)));
    dense(&mut out, "extraction.mask", b, 2 * d.enc_filters);
    out
}

pub fn expected_shapes(d: &ArchitectureDescriptor) -> BTreeMap<String, Vec<usize>> {
    parameter_specs(d).into_iter().map(|(n, s, _)| (n, s)).collect()
}

/// Validated network weights. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightContainer {
    descriptor: ArchitectureDescriptor,
    tensors: BTreeMap<String, Tensor>,
}

impl WeightContainer {
    pub fn new(descriptor: ArchitectureDescriptor, tensors: BTreeMap<String, Tensor>) -> Result<Self> {
        descriptor.validate()?;
        let expected = expected_shapes(&descriptor);
        for (name, shape) in &expected {
            match tensors.get(name) {
                None => return Err(Error::Shape(format!("missing tensor {name}"))),
                Some(t) if t.shape() != shape.as_slice() => {
                    return Err(Error::Shape(format!(
                        "tensor {name}: shape {:?}, descriptor requires {shape:?}",
                        t.shape()
                    )))
                }
                _ => {}
            }
        }
        if let Some(extra) = tensors.keys().find(|k| !expected.contains_key(*k)) {
            return Err(Error::Shape(format!("unexpected tensor {extra}")));
        }
        Ok(Self { descriptor, tensors })
    }

    pub fn descriptor(&self) -> &ArchitectureDescriptor {
        &self.descriptor
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::Shape(format!("missing tensor {name}")))
    }

    pub fn tensors(&self) -> &BTreeMap<String, Tensor> {
        &self.tensors
    }

    /// Replaces one tensor, keeping its shape.
    pub fn set(&mut self, name: &str, data: Vec<f32>) -> Result<()> {
        let t = self
            .tensors
            .get_mut(name)
            .ok_or_else(|| Error::Shape(format!("missing tensor {name}")))?;
        *t = Tensor::new(t.shape().to_vec(), data)?;
        Ok(())
    }

    pub fn to_file(&self) -> TensorFile {
        TensorFile {
            header: self.descriptor.to_text(),
            tensors: self.tensors.clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_file().to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        // The header has to be parsed before shapes can be checked.
        let mut c = Cursor { bytes, pos: 0 };
        if c.take(4, "magic")? != MAGIC {
            return Err(Error::Container("bad magic; not a BSRW container".into()));
        }
        c.u32("version")?;
        let hlen = c.u32("header length")? as usize;
        let header = std::str::from_utf8(c.take(hlen, "header")?)
            .map_err(|_| Error::Container("header is not UTF-8".into()))?;
        let descriptor = ArchitectureDescriptor::from_text(header)?;
        let file = TensorFile::from_bytes(bytes, Some(&expected_shapes(&descriptor)))?;
        Self::new(descriptor, file.tensors)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_file().save(path)
    }

    /// All-weights network with an identity encoder/decoder pair and masks
    /// pinned to 1, so each separated speaker equals the mixture.
    pub fn passthrough(descriptor: ArchitectureDescriptor, seed: u64) -> Result<Self> {
        if descriptor.enc_filters != descriptor.enc_kernel {
            return Err(Error::invalid(
                "passthrough weights need enc_filters == enc_kernel",
            ));
        }
        let mut w = gen_weights(&descriptor, seed)?;
        let n = descriptor.enc_filters;
        let mut eye = vec![0.0f32; n * n];
        for i in 0..n {
            eye[i * n + i] = 1.0;
        }
        w.set("encoder.weight", eye.clone())?;
        w.set("decoder.weight", eye)?;
        w.set("extraction.mask.weight", vec![0.0; descriptor.bottleneck * 2 * n])?;
        w.set("extraction.mask.bias", vec![40.0; 2 * n])?;
        Ok(w)
    }
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightContainer> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    WeightContainer::from_bytes(&bytes)
}

/// Deterministic pseudo-random weights: linear and recurrent parameters are
/// uniform on ±1/√fan_in, normalization gains 1, biases of norms 0, PReLU
/// slopes 0.25.
pub fn gen_weights(descriptor: &ArchitectureDescriptor, seed: u64) -> Result<WeightContainer> {
    descriptor.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = BTreeMap::new();
    for (name, shape, init) in parameter_specs(descriptor) {
        let n: usize = shape.iter().product();
        let data = match init {
            Init::Uniform { fan_in } => {
                let bound = 1.0 / (fan_in as f32).sqrt();
                (0..n).map(|_| rng.gen_range(-bound..=bound)).collect()
            }
            Init::Ones => vec![1.0; n],
            Init::Zeros => vec![0.0; n],
            Init::Constant(c) => vec![c; n],
        };
        tensors.insert(name, Tensor::new(shape, data)?);
    }
    WeightContainer::new(descriptor.clone(), tensors)
}

/// Generates weights and writes them to `path`.
pub fn gen_weights_to(descriptor: &ArchitectureDescriptor, seed: u64, path: impl AsRef<Path>) -> Result<()> {
    gen_weights(descriptor, seed)?.save(path)
}
