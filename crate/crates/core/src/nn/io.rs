//! Flat little-endian binary encoding for network parameters.
//!
//! A network is written as
//!
//! ```text
//! u32 head | u32 layer_count | (u32 inputs, u32 outputs) * layer_count
//! then, per layer in order: weight (row-major, inputs x outputs) then bias,
//! every value an f64 in little-endian byte order.
//! ```
//!
//! Optimizer state is `u64 step | u64 len | first[len] | second[len]`.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use crate::nn::adam::{Adam, AdamConfig};
use crate::nn::mlp::{Dense, Mlp, OutputHead};
use crate::{Error, Result};

pub struct BinWriter<W: Write> {
    inner: W,
}

impl<W: Write> BinWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn into_inner(self) -> W {
        self.inner
    }

    fn put(&mut self, bytes: &[u8]) -> Result<()> {
        self.inner
            .write_all(bytes)
            .map_err(|e| Error::Checkpoint(format!("write failed: {e}")))
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn bytes(&mut self, v: &[u8]) -> Result<()> {
        self.u64(v.len() as u64)?;
        self.put(v)
    }

    pub fn f64s(&mut self, v: &[f64]) -> Result<()> {
        let mut buf = Vec::with_capacity(v.len() * 8);
        for x in v {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        self.put(&buf)
    }

    pub fn mlp(&mut self, net: &Mlp) -> Result<()> {
        self.u32(net.head().code())?;
        self.u32(net.layers().len() as u32)?;
        for l in net.layers() {
            self.u32(l.inputs() as u32)?;
            self.u32(l.outputs() as u32)?;
        }
        for slice in net.param_slices() {
            self.f64s(slice)?;
        }
        Ok(())
    }

    pub fn adam(&mut self, opt: &Adam) -> Result<()> {
        self.u64(opt.step)?;
        self.u64(opt.first.len() as u64)?;
        self.f64s(&opt.first)?;
        self.f64s(&opt.second)
    }
}

pub struct BinReader<R: Read> {
    inner: R,
}

impl<R: Read> BinReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Checkpoint(format!("truncated data: {e}")))?;
        Ok(buf)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>> {
        let len = self.u64()? as usize;
        let mut buf = vec![0u8; len];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Checkpoint(format!("truncated data: {e}")))?;
        Ok(buf)
    }

    pub fn f64s(&mut self, len: usize) -> Result<Vec<f64>> {
        let mut raw = vec![0u8; len * 8];
        self.inner
            .read_exact(&mut raw)
            .map_err(|e| Error::Checkpoint(format!("truncated data: {e}")))?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }

    pub fn mlp(&mut self) -> Result<Mlp> {
        let head = OutputHead::from_code(self.u32()?)
            .ok_or_else(|| Error::Checkpoint("unknown output head".into()))?;
        let count = self.u32()? as usize;
        if count == 0 || count > 64 {
            return Err(Error::Checkpoint(format!("implausible layer count {count}")));
        }
        let mut dims = Vec::with_capacity(count);
        for _ in 0..count {
            dims.push((self.u32()? as usize, self.u32()? as usize));
        }
        let mut layers = Vec::with_capacity(count);
        for (inputs, outputs) in dims {
            let w = self.f64s(inputs * outputs)?;
            let b = self.f64s(outputs)?;
            layers.push(Dense {
                weight: Array2::from_shape_vec((inputs, outputs), w)
                    .map_err(|e| Error::Checkpoint(e.to_string()))?,
                bias: Array1::from(b),
            });
        }
        Mlp::from_layers(layers, head).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn adam(&mut self, config: AdamConfig) -> Result<Adam> {
        let step = self.u64()?;
        let len = self.u64()? as usize;
        let first = self.f64s(len)?;
        let second = self.f64s(len)?;
        Ok(Adam {
            config,
            step,
            first,
            second,
        })
    }
}

/// Serialize a single network to bytes.
pub fn encode_mlp(net: &Mlp) -> Vec<u8> {
    let mut w = BinWriter::new(Vec::new());
    w.mlp(net).expect("writing to memory cannot fail");
    w.into_inner()
}

pub fn decode_mlp(bytes: &[u8]) -> Result<Mlp> {
    BinReader::new(bytes).mlp()
}
