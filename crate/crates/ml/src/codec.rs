//! Versioned binary model format.
//!
//! Every file starts with the magic `AFBM`, a little-endian `u16` format
//! version and a `u8` model kind. The payload follows; counts are `u32` and
//! every real number is a little-endian `f64`, so a decode/encode round trip
//! is bit-exact.
//!
//! | kind | payload |
//! |------|---------|
//! | 1 SVM | kernel `u8` (0 linear, 1 rbf), gamma, C, cost_pos, cost_neg, bias, dim, n_sv, support vectors (row-major), coefficients |
//! | 2 boosted trees | n_trees, then per tree: weight, n_nodes, nodes (`0` leaf + label `i8`, or `1` split + feature, threshold, left, right) |
//! | 3 shallow net | dim, hidden, gain, offset, w1, b1, w2, b2 |
//! | 4 Fisher | dim, w, b |

use crate::boost::{BoostedTrees, DecisionTree, Node};
use crate::fisher::FisherModel;
use crate::mlp::ShallowNet;
use crate::svm::{Kernel, SvmModel};
use crate::{MlError, Result};

pub const MAGIC: &[u8; 4] = b"AFBM";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ModelKind {
    Svm = 1,
    BoostedTrees = 2,
    ShallowNet = 3,
    Fisher = 4,
}

impl ModelKind {
    fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            1 => Self::Svm,
            2 => Self::BoostedTrees,
            3 => Self::ShallowNet,
            4 => Self::Fisher,
            other => return Err(MlError::Format(format!("unknown model kind {other}"))),
        })
    }
}

pub trait ModelCodec: Sized {
    const KIND: ModelKind;
    fn write_payload(&self, w: &mut Writer);
    fn read_payload(r: &mut Reader<'_>) -> Result<Self>;

    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u16(VERSION);
        w.u8(Self::KIND as u8);
        self.write_payload(&mut w);
        w.buf
    }

    fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(MlError::Format("bad magic".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(MlError::Format(format!("unsupported version {version}")));
        }
        let kind = ModelKind::from_tag(r.u8()?)?;
        if kind != Self::KIND {
            return Err(MlError::Format(format!("expected {:?}, file holds {kind:?}", Self::KIND)));
        }
        let model = Self::read_payload(&mut r)?;
        if r.pos != bytes.len() {
            return Err(MlError::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(model)
    }
}

/// Reads only the header and reports the model kind.
pub fn peek_kind(bytes: &[u8]) -> Result<ModelKind> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(MlError::Format("bad magic".into()));
    }
    r.u16()?;
    ModelKind::from_tag(r.u8()?)
}

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) {
        self.bytes(&u32::try_from(v).expect("count fits in u32").to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        vs.iter().for_each(|&v| self.f64(v));
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| MlError::Format("truncated model file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        // Bound the allocation by what the buffer can actually hold.
        if n > (self.buf.len() - self.pos) / 8 {
            return Err(MlError::Format("truncated model file".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

impl ModelCodec for SvmModel {
    const KIND: ModelKind = ModelKind::Svm;

    fn write_payload(&self, w: &mut Writer) {
        match self.kernel() {
            Kernel::Linear => {
                w.u8(0);
                w.f64(0.0);
            }
            Kernel::Rbf { gamma } => {
                w.u8(1);
                w.f64(gamma);
            }
        }
        w.f64(self.c());
        w.f64(self.cost_pos());
        w.f64(self.cost_neg());
        w.f64(self.bias());
        w.u32(self.dim());
        w.u32(self.n_support());
        w.f64s(self.support_vectors_flat());
        w.f64s(self.coef());
    }

    fn read_payload(r: &mut Reader<'_>) -> Result<Self> {
        let tag = r.u8()?;
        let gamma = r.f64()?;
        let kernel = match tag {
            0 => Kernel::Linear,
            1 => Kernel::Rbf { gamma },
            other => return Err(MlError::Format(format!("unknown kernel tag {other}"))),
        };
        let c = r.f64()?;
        let cost_pos = r.f64()?;
        let cost_neg = r.f64()?;
        let bias = r.f64()?;
        let dim = r.u32()?;
        let n_sv = r.u32()?;
        let svs = r.f64s(dim.saturating_mul(n_sv))?;
        let coef = r.f64s(n_sv)?;
        SvmModel::from_parts(kernel, dim, svs, coef, bias, c, cost_pos, cost_neg)
    }
}

impl ModelCodec for BoostedTrees {
    const KIND: ModelKind = ModelKind::BoostedTrees;

    fn write_payload(&self, w: &mut Writer) {
        w.u32(self.trees().len());
        for (tree, &weight) in self.trees().iter().zip(self.tree_weights()) {
            w.f64(weight);
            w.u32(tree.nodes().len());
            for node in tree.nodes() {
                match *node {
                    Node::Leaf { label } => {
                        w.u8(0);
                        w.u8(label as u8);
                    }
                    Node::Split { feature, threshold, left, right } => {
                        w.u8(1);
                        w.u32(feature);
                        w.f64(threshold);
                        w.u32(left);
                        w.u32(right);
                    }
                }
            }
        }
    }

    fn read_payload(r: &mut Reader<'_>) -> Result<Self> {
        let n_trees = r.u32()?;
        let mut trees = Vec::new();
        let mut weights = Vec::new();
        for _ in 0..n_trees {
            weights.push(r.f64()?);
            let n_nodes = r.u32()?;
            let mut nodes = Vec::new();
            for _ in 0..n_nodes {
                nodes.push(match r.u8()? {
                    0 => Node::Leaf { label: r.u8()? as i8 },
                    1 => Node::Split {
                        feature: r.u32()?,
                        threshold: r.f64()?,
                        left: r.u32()?,
                        right: r.u32()?,
                    },
                    other => return Err(MlError::Format(format!("unknown node tag {other}"))),
                });
            }
            trees.push(DecisionTree::from_nodes(nodes)?);
        }
        BoostedTrees::from_parts(trees, weights)
    }
}

impl ModelCodec for ShallowNet {
    const KIND: ModelKind = ModelKind::ShallowNet;

    fn write_payload(&self, w: &mut Writer) {
        w.u32(self.dim());
        w.u32(self.hidden());
        w.f64s(self.gain());
        w.f64s(self.offset());
        w.f64s(&self.parameters());
    }

    fn read_payload(r: &mut Reader<'_>) -> Result<Self> {
        let dim = r.u32()?;
        let hidden = r.u32()?;
        let gain = r.f64s(dim)?;
        let offset = r.f64s(dim)?;
        let w1 = r.f64s(dim.saturating_mul(hidden))?;
        let b1 = r.f64s(hidden)?;
        let w2 = r.f64s(hidden)?;
        let b2 = r.f64()?;
        ShallowNet::from_parts(gain, offset, hidden, w1, b1, w2, b2)
    }
}

impl ModelCodec for FisherModel {
    const KIND: ModelKind = ModelKind::Fisher;

    fn write_payload(&self, w: &mut Writer) {
        w.u32(self.weights().len());
        w.f64s(self.weights());
        w.f64(self.threshold());
    }

    fn read_payload(r: &mut Reader<'_>) -> Result<Self> {
        let dim = r.u32()?;
        let wv = r.f64s(dim)?;
        let b = r.f64()?;
        FisherModel::from_parts(wv, b)
    }
}
