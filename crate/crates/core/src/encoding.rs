//! Continuous encodings of categorical node and edge labels.
//!
//! Three schemes are supported:
//! * `Scalar`: one channel; type `k` of `K` maps to the midpoint of the k-th of
//!   `K` equal sub-intervals of `[-1, 1]`.
//! * `Bits`: `ceil(log2 K)` channels holding the binary expansion (least
//!   significant bit first) remapped from {0, 1} to {-1, +1}.
//! * `OneHot`: `K` channels, +1 for the active type and -1 elsewhere.
//!
//! Edge type 0 means "no edge" and is encoded like any other category.
//! Graphs with a single node type and two edge types (absent / present) decode
//! to unlabelled graphs, so plain graphs round-trip as well.

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EncodingKind {
    Scalar,
    Bits,
    OneHot,
}

impl std::str::FromStr for EncodingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(Self::Scalar),
            "bits" => Ok(Self::Bits),
            "one-hot" | "onehot" => Ok(Self::OneHot),
            other => Err(Error::InvalidEncoding(format!("unknown encoding kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EncodingScheme {
    pub kind: EncodingKind,
    pub num_node_types: usize,
    pub num_edge_types: usize,
}

impl EncodingScheme {
    pub fn new(kind: EncodingKind, num_node_types: usize, num_edge_types: usize) -> Result<Self> {
        if num_node_types == 0 || num_edge_types == 0 {
            return Err(Error::InvalidEncoding("type counts must be positive".into()));
        }
        Ok(Self {
            kind,
            num_node_types,
            num_edge_types,
        })
    }

    pub fn node_channels(&self) -> usize {
        channels(self.kind, self.num_node_types)
    }

    pub fn edge_channels(&self) -> usize {
        channels(self.kind, self.num_edge_types)
    }
}

/// Channel count of one categorical variable with `num_types` values.
pub fn channels(kind: EncodingKind, num_types: usize) -> usize {
    match kind {
        EncodingKind::Scalar => 1,
        EncodingKind::Bits => bit_width(num_types),
        EncodingKind::OneHot => num_types,
    }
}

fn bit_width(num_types: usize) -> usize {
    (usize::BITS - (num_types.max(1) - 1).leading_zeros()) as usize
}

/// Encodes one value into `out` (length `channels(kind, num_types)`).
pub fn encode_value(kind: EncodingKind, num_types: usize, value: u8, out: &mut [f64]) -> Result<()> {
    let v = value as usize;
    if v >= num_types {
        return Err(Error::TypeOutOfRange { value, num_types });
    }
    match kind {
        EncodingKind::Scalar => out[0] = -1.0 + (2 * v + 1) as f64 / num_types as f64,
        EncodingKind::Bits => {
            for (b, o) in out.iter_mut().enumerate() {
                *o = if v >> b & 1 == 1 { 1.0 } else { -1.0 };
            }
        }
        EncodingKind::OneHot => {
            for (k, o) in out.iter_mut().enumerate() {
                *o = if k == v { 1.0 } else { -1.0 };
            }
        }
    }
    Ok(())
}

/// Decodes one (possibly noisy) channel vector back to a type index.
pub fn decode_value(kind: EncodingKind, num_types: usize, x: &[f64]) -> u8 {
    let v = match kind {
        // nearest midpoint; boundary intervals absorb values beyond ±1
        EncodingKind::Scalar => {
            let k = ((x[0] + 1.0) * num_types as f64 / 2.0).floor();
            if k.is_nan() {
                0
            } else {
                (k.max(0.0) as usize).min(num_types - 1)
            }
        }
        EncodingKind::Bits => {
            let raw = x
                .iter()
                .enumerate()
                .fold(0usize, |acc, (b, &c)| if c > 0.0 { acc | 1 << b } else { acc });
            raw.min(num_types - 1)
        }
        EncodingKind::OneHot => x
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |best, (k, &c)| if c > best.1 { (k, c) } else { best })
            .0,
    };
    v as u8
}

/// Channels-last encoding of a graph: edges are n×n×`edge_channels`, nodes n×`node_channels`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedGraph {
    pub n: usize,
    pub edge_channels: usize,
    pub node_channels: usize,
    pub edges: Vec<f64>,
    pub nodes: Vec<f64>,
}

pub fn encode_attributes(g: &Graph, scheme: &EncodingScheme) -> Result<EncodedGraph> {
    let n = g.n();
    let ce = scheme.edge_channels();
    let cv = scheme.node_channels();
    let mut edges = vec![0.0; n * n * ce];
    for i in 0..n {
        for j in 0..n {
            let at = (i * n + j) * ce;
            encode_value(scheme.kind, scheme.num_edge_types, g.edge_label(i, j), &mut edges[at..at + ce])?;
        }
    }
    let mut nodes = vec![0.0; n * cv];
    for v in 0..n {
        encode_value(scheme.kind, scheme.num_node_types, g.node_label(v), &mut nodes[v * cv..(v + 1) * cv])?;
    }
    Ok(EncodedGraph {
        n,
        edge_channels: ce,
        node_channels: cv,
        edges,
        nodes,
    })
}

/// Inverse of [`encode_attributes`]. Edge channels are averaged with their
/// transpose before decoding and the diagonal is forced to "no edge".
pub fn decode_attributes(enc: &EncodedGraph, scheme: &EncodingScheme) -> Result<Graph> {
    let n = enc.n;
    let ce = scheme.edge_channels();
    let cv = scheme.node_channels();
    if enc.edge_channels != ce || enc.node_channels != cv {
        return Err(Error::InvalidEncoding(format!(
            "channels ({}, {}) do not match scheme ({ce}, {cv})",
            enc.edge_channels, enc.node_channels
        )));
    }
    if enc.edges.iter().chain(&enc.nodes).any(|v| v.is_nan()) {
        return Err(Error::SamplingDiverged("NaN in encoded graph".into()));
    }
    let mut labels = vec![0u8; n * n];
    let mut buf = vec![0.0; ce];
    for i in 0..n {
        for j in (i + 1)..n {
            for (c, b) in buf.iter_mut().enumerate() {
                *b = 0.5 * (enc.edges[(i * n + j) * ce + c] + enc.edges[(j * n + i) * ce + c]);
            }
            let t = decode_value(scheme.kind, scheme.num_edge_types, &buf);
            labels[i * n + j] = t;
            labels[j * n + i] = t;
        }
    }
    let node_labels: Vec<u8> = (0..n)
        .map(|v| decode_value(scheme.kind, scheme.num_node_types, &enc.nodes[v * cv..(v + 1) * cv]))
        .collect();
    let mut g = if scheme.num_edge_types <= 2 {
        Graph::from_adjacency(n, labels)?
    } else {
        Graph::from_edge_labels(n, labels)?
    };
    if scheme.num_node_types > 1 {
        g = g.with_node_attrs(node_labels)?;
    }
    Ok(g)
}
