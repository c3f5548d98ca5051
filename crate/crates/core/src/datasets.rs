//! Synthetic graph generators, train/test splits and padded batching.

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::encoding::{decode_attributes, encode_attributes, EncodedGraph, EncodingScheme};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::quantize::quantize_signed;

pub fn grid(rows: usize, cols: usize) -> Graph {
    let mut g = Graph::empty(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                g.add_edge(v, v + 1).expect("in range");
            }
            if r + 1 < rows {
                g.add_edge(v, v + cols).expect("in range");
            }
        }
    }
    g
}

/// `count` lattices with rows and columns drawn uniformly from the ranges.
/// Nodes are numbered row-major.
pub fn generate_grid<R: Rng + ?Sized>(
    rows: RangeInclusive<usize>,
    cols: RangeInclusive<usize>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Graph>> {
    if rows.is_empty() || cols.is_empty() || *rows.start() == 0 || *cols.start() == 0 {
        return Err(Error::InvalidArgument(format!("empty grid range {rows:?} x {cols:?}")));
    }
    Ok((0..count)
        .map(|_| {
            let r = rng.random_range(rows.clone());
            let c = rng.random_range(cols.clone());
            grid(r, c)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommunityParams {
    pub p_intra: f64,
    /// Inter-block edge probability; `None` uses `0.2/|V|`, which gives
    /// `0.05·|V|` expected inter-block edges.
    pub p_inter: Option<f64>,
    pub sizes: (usize, usize),
}

impl Default for CommunityParams {
    fn default() -> Self {
        Self {
            p_intra: 0.7,
            p_inter: None,
            sizes: (12, 20),
        }
    }
}

impl CommunityParams {
    pub fn p_inter_for(&self, n: usize) -> f64 {
        self.p_inter.unwrap_or(0.2 / n as f64)
    }
}

/// Two equal Erdős–Rényi blocks joined by sparse random edges. `|V|` is drawn
/// uniformly from the even values in `params.sizes`; block one holds the
/// first `|V|/2` nodes.
pub fn generate_community_small<R: Rng + ?Sized>(
    count: usize,
    rng: &mut R,
    params: &CommunityParams,
) -> Result<Vec<Graph>> {
    let p_ok = |p: f64| (0.0..=1.0).contains(&p);
    if !p_ok(params.p_intra) || !params.p_inter.is_none_or(p_ok) {
        return Err(Error::InvalidArgument("probabilities must lie in [0, 1]".into()));
    }
    let (lo, hi) = params.sizes;
    let evens: Vec<usize> = (lo..=hi).filter(|n| n % 2 == 0 && *n > 0).collect();
    if evens.is_empty() {
        return Err(Error::InvalidArgument(format!("no even size in [{lo}, {hi}]")));
    }
    Ok((0..count)
        .map(|_| {
            let n = evens[rng.random_range(0..evens.len())];
            let half = n / 2;
            let p_inter = params.p_inter_for(n);
            let mut g = Graph::empty(n);
            for u in 0..n {
                for v in (u + 1)..n {
                    let p = if (u < half) == (v < half) { params.p_intra } else { p_inter };
                    if rng.random_bool(p) {
                        g.add_edge(u, v).expect("in range");
                    }
                }
            }
            g
        })
        .collect())
}

const REGULAR_RESTARTS: usize = 1000;

/// A uniformly-paired `d`-regular graph on `n` nodes. Stubs are matched one
/// random valid pair at a time; a dead end restarts the construction.
pub fn random_regular<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Graph> {
    if d >= n || (n * d) % 2 == 1 {
        return Err(Error::ConstructionFailed(format!("no {d}-regular graph on {n} nodes")));
    }
    if 2 * d > n {
        let c = random_regular(n, n - 1 - d, rng)?;
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                if !c.has_edge(u, v) {
                    g.add_edge(u, v)?;
                }
            }
        }
        return Ok(g);
    }
    'restart: for _ in 0..REGULAR_RESTARTS {
        let mut g = Graph::empty(n);
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        while !stubs.is_empty() {
            let valid: Vec<(usize, usize)> = (0..stubs.len())
                .flat_map(|i| ((i + 1)..stubs.len()).map(move |j| (i, j)))
                .filter(|&(i, j)| stubs[i] != stubs[j] && !g.has_edge(stubs[i], stubs[j]))
                .collect();
            if valid.is_empty() {
                continue 'restart;
            }
            let (i, j) = valid[rng.random_range(0..valid.len())];
            g.add_edge(stubs[i], stubs[j])?;
            stubs.swap_remove(j);
            stubs.swap_remove(i);
        }
        return Ok(g);
    }
    Err(Error::ConstructionFailed(format!(
        "{d}-regular graph on {n} nodes after {REGULAR_RESTARTS} restarts"
    )))
}

pub const TOY_NODES: usize = 16;
pub const TOY_DEGREES: RangeInclusive<usize> = 2..=11;
pub const TOY_COUNT: usize = 10;

/// Ten regular graphs on 16 nodes with distinct degrees drawn without
/// replacement from `[2, 11]`, in random order.
pub fn generate_regular_toy<R: Rng + ?Sized>(rng: &mut R) -> Result<Vec<Graph>> {
    let mut degrees: Vec<usize> = TOY_DEGREES.collect();
    degrees.shuffle(rng);
    degrees
        .into_iter()
        .take(TOY_COUNT)
        .map(|d| random_regular(TOY_NODES, d, rng))
        .collect()
}

/// Seeded random partition; the first `round(ratio·len)` shuffled items train.
pub fn split<T: Clone, R: Rng + ?Sized>(data: &[T], ratio: f64, rng: &mut R) -> Result<(Vec<T>, Vec<T>)> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} outside [0, 1]")));
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(rng);
    let k = (ratio * data.len() as f64).round() as usize;
    let pick = |ids: &[usize]| ids.iter().map(|&i| data[i].clone()).collect();
    Ok((pick(&idx[..k]), pick(&idx[k..])))
}

/// Graphs padded to `max_n` nodes, channels last.
///
/// `edges` is `len × max_n × max_n × edge_channels`, `nodes` is
/// `len × max_n × node_channels`, `mask` is `len × max_n`. Padding rows and
/// columns hold the encoding of "no edge" (−1 for plain graphs) and node type 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub len: usize,
    pub max_n: usize,
    pub edge_channels: usize,
    pub node_channels: usize,
    pub edges: Vec<f64>,
    pub nodes: Vec<f64>,
    pub mask: Vec<bool>,
    /// Encoding used for labelled graphs; `None` for plain ±1 adjacency.
    pub scheme: Option<EncodingScheme>,
}

impl Batch {
    pub fn sizes(&self) -> Vec<usize> {
        self.mask
            .chunks(self.max_n.max(1))
            .take(self.len)
            .map(|m| m.iter().filter(|b| **b).count())
            .collect()
    }

    /// Edge block of item `b` as a row-major `max_n × max_n × edge_channels` slice.
    pub fn item_edges(&self, b: usize) -> &[f64] {
        let s = self.max_n * self.max_n * self.edge_channels;
        &self.edges[b * s..(b + 1) * s]
    }

    pub fn item_nodes(&self, b: usize) -> &[f64] {
        let s = self.max_n * self.node_channels;
        &self.nodes[b * s..(b + 1) * s]
    }
}

fn check_sizes(graphs: &[Graph], max_n: usize) -> Result<()> {
    match graphs.iter().find(|g| g.n() > max_n) {
        Some(g) => Err(Error::SizeMismatch {
            expected: max_n,
            found: g.n(),
        }),
        None => Ok(()),
    }
}

fn mask_for(graphs: &[Graph], max_n: usize) -> Vec<bool> {
    graphs.iter().flat_map(|g| (0..max_n).map(move |v| v < g.n())).collect()
}

/// Plain graphs as one ±1 adjacency channel (edge → +1, no edge → −1).
pub fn batch(graphs: &[Graph], max_n: usize) -> Result<Batch> {
    check_sizes(graphs, max_n)?;
    let mut edges = vec![-1.0; graphs.len() * max_n * max_n];
    for (b, g) in graphs.iter().enumerate() {
        let base = b * max_n * max_n;
        for (u, v) in g.edges() {
            edges[base + u * max_n + v] = 1.0;
            edges[base + v * max_n + u] = 1.0;
        }
    }
    Ok(Batch {
        len: graphs.len(),
        max_n,
        edge_channels: 1,
        node_channels: 0,
        edges,
        nodes: Vec::new(),
        mask: mask_for(graphs, max_n),
        scheme: None,
    })
}

/// Attributed graphs encoded with `scheme`.
pub fn batch_encoded(graphs: &[Graph], max_n: usize, scheme: &EncodingScheme) -> Result<Batch> {
    check_sizes(graphs, max_n)?;
    let ce = scheme.edge_channels();
    let cv = scheme.node_channels();
    let pad = encode_attributes(&Graph::empty(max_n), scheme)?;
    let mut edges = Vec::with_capacity(graphs.len() * max_n * max_n * ce);
    let mut nodes = Vec::with_capacity(graphs.len() * max_n * cv);
    for g in graphs {
        let enc = encode_attributes(g, scheme)?;
        let n = g.n();
        for i in 0..max_n {
            for j in 0..max_n {
                let src = if i < n && j < n {
                    &enc.edges[(i * n + j) * ce..(i * n + j + 1) * ce]
                } else {
                    &pad.edges[(i * max_n + j) * ce..(i * max_n + j + 1) * ce]
                };
                edges.extend_from_slice(src);
            }
        }
        for v in 0..max_n {
            let src = if v < n { &enc.nodes[v * cv..(v + 1) * cv] } else { &pad.nodes[v * cv..(v + 1) * cv] };
            nodes.extend_from_slice(src);
        }
    }
    Ok(Batch {
        len: graphs.len(),
        max_n,
        edge_channels: ce,
        node_channels: cv,
        edges,
        nodes,
        mask: mask_for(graphs, max_n),
        scheme: Some(*scheme),
    })
}

/// Inverse of [`batch`] / [`batch_encoded`]: each item is cropped to its
/// masked node count and decoded.
pub fn unbatch(batch: &Batch) -> Result<Vec<Graph>> {
    let m = batch.max_n;
    batch
        .sizes()
        .into_iter()
        .enumerate()
        .map(|(b, n)| {
            let e = batch.item_edges(b);
            let c = batch.edge_channels;
            let mut edges = Vec::with_capacity(n * n * c);
            for i in 0..n {
                edges.extend_from_slice(&e[(i * m) * c..(i * m + n) * c]);
            }
            match &batch.scheme {
                None => quantize_signed(n, &edges),
                Some(scheme) => {
                    let enc = EncodedGraph {
                        n,
                        edge_channels: c,
                        node_channels: batch.node_channels,
                        edges,
                        nodes: batch.item_nodes(b)[..n * batch.node_channels].to_vec(),
                    };
                    decode_attributes(&enc, scheme)
                }
            }
        })
        .collect()
}
