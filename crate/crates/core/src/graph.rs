//! Dense undirected graphs with optional categorical node and edge labels.

use rand::Rng;

use crate::error::{Error, Result};

/// A simple undirected graph stored as a dense, row-major adjacency matrix.
///
/// Edge labels use 0 for "no edge", so `edge_attrs` is nonzero exactly where
/// the adjacency matrix is 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Graph {
    n: usize,
    adjacency: Vec<u8>,
    node_attrs: Option<Vec<u8>>,
    edge_attrs: Option<Vec<u8>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adjacency: vec![0; n * n],
            node_attrs: None,
            edge_attrs: None,
        }
    }

    /// Builds a graph from an undirected edge list. Duplicate edges are merged.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Wraps a row-major 0/1 matrix, checking symmetry and the zero diagonal.
    pub fn from_adjacency(n: usize, adjacency: Vec<u8>) -> Result<Self> {
        if adjacency.len() != n * n {
            return Err(Error::InvalidGraph(format!(
                "adjacency has {} entries, expected {}",
                adjacency.len(),
                n * n
            )));
        }
        for i in 0..n {
            if adjacency[i * n + i] != 0 {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let a = adjacency[i * n + j];
                if a > 1 {
                    return Err(Error::InvalidGraph(format!("entry ({i},{j}) = {a} is not binary")));
                }
                if a != adjacency[j * n + i] {
                    return Err(Error::InvalidGraph(format!("entry ({i},{j}) breaks symmetry")));
                }
            }
        }
        Ok(Self {
            n,
            adjacency,
            node_attrs: None,
            edge_attrs: None,
        })
    }

    pub fn with_node_attrs(mut self, attrs: Vec<u8>) -> Result<Self> {
        if attrs.len() != self.n {
            return Err(Error::InvalidGraph(format!(
                "{} node labels for {} nodes",
                attrs.len(),
                self.n
            )));
        }
        self.node_attrs = Some(attrs);
        Ok(self)
    }

    /// Attaches an n×n edge-label matrix. Labels must be symmetric and nonzero
    /// exactly on the edges of the graph.
    pub fn with_edge_attrs(mut self, attrs: Vec<u8>) -> Result<Self> {
        let n = self.n;
        if attrs.len() != n * n {
            return Err(Error::InvalidGraph(format!(
                "edge label matrix has {} entries, expected {}",
                attrs.len(),
                n * n
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let t = attrs[i * n + j];
                if t != attrs[j * n + i] {
                    return Err(Error::InvalidGraph(format!("edge label ({i},{j}) breaks symmetry")));
                }
                if (t != 0) != (self.adjacency[i * n + j] != 0) {
                    return Err(Error::InvalidGraph(format!(
                        "edge label ({i},{j}) = {t} disagrees with adjacency"
                    )));
                }
            }
        }
        self.edge_attrs = Some(attrs);
        Ok(self)
    }

    /// Builds an attributed graph from a label matrix alone; adjacency is
    /// wherever the label is nonzero.
    pub fn from_edge_labels(n: usize, labels: Vec<u8>) -> Result<Self> {
        let adjacency = labels.iter().map(|&t| u8::from(t != 0)).collect();
        Self::from_adjacency(n, adjacency)?.with_edge_attrs(labels)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.n;
        if u >= n || v >= n {
            return Err(Error::InvalidGraph(format!("edge ({u},{v}) out of range for n = {n}")));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
        }
        self.adjacency[u * n + v] = 1;
        self.adjacency[v * n + u] = 1;
        if let Some(e) = self.edge_attrs.as_mut() {
            if e[u * n + v] == 0 {
                e[u * n + v] = 1;
                e[v * n + u] = 1;
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u * self.n + v] != 0
    }

    pub fn adjacency(&self) -> &[u8] {
        &self.adjacency
    }

    pub fn node_attrs(&self) -> Option<&[u8]> {
        self.node_attrs.as_deref()
    }

    pub fn edge_attrs(&self) -> Option<&[u8]> {
        self.edge_attrs.as_deref()
    }

    /// Node label, or 0 for unlabelled graphs.
    #[inline]
    pub fn node_label(&self, v: usize) -> u8 {
        self.node_attrs.as_ref().map_or(0, |a| a[v])
    }

    /// Edge label, falling back to the adjacency bit for unlabelled graphs.
    #[inline]
    pub fn edge_label(&self, u: usize, v: usize) -> u8 {
        match &self.edge_attrs {
            Some(e) => e[u * self.n + v],
            None => self.adjacency[u * self.n + v],
        }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v * self.n..(v + 1) * self.n]
            .iter()
            .filter(|&&a| a != 0)
            .count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v * self.n..(v + 1) * self.n]
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(u, _)| u)
    }

    /// Edges as `(u, v)` pairs with `u < v`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |u| ((u + 1)..n).filter(move |&v| self.has_edge(u, v)).map(move |v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&a| a != 0).count() / 2
    }

    /// Drops every node without incident edges, keeping the relative order of the rest.
    pub fn without_isolated_nodes(&self) -> Graph {
        let keep: Vec<usize> = (0..self.n).filter(|&v| self.degree(v) > 0).collect();
        self.induced_subgraph(&keep)
    }

    /// Subgraph induced by `nodes`, relabelled to `0..nodes.len()` in the given order.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let k = nodes.len();
        let mut adjacency = vec![0; k * k];
        let mut edge_attrs = self.edge_attrs.as_ref().map(|_| vec![0; k * k]);
        for (a, &u) in nodes.iter().enumerate() {
            for (b, &v) in nodes.iter().enumerate() {
                adjacency[a * k + b] = self.adjacency[u * self.n + v];
                if let Some(e) = edge_attrs.as_mut() {
                    e[a * k + b] = self.edge_label(u, v);
                }
            }
        }
        Graph {
            n: k,
            adjacency,
            node_attrs: self
                .node_attrs
                .as_ref()
                .map(|attrs| nodes.iter().map(|&v| attrs[v]).collect()),
            edge_attrs,
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// A bijection on `0..n`; `mapping[i]` is the new position of node `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
        }
    }

    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || seen[m] {
                return Err(Error::InvalidPermutation(format!("{mapping:?} is not a bijection")));
            }
            seen[m] = true;
        }
        Ok(Self { mapping })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Self { mapping: inv }
    }

    /// `self ∘ other`: first apply `other`, then `self`.
    pub fn compose(&self, other: &Permutation) -> Self {
        Self {
            mapping: other.mapping.iter().map(|&i| self.mapping[i]).collect(),
        }
    }

    /// Row-major permutation matrix P with `P[p(i)][i] = 1`, so that
    /// `permute(g, p)` equals `P·A·Pᵀ`.
    pub fn matrix(&self) -> Vec<u8> {
        let n = self.len();
        let mut p = vec![0; n * n];
        for (i, &m) in self.mapping.iter().enumerate() {
            p[m * n + i] = 1;
        }
        p
    }

    /// Exactly uniform draw from S_n (Fisher–Yates).
    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            mapping.swap(i, j);
        }
        Self { mapping }
    }
}

pub fn uniform_random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    Permutation::uniform(n, rng)
}

/// Relabels the nodes of `g` so that node `i` becomes node `p(i)`; the adjacency
/// becomes `P·A·Pᵀ` and labels move with their nodes.
pub fn permute(g: &Graph, p: &Permutation) -> Result<Graph> {
    let n = g.n();
    if p.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: p.len(),
        });
    }
    let mut adjacency = vec![0; n * n];
    let mut edge_attrs = g.edge_attrs.as_ref().map(|_| vec![0; n * n]);
    for i in 0..n {
        let pi = p.apply(i);
        for j in 0..n {
            let pj = p.apply(j);
            adjacency[pi * n + pj] = g.adjacency[i * n + j];
            if let Some(e) = edge_attrs.as_mut() {
                e[pi * n + pj] = g.edge_label(i, j);
            }
        }
    }
    let node_attrs = g.node_attrs.as_ref().map(|attrs| {
        let mut out = vec![0; n];
        for (i, &a) in attrs.iter().enumerate() {
            out[p.apply(i)] = a;
        }
        out
    });
    Ok(Graph {
        n,
        adjacency,
        node_attrs,
        edge_attrs,
    })
}

/// Calls `f` with every permutation of `0..n` (Heap's algorithm).
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&Permutation)) {
    let mut perm = Permutation::identity(n);
    let mut c = vec![0usize; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.mapping.swap(0, i);
            } else {
                perm.mapping.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}
