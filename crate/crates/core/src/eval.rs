//! Graph statistics, MMD with a total-variation kernel, isomorphism recall
//! and molecule checks.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::iso::{classify, isomorphic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StatKind {
    Degree,
    Clustering,
    Orbit,
}

impl StatKind {
    pub fn name(self) -> &'static str {
        match self {
            StatKind::Degree => "degree",
            StatKind::Clustering => "clustering",
            StatKind::Orbit => "orbit",
        }
    }
}

/// A normalized per-graph histogram. A graph with no nodes (or, for orbits,
/// no connected 4-node subgraph) has all bins zero.
#[derive(Clone, Debug, PartialEq)]
pub struct StatHistogram {
    pub kind: StatKind,
    pub bins: Vec<f64>,
}

impl StatHistogram {
    fn normalized(kind: StatKind, counts: Vec<f64>) -> Self {
        let total: f64 = counts.iter().sum();
        let bins = if total > 0.0 { counts.iter().map(|c| c / total).collect() } else { counts };
        Self { kind, bins }
    }
}

/// Fraction of nodes with each degree; bin `k` is degree `k`. Sets with
/// different maximum degrees are zero-padded when compared.
pub fn degree_hist(g: &Graph) -> StatHistogram {
    let mut counts = vec![0.0; g.degrees().into_iter().max().map_or(0, |d| d + 1)];
    for d in g.degrees() {
        counts[d] += 1.0;
    }
    StatHistogram::normalized(StatKind::Degree, counts)
}

pub const CLUSTERING_BINS: usize = 100;

/// Local clustering coefficient of every node (0 below degree 2).
pub fn clustering_coefficients(g: &Graph) -> Vec<f64> {
    (0..g.n())
        .map(|v| {
            let nb: Vec<usize> = g.neighbors(v).collect();
            let k = nb.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (i, &a) in nb.iter().enumerate() {
                links += nb[i + 1..].iter().filter(|&&b| g.has_edge(a, b)).count();
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .collect()
}

pub fn clustering_hist(g: &Graph) -> StatHistogram {
    clustering_hist_with_bins(g, CLUSTERING_BINS)
}

pub fn clustering_hist_with_bins(g: &Graph, bins: usize) -> StatHistogram {
    let mut counts = vec![0.0; bins];
    for c in clustering_coefficients(g) {
        counts[((c * bins as f64) as usize).min(bins - 1)] += 1.0;
    }
    StatHistogram::normalized(StatKind::Clustering, counts)
}

/// Connected 4-node graphlet orbits, in order: path end, path middle, star
/// leaf, star center, cycle, paw tail, paw triangle (degree 2), paw hub,
/// diamond rim (degree 2), diamond spine (degree 3), clique.
pub const ORBITS: usize = 11;

fn orbit_of(edge_count: usize, degree_profile: [usize; 4], degree: usize) -> Option<usize> {
    let mut sorted = degree_profile;
    sorted.sort_unstable();
    let orbit = match (edge_count, sorted) {
        (3, [1, 1, 2, 2]) => [0, 1][degree - 1],
        (3, [1, 1, 1, 3]) => [2, 2, 3][degree - 1],
        (4, [2, 2, 2, 2]) => 4,
        (4, [1, 2, 2, 3]) => [5, 6, 7][degree - 1],
        (5, _) => [8, 9][degree - 2],
        (6, _) => 10,
        _ => return None,
    };
    Some(orbit)
}

/// Per-node orbit counts, `n × ORBITS`, by enumeration of node quadruples.
pub fn orbit_counts(g: &Graph) -> Vec<[u64; ORBITS]> {
    let n = g.n();
    let mut counts = vec![[0u64; ORBITS]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                for d in (c + 1)..n {
                    let q = [a, b, c, d];
                    let mut deg = [0usize; 4];
                    let mut m = 0;
                    for i in 0..4 {
                        for j in (i + 1)..4 {
                            if g.has_edge(q[i], q[j]) {
                                deg[i] += 1;
                                deg[j] += 1;
                                m += 1;
                            }
                        }
                    }
                    for i in 0..4 {
                        if let Some(o) = orbit_of(m, deg, deg[i]) {
                            counts[q[i]][o] += 1;
                        }
                    }
                }
            }
        }
    }
    counts
}

/// Orbit counts summed over nodes and normalized.
pub fn orbit_hist(g: &Graph) -> StatHistogram {
    let mut totals = vec![0.0; ORBITS];
    for row in orbit_counts(g) {
        for (t, c) in totals.iter_mut().zip(row) {
            *t += c as f64;
        }
    }
    StatHistogram::normalized(StatKind::Orbit, totals)
}

pub fn histogram(kind: StatKind, g: &Graph) -> StatHistogram {
    match kind {
        StatKind::Degree => degree_hist(g),
        StatKind::Clustering => clustering_hist(g),
        StatKind::Orbit => orbit_hist(g),
    }
}

pub const DEFAULT_BANDWIDTH: f64 = 1.0;

fn tv_distance(x: &[f64], y: &[f64]) -> f64 {
    let len = x.len().max(y.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(x, i) - at(y, i)).abs()).sum::<f64>()
}

/// Squared MMD (biased V-statistic) with `k(x, y) = exp(−d_TV(x, y)² / 2δ²)`
/// and `d_TV = ½Σ|x − y|`. Shorter histograms are zero-padded.
pub fn mmd_tv(a: &[StatHistogram], b: &[StatHistogram], bandwidth: f64) -> Result<f64> {
    let first = a.first().ok_or(Error::EmptyInput("first histogram set"))?;
    b.first().ok_or(Error::EmptyInput("second histogram set"))?;
    if let Some(h) = a.iter().chain(b).find(|h| h.kind != first.kind) {
        return Err(Error::KindMismatch(first.kind, h.kind));
    }
    let kernel = |x: &StatHistogram, y: &StatHistogram| {
        let d = tv_distance(&x.bins, &y.bins);
        (-d * d / (2.0 * bandwidth * bandwidth)).exp()
    };
    let mean = |s: &[StatHistogram], t: &[StatHistogram]| {
        let mut acc = 0.0;
        for x in s {
            for y in t {
                acc += kernel(x, y);
            }
        }
        acc / (s.len() * t.len()) as f64
    };
    Ok(mean(a, a) + mean(b, b) - 2.0 * mean(a, b))
}

/// MMD of one statistic between two graph sets, at the default bandwidth.
pub fn graph_mmd(kind: StatKind, a: &[Graph], b: &[Graph]) -> Result<f64> {
    let ha: Vec<_> = a.iter().map(|g| histogram(kind, g)).collect();
    let hb: Vec<_> = b.iter().map(|g| histogram(kind, g)).collect();
    mmd_tv(&ha, &hb, DEFAULT_BANDWIDTH)
}

pub const RECALL_LIMIT: usize = 20;

/// Fraction of `generated` isomorphic to at least one training graph.
pub fn recall_isomorphic(generated: &[Graph], training: &[Graph]) -> Result<f64> {
    if generated.is_empty() {
        return Err(Error::EmptyInput("no generated graphs"));
    }
    if let Some(g) = generated.iter().chain(training).find(|g| g.n() > RECALL_LIMIT) {
        return Err(Error::UnsupportedSize {
            operation: "recall_isomorphic",
            n: g.n(),
            limit: RECALL_LIMIT,
        });
    }
    let hits = generated
        .iter()
        .filter(|g| training.iter().any(|t| isomorphic(g, t)))
        .count();
    Ok(hits as f64 / generated.len() as f64)
}

/// Maximum valence per node type and bond order per edge type.
#[derive(Clone, Debug, PartialEq)]
pub struct ValenceTable {
    pub max_valence: HashMap<u8, u32>,
    /// `bond_order[t]` for edge type `t`; type 0 is "no bond".
    pub bond_order: Vec<u32>,
}

impl ValenceTable {
    /// Node types C = 0, N = 1, O = 2, F = 3, H = 4; edge types 1..=3 are
    /// single, double and triple bonds.
    pub fn organic() -> Self {
        Self {
            max_valence: [(0, 4), (1, 3), (2, 2), (3, 1), (4, 1)].into_iter().collect(),
            bond_order: vec![0, 1, 2, 3],
        }
    }
}

/// Every atom's bond-order sum is at most its maximum valence. Unknown atom or
/// bond types make the molecule invalid.
pub fn molecule_validity(g: &Graph, table: &ValenceTable) -> bool {
    (0..g.n()).all(|v| {
        let Some(&limit) = table.max_valence.get(&g.node_label(v)) else {
            return false;
        };
        let mut total = 0u32;
        for u in g.neighbors(v) {
            match table.bond_order.get(g.edge_label(u, v) as usize) {
                Some(&o) => total += o,
                None => return false,
            }
        }
        total <= limit
    })
}

/// Distinct isomorphism classes (labels included) over the number of graphs.
pub fn uniqueness(graphs: &[Graph]) -> Result<f64> {
    if graphs.is_empty() {
        return Err(Error::EmptyInput("no graphs"));
    }
    let (reps, _) = classify(graphs);
    Ok(reps.len() as f64 / graphs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::grid;

    fn star4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    #[test]
    fn triangle_clustering_is_one() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let h = clustering_hist(&g);
        assert_eq!(h.bins.len(), 100);
        assert_eq!(h.bins[99], 1.0);
    }

    #[test]
    fn star_degrees() {
        assert_eq!(degree_hist(&star4()).bins, vec![0.0, 0.75, 0.0, 0.25]);
    }

    #[test]
    fn four_cycle_orbits() {
        let counts = orbit_counts(&grid(2, 2));
        for row in &counts {
            let mut expected = [0; ORBITS];
            expected[4] = 1;
            assert_eq!(*row, expected);
        }
        assert_eq!(orbit_hist(&grid(2, 2)).bins[4], 1.0);
    }

    #[test]
    fn small_graphs_have_empty_orbit_mass() {
        assert!(orbit_hist(&Graph::from_edges(3, &[(0, 1)]).unwrap()).bins.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn mmd_closed_form_and_symmetry() {
        let p = StatHistogram { kind: StatKind::Degree, bins: vec![1.0, 0.0] };
        let q = StatHistogram { kind: StatKind::Degree, bins: vec![0.0, 1.0] };
        let v = mmd_tv(&[p.clone()], &[q.clone()], 1.0).unwrap();
        assert!((v - 2.0 * (1.0 - (-0.5f64).exp())).abs() < 1e-12);
        assert_eq!(v, mmd_tv(&[q.clone()], &[p.clone()], 1.0).unwrap());
        assert!(mmd_tv(&[p.clone(), q.clone()], &[q.clone(), p.clone()], 1.0).unwrap().abs() < 1e-12);
        let o = StatHistogram { kind: StatKind::Orbit, bins: vec![1.0] };
        assert!(matches!(mmd_tv(&[p], &[o], 1.0), Err(Error::KindMismatch(..))));
        assert!(mmd_tv(&[], &[q], 1.0).is_err());
    }

    #[test]
    fn recall_fixtures() {
        let train = vec![grid(2, 2), star4()];
        assert_eq!(recall_isomorphic(&train, &train).unwrap(), 1.0);
        assert_eq!(recall_isomorphic(&vec![Graph::empty(4); 3], &train).unwrap(), 0.0);
        let mut generated = vec![star4(); 5];
        generated.extend(vec![Graph::empty(4); 5]);
        assert_eq!(recall_isomorphic(&generated, &train).unwrap(), 0.5);
        assert!(recall_isomorphic(&[Graph::empty(21)], &train).is_err());
    }

    #[test]
    fn valence_checks() {
        let table = ValenceTable::organic();
        let methane = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)])
            .unwrap()
            .with_node_attrs(vec![0, 4, 4, 4, 4])
            .unwrap();
        assert!(molecule_validity(&methane, &table));
        let five = Graph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)])
            .unwrap()
            .with_node_attrs(vec![0, 4, 4, 4, 4, 4])
            .unwrap();
        assert!(!molecule_validity(&five, &table));
        let unknown = Graph::empty(1).with_node_attrs(vec![9]).unwrap();
        assert!(!molecule_validity(&unknown, &table));
    }

    #[test]
    fn uniqueness_counts_classes() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap().with_node_attrs(vec![0, 1, 0]).unwrap();
        let h = crate::graph::permute(&g, &crate::graph::Permutation::new(vec![2, 0, 1]).unwrap()).unwrap();
        assert_eq!(uniqueness(&[g.clone(), h]).unwrap(), 0.5);
        let k = Graph::from_edges(3, &[(0, 1)]).unwrap().with_node_attrs(vec![1, 1, 0]).unwrap();
        assert_eq!(uniqueness(&[g, k]).unwrap(), 1.0);
    }
}
