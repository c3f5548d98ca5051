//! Isomorphism testing, automorphism counting and isomorphism-class enumeration.
//!
//! `isomorphic` runs individualization–refinement backtracking: both graphs are
//! colour-refined jointly (so colour ids are comparable), and whenever the
//! partition is not discrete a vertex of the smallest non-singleton class is
//! individualized against every same-coloured candidate in the other graph.
//! The search is exact; refinement only prunes.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::graph::{for_each_permutation, permute, Graph};

/// Largest graph accepted by [`isomorphic`].
pub const ISOMORPHISM_LIMIT: usize = 64;
/// Largest graph accepted by the exhaustive automorphism count.
pub const AUTOMORPHISM_LIMIT: usize = 10;
/// Largest graph accepted by [`isomorphism_class`].
pub const CLASS_LIMIT: usize = 8;

/// True iff some permutation maps `g1` onto `g2`, labels included.
///
/// Graphs above [`ISOMORPHISM_LIMIT`] nodes are still answered exactly, but
/// without any running-time guarantee.
pub fn isomorphic(g1: &Graph, g2: &Graph) -> bool {
    if g1.n() != g2.n()
        || g1.edge_count() != g2.edge_count()
        || g1.node_attrs().is_some() != g2.node_attrs().is_some()
        || g1.edge_attrs().is_some() != g2.edge_attrs().is_some()
    {
        return false;
    }
    let n = g1.n();
    if n == 0 {
        return true;
    }
    let mut d1 = g1.degrees();
    let mut d2 = g2.degrees();
    d1.sort_unstable();
    d2.sort_unstable();
    if d1 != d2 {
        return false;
    }
    let init1: Vec<u64> = (0..n).map(|v| g1.node_label(v) as u64).collect();
    let init2: Vec<u64> = (0..n).map(|v| g2.node_label(v) as u64).collect();
    let Some((c1, c2)) = refine_pair(g1, g2, init1, init2) else {
        return false;
    };
    search(g1, g2, c1, c2)
}

fn search(g1: &Graph, g2: &Graph, c1: Vec<u64>, c2: Vec<u64>) -> bool {
    let n = g1.n();
    let mut class_size: HashMap<u64, usize> = HashMap::new();
    for &c in &c1 {
        *class_size.entry(c).or_default() += 1;
    }
    // Smallest non-singleton class, ties broken by colour id.
    let target = class_size
        .iter()
        .filter(|(_, &s)| s > 1)
        .min_by_key(|(&c, &s)| (s, c))
        .map(|(&c, _)| c);
    let Some(color) = target else {
        // Discrete partition: colours define the only candidate bijection.
        let mut image = vec![0; n];
        let pos2: HashMap<u64, usize> = c2.iter().enumerate().map(|(v, &c)| (c, v)).collect();
        for (u, c) in c1.iter().enumerate() {
            image[u] = pos2[c];
        }
        return is_isomorphism(g1, g2, &image);
    };
    let fresh = c1.iter().chain(&c2).copied().max().unwrap_or(0) + 1;
    let u = c1.iter().position(|&c| c == color).expect("class is non-empty");
    for v in (0..n).filter(|&v| c2[v] == color) {
        let mut a = c1.clone();
        let mut b = c2.clone();
        a[u] = fresh;
        b[v] = fresh;
        if let Some((a, b)) = refine_pair(g1, g2, a, b) {
            if search(g1, g2, a, b) {
                return true;
            }
        }
    }
    false
}

/// Joint colour refinement. Returns `None` as soon as the colour-class
/// histograms of the two graphs disagree.
fn refine_pair(g1: &Graph, g2: &Graph, mut c1: Vec<u64>, mut c2: Vec<u64>) -> Option<(Vec<u64>, Vec<u64>)> {
    let n = g1.n();
    let mut classes = count_classes(&c1, &c2)?;
    loop {
        let mut ids: HashMap<(u64, Vec<(u64, u8)>), u64> = HashMap::new();
        let mut next = |g: &Graph, c: &[u64]| -> Vec<u64> {
            (0..n)
                .map(|v| {
                    let mut sig: Vec<(u64, u8)> = g.neighbors(v).map(|w| (c[w], g.edge_label(v, w))).collect();
                    sig.sort_unstable();
                    let k = ids.len() as u64;
                    *ids.entry((c[v], sig)).or_insert(k)
                })
                .collect()
        };
        let n1 = next(g1, &c1);
        let n2 = next(g2, &c2);
        let refined = count_classes(&n1, &n2)?;
        c1 = n1;
        c2 = n2;
        if refined == classes {
            return Some((c1, c2));
        }
        classes = refined;
    }
}

fn count_classes(c1: &[u64], c2: &[u64]) -> Option<usize> {
    let mut h: HashMap<u64, (usize, usize)> = HashMap::new();
    for &c in c1 {
        h.entry(c).or_default().0 += 1;
    }
    for &c in c2 {
        h.entry(c).or_default().1 += 1;
    }
    h.values().all(|(a, b)| a == b).then_some(h.len())
}

fn is_isomorphism(g1: &Graph, g2: &Graph, image: &[usize]) -> bool {
    let n = g1.n();
    (0..n).all(|u| g1.node_label(u) == g2.node_label(image[u]))
        && (0..n).all(|u| (0..n).all(|v| g1.edge_label(u, v) == g2.edge_label(image[u], image[v])))
}

/// Number of permutations fixing `g` (labels included), by exhaustive
/// enumeration of S_n with prefix pruning.
pub fn automorphism_count(g: &Graph) -> Result<u64> {
    let n = g.n();
    if n > AUTOMORPHISM_LIMIT {
        return Err(Error::UnsupportedSize {
            operation: "automorphism_count",
            n,
            limit: AUTOMORPHISM_LIMIT,
        });
    }
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    Ok(count_extensions(g, 0, &mut image, &mut used))
}

fn count_extensions(g: &Graph, depth: usize, image: &mut [usize], used: &mut [bool]) -> u64 {
    let n = g.n();
    if depth == n {
        return 1;
    }
    let mut total = 0;
    for cand in 0..n {
        if used[cand] || g.node_label(depth) != g.node_label(cand) {
            continue;
        }
        let consistent = (0..depth).all(|prev| g.edge_label(depth, prev) == g.edge_label(cand, image[prev]));
        if consistent {
            image[depth] = cand;
            used[cand] = true;
            total += count_extensions(g, depth + 1, image, used);
            used[cand] = false;
        }
    }
    total
}

/// All distinct matrices `P·A·Pᵀ`, sorted.
pub fn isomorphism_class(g: &Graph) -> Result<Vec<Graph>> {
    let n = g.n();
    if n > CLASS_LIMIT {
        return Err(Error::UnsupportedSize {
            operation: "isomorphism_class",
            n,
            limit: CLASS_LIMIT,
        });
    }
    let mut class = BTreeSet::new();
    for_each_permutation(n, |p| {
        class.insert(permute(g, p).expect("sizes agree"));
    });
    Ok(class.into_iter().collect())
}

/// Groups graphs into isomorphism classes. Returns, for each input, the index
/// of its class representative in the returned list.
pub fn classify(graphs: &[Graph]) -> (Vec<Graph>, Vec<usize>) {
    let mut reps: Vec<Graph> = Vec::new();
    let mut labels = Vec::with_capacity(graphs.len());
    for g in graphs {
        match reps.iter().position(|r| isomorphic(r, g)) {
            Some(k) => labels.push(k),
            None => {
                labels.push(reps.len());
                reps.push(g.clone());
            }
        }
    }
    (reps, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{factorial, Permutation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_bool(p) {
                    g.add_edge(u, v).unwrap();
                }
            }
        }
        g
    }

    /// Reference: try every permutation.
    fn brute_isomorphic(g1: &Graph, g2: &Graph) -> bool {
        if g1.n() != g2.n() {
            return false;
        }
        let mut found = false;
        for_each_permutation(g1.n(), |p| {
            if !found && &permute(g1, p).unwrap() == g2 {
                found = true;
            }
        });
        found
    }

    fn brute_automorphisms(g: &Graph) -> u64 {
        let mut count = 0;
        for_each_permutation(g.n(), |p| {
            if &permute(g, p).unwrap() == g {
                count += 1;
            }
        });
        count
    }

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn the_three_path_matrices_are_isomorphic() {
        let class = isomorphism_class(&path3()).unwrap();
        assert_eq!(class.len(), 3);
        for a in &class {
            for b in &class {
                assert!(isomorphic(a, b));
            }
        }
    }

    #[test]
    fn cycle_and_path_on_four_nodes_differ() {
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let p4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(!brute_isomorphic(&c4, &p4));
        assert!(!isomorphic(&c4, &p4));
        assert!(isomorphic(&c4, &c4));
    }

    #[test]
    fn unequal_sizes_are_not_isomorphic() {
        assert!(!isomorphic(&Graph::empty(3), &Graph::empty(4)));
    }

    #[test]
    fn automorphism_counts() {
        assert_eq!(automorphism_count(&Graph::empty(3)).unwrap(), 6);
        assert_eq!(automorphism_count(&path3()).unwrap(), brute_automorphisms(&path3()));
        assert_eq!(automorphism_count(&path3()).unwrap(), 2);
        let single = Graph::from_edges(4, &[(0, 1)]).unwrap();
        assert_eq!(brute_automorphisms(&single), 4);
        assert_eq!(automorphism_count(&single).unwrap(), 4);
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(automorphism_count(&star).unwrap(), 6);
    }

    #[test]
    fn oversized_inputs_are_rejected() {
        assert!(matches!(
            automorphism_count(&Graph::empty(11)),
            Err(Error::UnsupportedSize { limit: 10, .. })
        ));
        assert!(isomorphism_class(&Graph::empty(9)).is_err());
    }

    #[test]
    fn class_sizes() {
        assert_eq!(isomorphism_class(&Graph::empty(5)).unwrap().len(), 1);
        let single = Graph::from_edges(4, &[(0, 1)]).unwrap();
        assert_eq!(isomorphism_class(&single).unwrap().len(), 6);
    }

    #[test]
    fn orbit_stabilizer_holds_exhaustively() {
        // every graph on up to 5 nodes, plus random graphs on 6
        for n in 1..=5usize {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
            for mask in 0u32..(1 << pairs.len()) {
                let edges: Vec<_> = pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e).collect();
                let g = Graph::from_edges(n, &edges).unwrap();
                let orbit = isomorphism_class(&g).unwrap().len() as u64;
                assert_eq!(orbit * automorphism_count(&g).unwrap(), factorial(n));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let g = random_graph(6, 0.4, &mut rng);
            let orbit = isomorphism_class(&g).unwrap().len() as u64;
            assert_eq!(orbit * automorphism_count(&g).unwrap(), 720);
        }
    }

    #[test]
    fn agrees_with_brute_force_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.random_range(1..=6);
            let a = random_graph(n, 0.5, &mut rng);
            let b = if rng.random_bool(0.5) {
                permute(&a, &Permutation::uniform(n, &mut rng)).unwrap()
            } else {
                random_graph(n, 0.5, &mut rng)
            };
            assert_eq!(isomorphic(&a, &b), brute_isomorphic(&a, &b), "{a:?} {b:?}");
        }
    }

    #[test]
    fn regular_graphs_with_equal_degrees() {
        // C6 vs two disjoint triangles: both 2-regular, refinement alone cannot separate them
        let c6 = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
        let tt = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        assert!(!isomorphic(&c6, &tt));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shuffled = permute(&c6, &Permutation::uniform(6, &mut rng)).unwrap();
        assert!(isomorphic(&c6, &shuffled));
    }

    #[test]
    fn large_permuted_graphs_are_recognised() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [20usize, 40, 64] {
            let g = random_graph(n, 0.2, &mut rng);
            let h = permute(&g, &Permutation::uniform(n, &mut rng)).unwrap();
            assert!(isomorphic(&g, &h));
            let mut k = h.clone();
            let (u, v) = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .find(|&(u, v)| !k.has_edge(u, v))
                .unwrap();
            k.add_edge(u, v).unwrap();
            assert!(!isomorphic(&g, &k));
        }
    }

    #[test]
    fn labels_must_match() {
        let a = Graph::from_edges(2, &[(0, 1)]).unwrap().with_node_attrs(vec![1, 2]).unwrap();
        let b = Graph::from_edges(2, &[(0, 1)]).unwrap().with_node_attrs(vec![2, 1]).unwrap();
        let c = Graph::from_edges(2, &[(0, 1)]).unwrap().with_node_attrs(vec![2, 2]).unwrap();
        assert!(isomorphic(&a, &b));
        assert!(!isomorphic(&a, &c));
        let e1 = Graph::from_edge_labels(3, vec![0, 1, 0, 1, 0, 2, 0, 2, 0]).unwrap();
        let e2 = Graph::from_edge_labels(3, vec![0, 2, 0, 2, 0, 1, 0, 1, 0]).unwrap();
        let e3 = Graph::from_edge_labels(3, vec![0, 2, 0, 2, 0, 2, 0, 2, 0]).unwrap();
        assert!(isomorphic(&e1, &e2));
        assert!(!isomorphic(&e1, &e3));
    }

    #[test]
    fn classify_groups_isomorphic_graphs() {
        let p = path3();
        let q = permute(&p, &Permutation::new(vec![1, 0, 2]).unwrap()).unwrap();
        let (reps, labels) = classify(&[p, Graph::empty(3), q]);
        assert_eq!(reps.len(), 2);
        assert_eq!(labels, vec![0, 1, 0]);
    }
}
