//! Exact permutation-symmetry constructions over distributions of adjacency
//! matrices: l-permuted empirical distributions, the closest permutation
//! invariant uniform distribution, and the distribution induced by applying a
//! uniformly random permutation to samples.

use std::collections::HashMap;

use indexmap::IndexMap;
use num::{BigRational, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{factorial, for_each_permutation, permute, Graph, Permutation};
use crate::iso::{automorphism_count, isomorphism_class};
use crate::mixture::{total_variation, DiracMixture, TvConvention, Weight};

/// Largest n for which the exact constructions enumerate S_n.
pub const EXACT_LIMIT: usize = 6;

fn check_size(operation: &'static str, n: usize) -> Result<()> {
    if n > EXACT_LIMIT {
        return Err(Error::UnsupportedSize {
            operation,
            n,
            limit: EXACT_LIMIT,
        });
    }
    Ok(())
}

fn common_size(graphs: &[Graph]) -> Result<usize> {
    let n = graphs.first().ok_or(Error::EmptyInput("no graphs"))?.n();
    if let Some(g) = graphs.iter().find(|g| g.n() != n) {
        return Err(Error::SizeMismatch { expected: n, found: g.n() });
    }
    Ok(n)
}

/// Uniform mixture over `{P_j A_i P_jᵀ}`, each pair weighted `1/(m·l)`;
/// coinciding matrices (automorphisms) merge their weight.
pub fn l_permuted_distribution(train: &[Graph], perms: &[Permutation]) -> Result<DiracMixture<Graph>> {
    let n = common_size(train)?;
    if perms.is_empty() {
        return Err(Error::EmptyInput("no permutations"));
    }
    for (k, p) in perms.iter().enumerate() {
        if p.len() != n {
            return Err(Error::SizeMismatch { expected: n, found: p.len() });
        }
        if perms[..k].contains(p) {
            return Err(Error::InvalidArgument(format!("permutation {k} is repeated")));
        }
    }
    let mut items = Vec::with_capacity(train.len() * perms.len());
    for g in train {
        for p in perms {
            items.push(permute(g, p)?);
        }
    }
    DiracMixture::empirical(items)
}

/// The closest invariant distribution among those uniform on a superset of the
/// training matrices, together with its distance to the empirical distribution.
#[derive(Clone, Debug)]
pub struct ClosestInvariant {
    pub p_data: DiracMixture<Graph>,
    pub p_star: DiracMixture<Graph>,
    /// Number of distinct training matrices.
    pub m: usize,
    /// Size of the union of their isomorphism classes.
    pub l: usize,
    /// `TV(p*, p_data)` evaluated atom by atom (unhalved).
    pub tv: BigRational,
    /// The closed form `2(1 − m/l)`.
    pub tv_formula: BigRational,
}

pub fn closest_invariant_uniform(train: &[Graph]) -> Result<ClosestInvariant> {
    let n = common_size(train)?;
    check_size("closest_invariant_uniform", n)?;
    let p_data = DiracMixture::empirical(train.iter().cloned())?;
    let mut union: IndexMap<Graph, ()> = IndexMap::new();
    for g in train {
        for h in isomorphism_class(g)? {
            union.insert(h, ());
        }
    }
    let p_star = DiracMixture::uniform(union.into_keys())?;
    let m = p_data.len();
    let l = p_star.len();
    let tv = total_variation(&p_star, &p_data, TvConvention::Unhalved);
    let two = BigRational::from_integer(2.into());
    let tv_formula = two * (BigRational::from_integer(1.into()) - BigRational::ratio(m as u64, l as u64));
    Ok(ClosestInvariant {
        p_data,
        p_star,
        m,
        l,
        tv,
        tv_formula,
    })
}

/// Every graph on `n` nodes, grouped into isomorphism classes.
pub fn all_classes(n: usize) -> Result<Vec<Vec<Graph>>> {
    if n > 5 {
        return Err(Error::UnsupportedSize {
            operation: "all_classes",
            n,
            limit: 5,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
    let mut seen: HashMap<Graph, usize> = HashMap::new();
    let mut classes: Vec<Vec<Graph>> = Vec::new();
    for mask in 0u64..(1 << pairs.len()) {
        let edges: Vec<_> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        let g = Graph::from_edges(n, &edges)?;
        if seen.contains_key(&g) {
            continue;
        }
        let class = isomorphism_class(&g)?;
        for h in &class {
            seen.insert(h.clone(), classes.len());
        }
        classes.push(class);
    }
    Ok(classes)
}

/// Result of the exhaustive search over uniform invariant distributions whose
/// support contains the training set.
#[derive(Clone, Debug)]
pub struct UniformSearch {
    pub candidates: usize,
    pub min_tv: BigRational,
    /// Number of candidate supports attaining the minimum.
    pub minimizers: usize,
    /// Support size of the (first) minimizer.
    pub argmin_support: usize,
}

/// Brute-force minimization of `TV(q, p_data)` over every invariant `q` that
/// is uniform on a union of isomorphism classes covering the training set.
pub fn search_uniform_invariant(train: &[Graph]) -> Result<UniformSearch> {
    let n = common_size(train)?;
    let classes = all_classes(n)?;
    let p_data: DiracMixture<Graph> = DiracMixture::empirical(train.iter().cloned())?;
    let required: Vec<usize> = classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.iter().any(|g| !p_data.prob(g).is_zero()))
        .map(|(k, _)| k)
        .collect();
    let optional: Vec<usize> = (0..classes.len()).filter(|k| !required.contains(k)).collect();
    let mut best: Option<(BigRational, usize, usize)> = None;
    let mut candidates = 0;
    for mask in 0u64..(1 << optional.len()) {
        candidates += 1;
        let chosen = required
            .iter()
            .copied()
            .chain(optional.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &k)| k));
        let support: Vec<Graph> = chosen.flat_map(|k| classes[k].iter().cloned()).collect();
        let size = support.len();
        let q = DiracMixture::uniform(support)?;
        let tv = total_variation(&q, &p_data, TvConvention::Unhalved);
        best = match best {
            None => Some((tv, 1, size)),
            Some((b, count, s)) if tv < b => {
                let _ = (count, s);
                Some((tv, 1, size))
            }
            Some((b, count, s)) if tv == b => Some((b, count + 1, s)),
            keep => keep,
        };
    }
    let (min_tv, minimizers, argmin_support) = best.expect("at least one candidate");
    Ok(UniformSearch {
        candidates,
        min_tv,
        minimizers,
        argmin_support,
    })
}

/// Exact law of `P_r·A·P_rᵀ` with `A ~ base` and `P_r` uniform on S_n,
/// by enumeration of S_n.
pub fn permuted_sampler_distribution<W: Weight>(base: &DiracMixture<Graph, W>) -> Result<DiracMixture<Graph, W>> {
    let n = base_size(base)?;
    check_size("permuted_sampler_distribution", n)?;
    let nf = factorial(n);
    let mut out: Vec<(Graph, W)> = Vec::new();
    for (a, p) in base.iter() {
        let share = p.clone() * W::ratio(1, nf);
        for_each_permutation(n, |perm| {
            out.push((permute(a, perm).expect("sizes agree"), share.clone()));
        });
    }
    DiracMixture::new(out)
}

/// Closed form `q(A_r) = Aut(A_r)/n! · Σ_{A ∈ C(I_{A_r})} p(A)`, evaluated
/// class by class.
pub fn permuted_sampler_closed_form<W: Weight>(base: &DiracMixture<Graph, W>) -> Result<DiracMixture<Graph, W>> {
    let n = base_size(base)?;
    check_size("permuted_sampler_closed_form", n)?;
    let nf = factorial(n);
    // class members -> accumulated base mass of atoms in that class
    let mut classes: Vec<(Vec<Graph>, W)> = Vec::new();
    let mut index: HashMap<Graph, usize> = HashMap::new();
    for (a, p) in base.iter() {
        match index.get(a) {
            Some(&k) => classes[k].1 = classes[k].1.clone() + p.clone(),
            None => {
                let class = isomorphism_class(a)?;
                for g in &class {
                    index.insert(g.clone(), classes.len());
                }
                classes.push((class, p.clone()));
            }
        }
    }
    let mut out = Vec::new();
    for (class, mass) in classes {
        let aut = automorphism_count(&class[0])?;
        let coeff = W::ratio(aut, nf) * mass;
        out.extend(class.into_iter().map(|g| (g, coeff.clone())));
    }
    DiracMixture::new(out)
}

fn base_size<W: Weight>(base: &DiracMixture<Graph, W>) -> Result<usize> {
    let graphs: Vec<Graph> = base.support().cloned().collect();
    common_size(&graphs)
}

/// Whether `q(A) = q(P·A·Pᵀ)` for every atom and every `P ∈ S_n`.
pub fn is_permutation_invariant<W: Weight>(q: &DiracMixture<Graph, W>) -> Result<bool> {
    let n = base_size(q)?;
    check_size("is_permutation_invariant", n)?;
    let mut ok = true;
    for (a, w) in q.iter() {
        for_each_permutation(n, |p| {
            if ok && q.prob(&permute(a, p).expect("sizes agree")) != *w {
                ok = false;
            }
        });
        if !ok {
            break;
        }
    }
    Ok(ok)
}

/// Monte Carlo version of the sampling trick: draw `A ~ base`, then permute it
/// uniformly at random. Returns the empirical counts per matrix.
pub fn sample_permuted<W: Weight, R: Rng + ?Sized>(
    base: &DiracMixture<Graph, W>,
    draws: usize,
    rng: &mut R,
) -> HashMap<Graph, u64> {
    let atoms: Vec<(&Graph, f64)> = base.iter().map(|(a, w)| (a, w.to_f64())).collect();
    let mut counts = HashMap::new();
    for _ in 0..draws {
        let mut u: f64 = rng.random();
        let mut pick = atoms[atoms.len() - 1].0;
        for &(a, w) in &atoms {
            if u < w {
                pick = a;
                break;
            }
            u -= w;
        }
        let p = Permutation::uniform(pick.n(), rng);
        *counts.entry(permute(pick, &p).expect("sizes agree")).or_insert(0) += 1;
    }
    counts
}

/// A random base distribution: up to `atoms` random graphs on `n` nodes with
/// integer weights in `1..=20`, normalized exactly.
pub fn random_base<R: Rng + ?Sized>(n: usize, atoms: usize, rng: &mut R) -> Result<DiracMixture<Graph>> {
    let mut entries = Vec::with_capacity(atoms);
    let mut total = 0u64;
    for _ in 0..atoms.max(1) {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_bool(0.5) {
                    g.add_edge(u, v)?;
                }
            }
        }
        let w: u64 = rng.random_range(1..=20);
        total += w;
        entries.push((g, w));
    }
    DiracMixture::new(entries.into_iter().map(|(g, w)| (g, BigRational::ratio(w, total))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::rational;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn all_perms(n: usize) -> Vec<Permutation> {
        let mut v = Vec::new();
        for_each_permutation(n, |p| v.push(p.clone()));
        v
    }

    #[test]
    fn one_identity_permutation_gives_p_data() {
        let train = vec![path3(), Graph::empty(3)];
        let d = l_permuted_distribution(&train, &[Permutation::identity(3)]).unwrap();
        let p_data = DiracMixture::empirical(train).unwrap();
        assert!(d.same_distribution(&p_data));
    }

    #[test]
    fn all_permutations_of_a_path_give_thirds() {
        let d = l_permuted_distribution(&[path3()], &all_perms(3)).unwrap();
        assert_eq!(d.len(), 3);
        assert!(d.iter().all(|(_, w)| *w == rational(1, 3)));
    }

    #[test]
    fn empty_graph_collapses_to_one_atom() {
        let d = l_permuted_distribution(&[Graph::empty(4)], &all_perms(4)[..5]).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.prob(&Graph::empty(4)), rational(1, 1));
    }

    #[test]
    fn repeated_permutations_are_rejected() {
        let p = Permutation::identity(3);
        assert!(l_permuted_distribution(&[path3()], &[p.clone(), p]).is_err());
        assert!(l_permuted_distribution(&[], &[Permutation::identity(3)]).is_err());
    }

    #[test]
    fn closest_invariant_for_a_path() {
        let c = closest_invariant_uniform(&[path3()]).unwrap();
        assert_eq!(c.l, 3);
        assert_eq!(c.tv, rational(4, 3));
        assert_eq!(c.tv_formula, rational(4, 3));
    }

    #[test]
    fn closest_invariant_for_empty_graph() {
        let c = closest_invariant_uniform(&[Graph::empty(4)]).unwrap();
        assert!(c.tv.is_zero());
    }

    #[test]
    fn p_star_minimizes_over_uniform_supersets() {
        let a = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let b = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let c = closest_invariant_uniform(&[a.clone(), b.clone()]).unwrap();
        let s = search_uniform_invariant(&[a, b]).unwrap();
        assert_eq!(s.candidates, 1 << 9);
        assert_eq!(s.min_tv, c.tv);
        assert_eq!(s.minimizers, 1);
        assert_eq!(s.argmin_support, c.l);
    }

    #[test]
    fn eleven_classes_on_four_nodes() {
        let classes = all_classes(4).unwrap();
        assert_eq!(classes.len(), 11);
        assert_eq!(classes.iter().map(Vec::len).sum::<usize>(), 64);
    }

    #[test]
    fn point_mass_on_a_path_spreads_uniformly() {
        let base: DiracMixture<Graph> = DiracMixture::uniform([path3()]).unwrap();
        let q = permuted_sampler_distribution(&base).unwrap();
        assert_eq!(q.len(), 3);
        assert!(q.iter().all(|(_, w)| *w == rational(1, 3)));
        assert!(q.same_distribution(&permuted_sampler_closed_form(&base).unwrap()));
    }

    #[test]
    fn invariant_base_is_a_fixed_point() {
        let base: DiracMixture<Graph> = DiracMixture::uniform(isomorphism_class(&path3()).unwrap()).unwrap();
        let q = permuted_sampler_distribution(&base).unwrap();
        assert!(q.same_distribution(&base));
        assert!(permuted_sampler_distribution(&q).unwrap().same_distribution(&q));
    }

    #[test]
    fn uneven_weights_inside_one_class_become_uniform() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let h = permute(&g, &Permutation::new(vec![1, 0, 2, 3]).unwrap()).unwrap();
        let base = DiracMixture::new([(g.clone(), rational(7, 10)), (h, rational(3, 10))]).unwrap();
        let q = permuted_sampler_distribution(&base).unwrap();
        let class = isomorphism_class(&g).unwrap();
        assert_eq!(q.len(), class.len());
        let expected = rational(1, class.len() as i64);
        assert!(q.iter().all(|(_, w)| *w == expected));
        assert!(is_permutation_invariant(&q).unwrap());
        assert!(!is_permutation_invariant(&base).unwrap());
    }
}
