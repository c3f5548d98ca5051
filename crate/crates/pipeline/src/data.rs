//! Builds train/test graph sets from a [`DatasetSpec`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swingnn_core::datasets::{generate_community_small, generate_grid, generate_regular_toy, split, CommunityParams};
use swingnn_core::edgelist::load_edge_list;
use swingnn_core::{permute, Graph, Permutation};

use crate::config::DatasetSpec;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Dataset {
    /// Adjacency matrices the model is trained on.
    pub train: Vec<Graph>,
    /// Held-out graphs for MMD, or the unpermuted base set for recall.
    pub reference: Vec<Graph>,
    /// Side length every matrix is padded to.
    pub max_n: usize,
    /// Whether graph sizes vary, in which case generated graphs drop isolated nodes.
    pub variable_size: bool,
}

pub fn build(spec: &DatasetSpec) -> Result<Dataset> {
    let (train, reference) = match spec {
        DatasetSpec::RegularToy { permutations, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let base = generate_regular_toy(&mut rng)?;
            let n = base[0].n();
            let perms: Vec<Permutation> = (0..*permutations).map(|_| Permutation::uniform(n, &mut rng)).collect();
            let train = base
                .iter()
                .flat_map(|g| perms.iter().map(move |p| permute(g, p)))
                .collect::<swingnn_core::Result<Vec<_>>>()?;
            (train, base)
        }
        DatasetSpec::Grid {
            min_side,
            max_side,
            count,
            test_fraction,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let graphs = generate_grid(*min_side..=*max_side, *min_side..=*max_side, *count, &mut rng)?;
            split(&graphs, 1.0 - test_fraction, &mut rng)?
        }
        DatasetSpec::CommunitySmall {
            count,
            test_fraction,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let graphs = generate_community_small(*count, &mut rng, &CommunityParams::default())?;
            split(&graphs, 1.0 - test_fraction, &mut rng)?
        }
        DatasetSpec::EdgeList {
            path,
            test_fraction,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let graphs = load_edge_list(path).map_err(|e| match e {
                swingnn_core::Error::Io(source) => Error::io(path, source),
                other => other.into(),
            })?;
            split(&graphs, 1.0 - test_fraction, &mut rng)?
        }
    };
    if train.is_empty() {
        return Err(Error::Config("the training split is empty".into()));
    }
    let max_n = train.iter().chain(&reference).map(Graph::n).max().unwrap_or(0);
    let variable_size = train.iter().chain(&reference).any(|g| g.n() != max_n);
    Ok(Dataset {
        train,
        reference,
        max_n,
        variable_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use swingnn_core::iso::isomorphic;

    #[test]
    fn toy_copies_are_isomorphic_relabelings() {
        let d = build(&DatasetSpec::RegularToy { permutations: 3, seed: 0 }).unwrap();
        assert_eq!(d.train.len(), 30);
        assert_eq!(d.reference.len(), 10);
        assert_eq!(d.max_n, 16);
        assert!(!d.variable_size);
        for (i, g) in d.train.iter().enumerate() {
            assert!(isomorphic(g, &d.reference[i / 3]));
        }
        // the same seed rebuilds the same base set for every l
        let one = build(&DatasetSpec::RegularToy { permutations: 1, seed: 0 }).unwrap();
        assert_eq!(one.reference, d.reference);
    }

    #[test]
    fn grid_split_sizes() {
        let d = build(&DatasetSpec::Grid {
            min_side: 4,
            max_side: 6,
            count: 50,
            test_fraction: 0.2,
            seed: 1,
        })
        .unwrap();
        assert_eq!((d.train.len(), d.reference.len()), (40, 10));
        assert!(d.max_n <= 36 && d.max_n >= 16);
    }

    #[test]
    fn missing_edge_list_is_an_io_error() {
        let err = build(&DatasetSpec::EdgeList {
            path: "/nonexistent/graphs.txt".into(),
            test_fraction: 0.2,
            seed: 0,
        })
        .unwrap_err();
        assert_eq!(err.category(), "io");
    }
}
