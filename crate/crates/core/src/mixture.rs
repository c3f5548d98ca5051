//! Finite mixtures of Dirac deltas and total-variation arithmetic.

use std::fmt::Debug;
use std::hash::Hash;

use indexmap::IndexMap;
use num::{BigInt, BigRational, One, Signed};

use crate::error::{Error, Result};

/// Probability weights: exact rationals or floats.
pub trait Weight: Clone + Debug + PartialOrd + Signed + num::Num {
    fn ratio(num: u64, den: u64) -> Self;
    /// Whether `self` equals one (exactly for rationals, within 1e-12 for floats).
    fn is_unit(&self) -> bool;
    fn to_f64(&self) -> f64;
}

impl Weight for BigRational {
    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn is_unit(&self) -> bool {
        self.is_one()
    }

    fn to_f64(&self) -> f64 {
        num::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Weight for f64 {
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn is_unit(&self) -> bool {
        (self - 1.0).abs() <= 1e-12
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// A weighted finite set of atoms. Atoms are unique; weights are positive
/// and sum to one. Iteration follows insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracMixture<A: Eq + Hash, W = BigRational> {
    atoms: IndexMap<A, W>,
}

impl<A: Eq + Hash + Clone, W: Weight> DiracMixture<A, W> {
    /// Builds a mixture from `(atom, weight)` pairs, merging duplicates and
    /// dropping zero weights.
    pub fn new(entries: impl IntoIterator<Item = (A, W)>) -> Result<Self> {
        let mut atoms: IndexMap<A, W> = IndexMap::new();
        for (a, w) in entries {
            if w.is_negative() {
                return Err(Error::InvalidArgument(format!("negative weight {w:?}")));
            }
            let slot = atoms.entry(a).or_insert_with(W::zero);
            *slot = slot.clone() + w;
        }
        atoms.retain(|_, w| !w.is_zero());
        if atoms.is_empty() {
            return Err(Error::EmptyInput("mixture has no atoms"));
        }
        let total = atoms.values().fold(W::zero(), |acc, w| acc + w.clone());
        if !total.is_unit() {
            return Err(Error::InvalidArgument(format!("weights sum to {total:?}, not 1")));
        }
        Ok(Self { atoms })
    }

    /// Uniform mixture over the distinct items of `atoms`.
    pub fn uniform(atoms: impl IntoIterator<Item = A>) -> Result<Self> {
        let mut distinct: IndexMap<A, ()> = IndexMap::new();
        for a in atoms {
            distinct.insert(a, ());
        }
        let k = distinct.len() as u64;
        if k == 0 {
            return Err(Error::EmptyInput("mixture has no atoms"));
        }
        Self::new(distinct.into_keys().map(|a| (a, W::ratio(1, k))))
    }

    /// Equal weight per *occurrence*; repeated items accumulate weight.
    pub fn empirical(items: impl IntoIterator<Item = A>) -> Result<Self> {
        let items: Vec<A> = items.into_iter().collect();
        let k = items.len() as u64;
        if k == 0 {
            return Err(Error::EmptyInput("mixture has no atoms"));
        }
        Self::new(items.into_iter().map(|a| (a, W::ratio(1, k))))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Probability of `atom` (zero outside the support).
    pub fn prob(&self, atom: &A) -> W {
        self.atoms.get(atom).cloned().unwrap_or_else(W::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&A, &W)> {
        self.atoms.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &A> {
        self.atoms.keys()
    }

    /// Whether both mixtures assign the same weight to every atom.
    pub fn same_distribution(&self, other: &Self) -> bool {
        self.len() == other.len() && self.atoms.iter().all(|(a, w)| other.prob(a) == *w)
    }
}

/// Normalization of the total-variation sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TvConvention {
    /// `Σ|p − q|`, ranging over `[0, 2]`.
    #[default]
    Unhalved,
    /// `½ Σ|p − q|`, ranging over `[0, 1]`.
    Halved,
}

/// Total variation between two mixtures over the union of their supports.
pub fn total_variation<A: Eq + Hash + Clone, W: Weight>(
    p: &DiracMixture<A, W>,
    q: &DiracMixture<A, W>,
    convention: TvConvention,
) -> W {
    let mut sum = W::zero();
    for (a, w) in p.iter() {
        sum = sum + (w.clone() - q.prob(a)).abs();
    }
    for (a, w) in q.iter() {
        if p.prob(a).is_zero() {
            sum = sum + w.clone();
        }
    }
    match convention {
        TvConvention::Unhalved => sum,
        TvConvention::Halved => sum / (W::one() + W::one()),
    }
}
