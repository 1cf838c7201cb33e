use std::collections::BTreeSet;

use super::{count, descendant_range, word_at, Cylinder, MarkovMeasure};
use crate::error::{Error, Result};
use crate::group::Alphabet;
use crate::scalar::Scalar;

/// A union of rectangles [u]×[v] of ∂F_k², with u and v of a common depth.
///
/// Sets at the same depth support exact union, intersection and difference
/// on their index pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSet {
    alphabet: Alphabet,
    depth: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl GridSet {
    pub fn empty(alphabet: Alphabet, depth: usize) -> Self {
        Self {
            alphabet,
            depth,
            pairs: BTreeSet::new(),
        }
    }

    pub fn full(alphabet: Alphabet, depth: usize) -> Self {
        let n = count(&alphabet, depth);
        Self {
            alphabet,
            depth,
            pairs: (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect(),
        }
    }

    /// [u]×[v] refined to the grid; both stems must fit the depth.
    pub fn rectangle(alphabet: Alphabet, depth: usize, u: &Cylinder, v: &Cylinder) -> Result<Self> {
        let deeper = u.depth().max(v.depth());
        if deeper > depth {
            return Err(Error::InsufficientDepth { needed: deeper, got: depth });
        }
        let ru = descendant_range(&alphabet, u.depth(), u.index(&alphabet), depth);
        let rv = descendant_range(&alphabet, v.depth(), v.index(&alphabet), depth);
        Ok(Self {
            alphabet,
            depth,
            pairs: ru.flat_map(|i| rv.clone().map(move |j| (i, j))).collect(),
        })
    }

    pub fn from_pairs(alphabet: Alphabet, depth: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            alphabet,
            depth,
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: (usize, usize)) -> bool {
        self.pairs.contains(&pair)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn cells(&self) -> impl Iterator<Item = (Cylinder, Cylinder)> + '_ {
        self.iter().map(|(i, j)| {
            (
                Cylinder::new(word_at(&self.alphabet, self.depth, i)),
                Cylinder::new(word_at(&self.alphabet, self.depth, j)),
            )
        })
    }

    fn check(&self, other: &GridSet) {
        assert_eq!(self.depth, other.depth, "grid sets of different depths");
    }

    pub fn union(&self, other: &GridSet) -> GridSet {
        self.check(other);
        Self::from_pairs(self.alphabet, self.depth, self.pairs.union(&other.pairs).copied())
    }

    pub fn intersection(&self, other: &GridSet) -> GridSet {
        self.check(other);
        Self::from_pairs(self.alphabet, self.depth, self.pairs.intersection(&other.pairs).copied())
    }

    pub fn difference(&self, other: &GridSet) -> GridSet {
        self.check(other);
        Self::from_pairs(self.alphabet, self.depth, self.pairs.difference(&other.pairs).copied())
    }

    pub fn is_disjoint(&self, other: &GridSet) -> bool {
        self.check(other);
        self.pairs.is_disjoint(&other.pairs)
    }

    /// μ×μ of the set.
    pub fn product_mass<S: Scalar>(&self, mu: &MarkovMeasure<S>) -> S {
        let m = mu.masses(self.depth);
        self.iter().fold(S::zero(), |a, (i, j)| a + m[i].clone() * m[j].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::ps_measure;
    use crate::exact::QuadSurd;
    use num_traits::One;
    use crate::metric::Metric;

    #[test]
    fn set_algebra() {
        let a = Alphabet::new(2).unwrap();
        let c = |s: &str| Cylinder::new(s.parse().unwrap());
        let r1 = GridSet::rectangle(a, 2, &c("a"), &c("b")).unwrap();
        let r2 = GridSet::rectangle(a, 2, &c("ab"), &Cylinder::full()).unwrap();
        assert_eq!(r1.len(), 9);
        assert_eq!(r2.len(), 12);
        let both = r1.intersection(&r2);
        assert_eq!(both, GridSet::rectangle(a, 2, &c("ab"), &c("b")).unwrap());
        assert_eq!(r1.difference(&r2).len(), 6);
        assert_eq!(r1.union(&r2).len(), 9 + 12 - 3);
        assert!(r1.difference(&r2).is_disjoint(&r2));
        assert!(GridSet::rectangle(a, 1, &c("ab"), &c("a")).is_err());
        let mu = ps_measure::<QuadSurd>(&Metric::standard(2).unwrap()).unwrap();
        assert_eq!(GridSet::full(a, 2).product_mass(&mu), QuadSurd::one());
        assert_eq!(r1.product_mass(&mu), QuadSurd::rational(1, 16));
    }
}
