//! Measures on the boundary of F_k, evaluated on cylinders.

mod grid;
mod leaves;
mod measure;
mod square;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::group::{Alphabet, BoundaryPoint, Letter, Ray, ReducedWord};

pub use grid::GridSet;
pub use leaves::{leaves, Leaf};
pub use measure::{ps_measure, AhlforsReport, MarkovMeasure, QuasiConformalReport};
pub use square::{almost_invariance_report, AlmostInvarianceReport, AlmostInvarianceRow};

/// The set of boundary points extending `stem`. The empty stem is the whole boundary.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cylinder {
    stem: ReducedWord,
}

impl Cylinder {
    pub fn new(stem: ReducedWord) -> Self {
        Self { stem }
    }

    pub fn full() -> Self {
        Self::new(ReducedWord::identity())
    }

    pub fn stem(&self) -> &ReducedWord {
        &self.stem
    }

    pub fn depth(&self) -> usize {
        self.stem.len()
    }

    pub fn contains_point(&self, xi: &BoundaryPoint) -> bool {
        self.stem.letters().iter().enumerate().all(|(i, &l)| xi.letter(i) == l)
    }

    /// Whether `other ⊆ self`.
    pub fn contains(&self, other: &Cylinder) -> bool {
        self.stem.is_prefix_of(&other.stem)
    }

    /// Cylinders are nested or disjoint, so the intersection is the deeper one or empty.
    pub fn intersection(&self, other: &Cylinder) -> Option<Cylinder> {
        if self.contains(other) {
            Some(other.clone())
        } else if other.contains(self) {
            Some(self.clone())
        } else {
            None
        }
    }

    pub fn intersects(&self, other: &Cylinder) -> bool {
        self.contains(other) || other.contains(self)
    }

    pub fn children(&self, alphabet: &Alphabet) -> Vec<Cylinder> {
        alphabet
            .successors(self.stem.last())
            .map(|t| Cylinder::new(self.stem.extended(t).expect("successor extends")))
            .collect()
    }

    /// Index among the cylinders of the same depth, see [`index_of`].
    pub fn index(&self, alphabet: &Alphabet) -> usize {
        index_of(alphabet, self.stem.letters())
    }
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.stem)
    }
}

impl fmt::Debug for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Number of cylinders of the given depth.
pub fn count(alphabet: &Alphabet, depth: usize) -> usize {
    if depth == 0 {
        1
    } else {
        alphabet.size() * alphabet.branching().pow(depth as u32 - 1)
    }
}

/// Lexicographic index of a cylinder among those of its depth.
///
/// The first letter contributes its code times q^{n−1} and each later letter
/// its rank among the successors of its predecessor, q = 2k − 1. Children of
/// index i are then i·q + r, and the descendants of a cylinder at any fixed
/// depth form a contiguous range.
pub fn index_of(alphabet: &Alphabet, stem: &[Letter]) -> usize {
    let q = alphabet.branching();
    let Some((&first, rest)) = stem.split_first() else {
        return 0;
    };
    let mut idx = first.code();
    let mut prev = first;
    for &l in rest {
        idx = idx * q + alphabet.successor_rank(prev, l);
        prev = l;
    }
    idx
}

/// Index of the first `depth` letters of a ray.
pub fn ray_index<X: Ray + ?Sized>(alphabet: &Alphabet, x: &X, depth: usize) -> usize {
    let letters: Vec<Letter> = (0..depth).map(|i| x.letter_at(i).expect("ray long enough")).collect();
    index_of(alphabet, &letters)
}

/// Inverse of [`index_of`].
pub fn word_at(alphabet: &Alphabet, depth: usize, idx: usize) -> ReducedWord {
    if depth == 0 {
        return ReducedWord::identity();
    }
    let q = alphabet.branching();
    let mut digits = Vec::with_capacity(depth);
    let mut rest = idx;
    for _ in 1..depth {
        digits.push(rest % q);
        rest /= q;
    }
    let mut prev = Letter::from_code(rest);
    let mut letters = vec![prev];
    for &r in digits.iter().rev() {
        prev = alphabet.successor_at(prev, r);
        letters.push(prev);
    }
    ReducedWord::from_vec_unchecked(letters)
}

/// Indices at `target` depth of the descendants of cylinder `idx` at `depth`.
pub fn descendant_range(alphabet: &Alphabet, depth: usize, idx: usize, target: usize) -> Range<usize> {
    assert!(target >= depth, "descendants live below the cylinder");
    if depth == 0 {
        return 0..count(alphabet, target);
    }
    let span = alphabet.branching().pow((target - depth) as u32);
    idx * span..(idx + 1) * span
}

/// Index at `target` depth of the ancestor of cylinder `idx` at `depth`.
pub fn ancestor(alphabet: &Alphabet, depth: usize, idx: usize, target: usize) -> usize {
    assert!(target <= depth, "ancestors live above the cylinder");
    if target == 0 {
        return 0;
    }
    idx / alphabet.branching().pow((depth - target) as u32)
}

/// All cylinders of a depth, in index order.
pub fn cylinders(alphabet: &Alphabet, depth: usize) -> Vec<Cylinder> {
    (0..count(alphabet, depth)).map(|i| Cylinder::new(word_at(alphabet, depth, i))).collect()
}
