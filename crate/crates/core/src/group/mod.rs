//! Exact combinatorics of the free group F_k.
//!
//! Letters are generators `a, b, c, …` and their inverses `A, B, C, …`. The
//! total order used for every tie-break is `a < A < b < B < …`.

mod enumerate;
mod point;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use enumerate::{ball, count_ball, count_sphere, cyclic_cores, sphere, DEFAULT_ENUMERATION_CAP};
pub use point::{common_prefix_len, hat, hat_inverse, BoundaryPoint, Ray};

/// A generator (even code) or its inverse (odd code).
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(u8);

impl Letter {
    pub fn generator(i: usize) -> Self {
        Letter((2 * i) as u8)
    }

    pub fn from_code(code: usize) -> Self {
        Letter(code as u8)
    }

    /// Position in the alphabet order.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn generator_index(self) -> usize {
        (self.0 / 2) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Self {
        Letter(self.0 ^ 1)
    }

    pub fn to_char(self) -> char {
        let c = (b'a' + self.0 / 2) as char;
        if self.is_inverse() {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        if !c.is_ascii_alphabetic() {
            return None;
        }
        let i = (c.to_ascii_lowercase() as u8 - b'a') as usize;
        let l = Letter::generator(i);
        Some(if c.is_ascii_uppercase() { l.inverse() } else { l })
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// The symmetric generating set of F_k.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    rank: usize,
}

impl Alphabet {
    pub const MAX_RANK: usize = 26;

    pub fn new(rank: usize) -> Result<Self> {
        if !(2..=Self::MAX_RANK).contains(&rank) {
            return Err(Error::InvalidParameter(format!(
                "rank must lie in 2..={}, got {rank}",
                Self::MAX_RANK
            )));
        }
        Ok(Self { rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of letters, 2k.
    pub fn size(&self) -> usize {
        2 * self.rank
    }

    /// Number of admissible successors of a letter, 2k − 1.
    pub fn branching(&self) -> usize {
        2 * self.rank - 1
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + Clone {
        (0..self.size()).map(Letter::from_code)
    }

    /// Letters that may follow `prev` in a reduced word, in alphabet order.
    pub fn successors(&self, prev: Option<Letter>) -> impl Iterator<Item = Letter> + Clone {
        let forbidden = prev.map(Letter::inverse);
        self.letters().filter(move |&t| Some(t) != forbidden)
    }

    /// Position of `next` among the successors of `prev`.
    pub fn successor_rank(&self, prev: Letter, next: Letter) -> usize {
        let forbidden = prev.inverse().code();
        let c = next.code();
        debug_assert_ne!(c, forbidden);
        if c > forbidden {
            c - 1
        } else {
            c
        }
    }

    pub fn successor_at(&self, prev: Letter, rank: usize) -> Letter {
        let forbidden = prev.inverse().code();
        Letter::from_code(if rank >= forbidden { rank + 1 } else { rank })
    }

    pub fn contains(&self, l: Letter) -> bool {
        l.code() < self.size()
    }

    pub fn check_word(&self, w: &ReducedWord) -> Result<()> {
        match w.letters().iter().find(|l| !self.contains(**l)) {
            Some(l) => Err(Error::InvalidWord(format!("letter {l} is outside F_{}", self.rank))),
            None => Ok(()),
        }
    }
}

/// A reduced word, i.e. an element of the free group.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ReducedWord(Vec<Letter>);

impl ReducedWord {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    /// Validates that no letter is followed by its inverse.
    pub fn from_letters(letters: Vec<Letter>) -> Result<Self> {
        if let Some(i) = letters.windows(2).position(|p| p[1] == p[0].inverse()) {
            return Err(Error::InvalidWord(format!("cancelling pair at position {i}")));
        }
        Ok(Self(letters))
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn reduce<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self(out)
    }

    pub(crate) fn from_vec_unchecked(letters: Vec<Letter>) -> Self {
        debug_assert!(letters.windows(2).all(|p| p[1] != p[0].inverse()));
        Self(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn prefix(&self, n: usize) -> ReducedWord {
        Self(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn suffix_from(&self, n: usize) -> ReducedWord {
        Self(self.0[n.min(self.0.len())..].to_vec())
    }

    pub fn is_prefix_of(&self, other: &ReducedWord) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Appends a letter, returning `None` if it would cancel.
    pub fn extended(&self, l: Letter) -> Option<ReducedWord> {
        if self.last() == Some(l.inverse()) {
            return None;
        }
        let mut v = self.0.clone();
        v.push(l);
        Some(Self(v))
    }

    /// Free reduction of the concatenation `self·other`.
    pub fn multiply(&self, other: &ReducedWord) -> ReducedWord {
        let c = self.cancellation(other);
        let mut v = Vec::with_capacity(self.len() + other.len() - 2 * c);
        v.extend_from_slice(&self.0[..self.len() - c]);
        v.extend_from_slice(&other.0[c..]);
        Self(v)
    }

    /// Number of letters cancelled on each side in `self·other`.
    pub fn cancellation(&self, other: &ReducedWord) -> usize {
        self.0
            .iter()
            .rev()
            .zip(other.0.iter())
            .take_while(|(a, b)| b.inverse() == **a)
            .count()
    }

    pub fn inverse(&self) -> ReducedWord {
        Self(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// `self = conjugator · core · conjugator⁻¹` with `core` cyclically reduced.
    pub fn cyclic_reduce(&self) -> (ReducedWord, ReducedWord) {
        let n = self.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.0[n - 1 - k] == self.0[k].inverse() {
            k += 1;
        }
        (Self(self.0[k..n - k].to_vec()), Self(self.0[..k].to_vec()))
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.first(), self.last()) {
            (Some(f), Some(l)) => self.len() == 1 || l != f.inverse(),
            _ => true,
        }
    }

    pub fn pow(&self, n: usize) -> ReducedWord {
        let mut acc = ReducedWord::identity();
        for _ in 0..n {
            acc = acc.multiply(self);
        }
        acc
    }
}

impl std::ops::Mul for &ReducedWord {
    type Output = ReducedWord;

    fn mul(self, rhs: &ReducedWord) -> ReducedWord {
        self.multiply(rhs)
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for ReducedWord {
    type Err = Error;

    /// Parses `"abAB"`; `""` and `"1"` denote the identity. Input must already be reduced.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "1" {
            return Ok(Self::identity());
        }
        let letters = s
            .chars()
            .map(|c| Letter::from_char(c).ok_or_else(|| Error::InvalidWord(format!("bad letter {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_letters(letters)
    }
}

impl Serialize for ReducedWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ReducedWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
