use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::{Letter, ReducedWord};
use crate::error::{Error, Result};

/// Anything readable letter by letter from the basepoint: finite words and
/// infinite boundary words.
pub trait Ray {
    fn letter_at(&self, i: usize) -> Option<Letter>;

    /// `(preperiod length, period length)` for infinite rays.
    fn periodic_shape(&self) -> Option<(usize, usize)>;
}

impl Ray for ReducedWord {
    fn letter_at(&self, i: usize) -> Option<Letter> {
        self.letters().get(i).copied()
    }

    fn periodic_shape(&self) -> Option<(usize, usize)> {
        None
    }
}

/// An eventually periodic infinite reduced word `preperiod · period^∞`.
///
/// Stored in normal form: the period is primitive and the preperiod is as
/// short as possible, which makes structural equality decide equality of points.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryPoint {
    preperiod: ReducedWord,
    period: ReducedWord,
}

impl BoundaryPoint {
    pub fn new(preperiod: ReducedWord, period: ReducedWord) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidPoint("empty period".into()));
        }
        if !period.is_cyclically_reduced() {
            return Err(Error::InvalidPoint(format!("period {period} is not cyclically reduced")));
        }
        if let (Some(l), Some(f)) = (preperiod.last(), period.first()) {
            if l == f.inverse() {
                return Err(Error::InvalidPoint(format!("{preperiod}·{period} cancels at the seam")));
            }
        }
        let mut pre = preperiod.letters().to_vec();
        let mut per = primitive_root(period.letters());
        while let (Some(&l), Some(&p)) = (pre.last(), per.last()) {
            if l != p {
                break;
            }
            pre.pop();
            per.rotate_right(1);
        }
        Ok(Self {
            preperiod: ReducedWord::from_vec_unchecked(pre),
            period: ReducedWord::from_vec_unchecked(per),
        })
    }

    pub fn periodic(period: ReducedWord) -> Result<Self> {
        Self::new(ReducedWord::identity(), period)
    }

    pub fn preperiod(&self) -> &ReducedWord {
        &self.preperiod
    }

    pub fn period(&self) -> &ReducedWord {
        &self.period
    }

    /// The first `n` letters.
    pub fn prefix(&self, n: usize) -> ReducedWord {
        ReducedWord::from_vec_unchecked((0..n).map(|i| self.letter(i)).collect())
    }

    pub fn letter(&self, i: usize) -> Letter {
        let p = self.preperiod.len();
        if i < p {
            self.preperiod.letters()[i]
        } else {
            self.period.letters()[(i - p) % self.period.len()]
        }
    }

    /// The point `g·self`.
    pub fn act(&self, g: &ReducedWord) -> BoundaryPoint {
        let reps = g.len().div_ceil(self.period.len()) + 1;
        let head = self.prefix(self.preperiod.len() + reps * self.period.len());
        let moved = g.multiply(&head);
        BoundaryPoint::new(moved, self.period.clone()).expect("translate of a valid point is valid")
    }
}

fn primitive_root(period: &[Letter]) -> Vec<Letter> {
    let n = period.len();
    (1..=n)
        .filter(|d| n % d == 0)
        .find(|&d| (d..n).all(|i| period[i] == period[i % d]))
        .map(|d| period[..d].to_vec())
        .unwrap_or_else(|| period.to_vec())
}

impl Ray for BoundaryPoint {
    fn letter_at(&self, i: usize) -> Option<Letter> {
        Some(self.letter(i))
    }

    fn periodic_shape(&self) -> Option<(usize, usize)> {
        Some((self.preperiod.len(), self.period.len()))
    }
}

/// Number of shared initial letters; `None` when both rays are the same infinite word.
pub fn common_prefix_len<X: Ray + ?Sized, Y: Ray + ?Sized>(x: &X, y: &Y) -> Option<usize> {
    let bound = match (x.periodic_shape(), y.periodic_shape()) {
        (Some((p1, n1)), Some((p2, n2))) => Some(p1.max(p2) + n1.lcm(&n2)),
        _ => None,
    };
    let mut i = 0;
    loop {
        if bound == Some(i) {
            return None;
        }
        match (x.letter_at(i), y.letter_at(i)) {
            (Some(a), Some(b)) if a == b => i += 1,
            _ => return Some(i),
        }
    }
}

/// The radial extension ĝ = g·x^∞, with x the first letter in alphabet
/// order that does not cancel against g. Shares exactly |g| letters with g.
pub fn hat(g: &ReducedWord) -> BoundaryPoint {
    let a = Letter::generator(0);
    let x = if g.last() == Some(a.inverse()) { a.inverse() } else { a };
    BoundaryPoint::new(g.clone(), ReducedWord::from_vec_unchecked(vec![x])).expect("hat is reduced")
}

/// ǧ, the radial extension of g⁻¹.
pub fn hat_inverse(g: &ReducedWord) -> BoundaryPoint {
    hat(&g.inverse())
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.preperiod.is_empty() {
            write!(f, "{}", self.preperiod)?;
        }
        write!(f, "({})", self.period)
    }
}

impl fmt::Debug for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for BoundaryPoint {
    type Err = Error;

    /// Parses `"pre(period)"`, e.g. `"a(b)"` for a·b^∞ or `"(ab)"` for (ab)^∞.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s.find('(').ok_or_else(|| Error::InvalidPoint(format!("missing '(' in {s:?}")))?;
        let inner = s[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| Error::InvalidPoint(format!("missing ')' in {s:?}")))?;
        let pre: ReducedWord = s[..open].parse()?;
        let per: ReducedWord = inner.parse()?;
        Self::new(pre, per)
    }
}

impl Serialize for BoundaryPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BoundaryPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
