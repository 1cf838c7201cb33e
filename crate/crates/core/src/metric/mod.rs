//! Left-invariant hyperbolic metrics on F_k: the word metric, letter-weighted
//! metrics and Green metrics of symmetric nearest-neighbour walks.
//!
//! All three are tree metrics determined by one positive length per letter,
//! so lengths and Gromov products are exact additive functionals of prefixes.

mod green;
mod solve;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::{common_prefix_len, Alphabet, Letter, Ray, ReducedWord};

pub use green::{check_exp_moment, green_weights, GreenSolve};
pub use solve::{critical_exponent, perron_eigen, spectral_radius, transfer_matrix, GrowthData};

/// Slack used when comparing sums of float letter lengths against thresholds.
pub const LENGTH_SLACK: f64 = 1e-9;

/// How the visual parameter ε is chosen once θ is known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum EpsPolicy {
    /// ε = −ln θ / D, the boundary then has dimension D.
    Dimension { dimension: f64 },
    /// Fixed ε; D follows and must exceed 1.
    Fixed { eps: f64 },
}

impl Default for EpsPolicy {
    fn default() -> Self {
        EpsPolicy::Dimension { dimension: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum MetricVariant {
    Standard,
    /// One length per generator; inverses share it.
    Weighted { lengths: Vec<f64> },
    /// One step probability per generator; inverses share it and the total over all 2k letters is 1.
    Green { walk: Vec<f64> },
}

/// A metric in the family, as configured. See [`Metric`] for the solved form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub rank: usize,
    #[serde(flatten)]
    pub variant: MetricVariant,
    #[serde(default)]
    pub eps_policy: EpsPolicy,
}

impl MetricSpec {
    pub fn standard(rank: usize) -> Self {
        Self {
            rank,
            variant: MetricVariant::Standard,
            eps_policy: EpsPolicy::default(),
        }
    }

    pub fn weighted(lengths: Vec<f64>) -> Self {
        Self {
            rank: lengths.len(),
            variant: MetricVariant::Weighted { lengths },
            eps_policy: EpsPolicy::default(),
        }
    }

    pub fn green(walk: Vec<f64>) -> Self {
        Self {
            rank: walk.len(),
            variant: MetricVariant::Green { walk },
            eps_policy: EpsPolicy::default(),
        }
    }

    /// The simple random walk ν ≡ 1/2k.
    pub fn simple_random_walk(rank: usize) -> Self {
        Self::green(vec![1.0 / (2 * rank) as f64; rank])
    }

    pub fn with_eps_policy(mut self, policy: EpsPolicy) -> Self {
        self.eps_policy = policy;
        self
    }

    pub fn is_standard(&self) -> bool {
        matches!(self.variant, MetricVariant::Standard)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn canonical_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn per_letter(values: &[f64]) -> Vec<f64> {
        values.iter().flat_map(|&v| [v, v]).collect()
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match &self.variant {
            MetricVariant::Standard if self.rank == 2 => write!(f, "standard"),
            MetricVariant::Standard => write!(f, "standard:{}", self.rank),
            MetricVariant::Weighted { lengths } => write!(f, "weighted:{}", join(lengths)),
            MetricVariant::Green { walk } => write!(f, "green:{}", join(walk)),
        }
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    /// `standard`, `standard:3`, `weighted:1,2`, `green:0.375,0.125` or `srw` / `srw:3`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, tail) = s.split_once(':').unwrap_or((s, ""));
        let numbers = || -> Result<Vec<f64>> {
            tail.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::InvalidSpec(format!("{x:?}: {e}"))))
                .collect()
        };
        let rank = || -> Result<usize> {
            if tail.is_empty() {
                Ok(2)
            } else {
                tail.parse().map_err(|_| Error::InvalidSpec(format!("bad rank {tail:?}")))
            }
        };
        match head {
            "standard" => Ok(Self::standard(rank()?)),
            "srw" | "green-srw" => Ok(Self::simple_random_walk(rank()?)),
            "weighted" => Ok(Self::weighted(numbers()?)),
            "green" => Ok(Self::green(numbers()?)),
            _ => Err(Error::InvalidSpec(format!("unknown metric {s:?}"))),
        }
    }
}

/// Members of A_R = {g : R − r ≤ |g| ≤ R + r}, shortlex ordered.
#[derive(Clone, Debug)]
pub struct Annulus {
    pub center: f64,
    pub half_width: f64,
    pub members: Vec<ReducedWord>,
}

/// A solved metric: letter lengths, growth constants and (for Green metrics)
/// the first-passage data. Immutable once built.
#[derive(Clone, Debug)]
pub struct Metric {
    spec: MetricSpec,
    alphabet: Alphabet,
    lengths: Vec<f64>,
    growth: GrowthData<f64>,
    green: Option<GreenSolve<f64>>,
}

impl Metric {
    pub fn new(spec: MetricSpec) -> Result<Self> {
        let alphabet = Alphabet::new(spec.rank)?;
        let (lengths, green) = match &spec.variant {
            MetricVariant::Standard => (vec![1.0; alphabet.size()], None),
            MetricVariant::Weighted { lengths } => {
                if lengths.len() != spec.rank {
                    return Err(Error::InvalidSpec(format!("expected {} lengths", spec.rank)));
                }
                if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
                    return Err(Error::InvalidSpec("weighted lengths must be positive".into()));
                }
                (MetricSpec::per_letter(lengths), None)
            }
            MetricVariant::Green { walk } => {
                if walk.len() != spec.rank {
                    return Err(Error::InvalidSpec(format!("expected {} walk probabilities", spec.rank)));
                }
                let solve = green_weights(&alphabet, &MetricSpec::per_letter(walk))?;
                (solve.letter_lengths(), Some(solve))
            }
        };
        let growth = critical_exponent(&alphabet, &lengths, spec.eps_policy)?;
        Ok(Self::from_parts(spec, alphabet, lengths, growth, green))
    }

    /// Reassembles a metric from previously solved data (e.g. a cache).
    pub fn from_parts(
        spec: MetricSpec,
        alphabet: Alphabet,
        lengths: Vec<f64>,
        growth: GrowthData<f64>,
        green: Option<GreenSolve<f64>>,
    ) -> Self {
        Self {
            spec,
            alphabet,
            lengths,
            growth,
            green,
        }
    }

    pub fn standard(rank: usize) -> Result<Self> {
        Self::new(MetricSpec::standard(rank))
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn growth(&self) -> &GrowthData<f64> {
        &self.growth
    }

    pub fn green(&self) -> Option<&GreenSolve<f64>> {
        self.green.as_ref()
    }

    pub fn is_standard(&self) -> bool {
        self.spec.is_standard()
    }

    pub fn letter_lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn letter_length(&self, l: Letter) -> f64 {
        self.lengths[l.code()]
    }

    pub fn max_letter_length(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_letter_length(&self) -> f64 {
        self.lengths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// |g| = d(1, g).
    pub fn word_length(&self, w: &ReducedWord) -> f64 {
        solve::weighted(&self.lengths, w.letters().iter().copied())
    }

    /// Weighted length of the first `n` letters of a ray.
    pub fn prefix_length<X: Ray + ?Sized>(&self, x: &X, n: usize) -> f64 {
        (0..n).map_while(|i| x.letter_at(i)).map(|l| self.letter_length(l)).sum()
    }

    /// (x, y) with respect to the basepoint; +∞ for coincident boundary points.
    pub fn gromov_product<X: Ray + ?Sized, Y: Ray + ?Sized>(&self, x: &X, y: &Y) -> f64 {
        match common_prefix_len(x, y) {
            Some(n) => self.prefix_length(x, n),
            None => f64::INFINITY,
        }
    }

    /// d(g, h) = |g⁻¹h|.
    pub fn distance(&self, g: &ReducedWord, h: &ReducedWord) -> f64 {
        self.word_length(&g.inverse().multiply(h))
    }

    /// ℓ(g) = lim |gⁿ|/n, the length of the cyclically reduced core.
    pub fn translation_length(&self, g: &ReducedWord) -> f64 {
        self.word_length(&g.cyclic_reduce().0)
    }

    /// Shortest prefix of `x` whose weighted length reaches `threshold`
    /// (empty when the threshold is ≤ 0).
    pub fn prefix_reaching<X: Ray + ?Sized>(&self, x: &X, threshold: f64) -> ReducedWord {
        let mut acc = 0.0;
        let mut letters = Vec::new();
        while acc < threshold - LENGTH_SLACK {
            match x.letter_at(letters.len()) {
                Some(l) => {
                    acc += self.letter_length(l);
                    letters.push(l);
                }
                None => break,
            }
        }
        ReducedWord::from_vec_unchecked(letters)
    }

    /// All g with lo ≤ |g| ≤ hi (with [`LENGTH_SLACK`]), shortlex ordered.
    pub fn length_band(&self, lo: f64, hi: f64, cap: u128) -> Result<Vec<ReducedWord>> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.band_dfs(lo - LENGTH_SLACK, hi + LENGTH_SLACK, 0.0, &mut stack, &mut out, cap)?;
        out.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
        Ok(out)
    }

    fn band_dfs(
        &self,
        lo: f64,
        hi: f64,
        acc: f64,
        stack: &mut Vec<Letter>,
        out: &mut Vec<ReducedWord>,
        cap: u128,
    ) -> Result<()> {
        if acc >= lo {
            if out.len() as u128 >= cap {
                return Err(Error::EnumerationCap {
                    requested: cap + 1,
                    cap,
                });
            }
            out.push(ReducedWord::from_vec_unchecked(stack.clone()));
        }
        for t in self.alphabet.successors(stack.last().copied()) {
            let next = acc + self.letter_length(t);
            if next <= hi {
                stack.push(t);
                self.band_dfs(lo, hi, next, stack, out, cap)?;
                stack.pop();
            }
        }
        Ok(())
    }

    pub fn annulus(&self, center: f64, half_width: f64, cap: u128) -> Result<Annulus> {
        if center < 0.0 || half_width < 0.0 {
            return Err(Error::InvalidParameter("annulus radius and width must be nonnegative".into()));
        }
        Ok(Annulus {
            center,
            half_width,
            members: self.length_band(center - half_width, center + half_width, cap)?,
        })
    }

    /// Weighted ball {g : |g| ≤ radius}.
    pub fn ball(&self, radius: f64, cap: u128) -> Result<Vec<ReducedWord>> {
        self.length_band(f64::NEG_INFINITY, radius, cap)
    }
}

/// Smallest L with |g|₁/L ≤ |g|₂ ≤ L·|g|₁ over the letter ball of the given radius.
pub fn quasi_isometry_constant(m1: &Metric, m2: &Metric, radius: usize) -> Result<f64> {
    let words = crate::group::ball(m1.alphabet(), radius, crate::group::DEFAULT_ENUMERATION_CAP)?;
    Ok(words
        .iter()
        .filter(|w| !w.is_identity())
        .map(|w| {
            let r = m1.word_length(w) / m2.word_length(w);
            r.max(r.recip())
        })
        .fold(1.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    #[test]
    fn word_lengths() {
        let std = Metric::standard(2).unwrap();
        assert_eq!(std.word_length(&w("aba")), 3.0);
        let wt = Metric::new(MetricSpec::weighted(vec![1.0, 2.0])).unwrap();
        assert_eq!(wt.word_length(&w("ab")), 3.0);
        let green = Metric::new(MetricSpec::simple_random_walk(2)).unwrap();
        assert!((green.word_length(&w("ab")) - 2.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gromov_products() {
        let std = Metric::standard(2).unwrap();
        assert_eq!(std.gromov_product(&w("aba"), &w("abb")), 2.0);
        let wt = Metric::new(MetricSpec::weighted(vec![1.0, 2.0])).unwrap();
        let x: crate::group::BoundaryPoint = "ab(a)".parse().unwrap();
        let y: crate::group::BoundaryPoint = "ab(b)".parse().unwrap();
        assert_eq!(wt.gromov_product(&x, &y), 3.0);
        assert_eq!(wt.gromov_product(&x, &x), f64::INFINITY);
    }

    #[test]
    fn translation_lengths() {
        let std = Metric::standard(2).unwrap();
        assert_eq!(std.translation_length(&w("abA")), 1.0);
        assert_eq!(std.translation_length(&w("ab")), 2.0);
        for n in 1..=8 {
            assert_eq!(std.word_length(&w("ab").pow(n)) / n as f64, 2.0);
        }
        let wt = Metric::new(MetricSpec::weighted(vec![1.0, 2.0])).unwrap();
        assert_eq!(wt.translation_length(&w("ab")), 3.0);
    }

    #[test]
    fn green_growth_is_one() {
        // Σ_{t≠s⁻¹} F_t c_t = c_s makes c a Perron vector of M_{s,t} = F_t, so θ·e = 1
        let green = Metric::new(MetricSpec::simple_random_walk(2)).unwrap();
        assert!((green.growth().theta - (-1f64).exp()).abs() < 1e-12);
        let skew = Metric::new(MetricSpec::green(vec![0.375, 0.125])).unwrap();
        assert!((skew.growth().theta - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn spec_parsing_and_json() {
        let s: MetricSpec = "weighted:1,2".parse().unwrap();
        assert_eq!(s, MetricSpec::weighted(vec![1.0, 2.0]));
        assert_eq!(s.to_string(), "weighted:1,2");
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["variant"], "weighted");
        assert_eq!(json["eps_policy"]["policy"], "dimension");
        let back: MetricSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
        let g: MetricSpec = serde_json::from_str(r#"{"rank":2,"variant":"green","walk":[0.25,0.25]}"#).unwrap();
        assert_eq!(g, MetricSpec::simple_random_walk(2));
        assert!("hyperbolic".parse::<MetricSpec>().is_err());
        assert_ne!(s.canonical_hash(), MetricSpec::standard(2).canonical_hash());
        assert_eq!(s.canonical_hash().len(), 64);
    }

    #[test]
    fn annulus_members_match_filtered_ball() {
        let wt = Metric::new(MetricSpec::weighted(vec![1.0, 2.0])).unwrap();
        let ann = wt.annulus(6.0, 2.0, 1 << 20).unwrap();
        let ball = crate::group::ball(wt.alphabet(), 8, 1 << 20).unwrap();
        let brute: Vec<_> = ball
            .into_iter()
            .filter(|g| (4.0..=8.0).contains(&wt.word_length(g)))
            .collect();
        assert_eq!(ann.members, brute);
        assert!(wt.annulus(-1.0, 0.0, 10).is_err());
    }

    #[test]
    fn quasi_isometric_family() {
        let std = Metric::standard(2).unwrap();
        let wt = Metric::new(MetricSpec::weighted(vec![1.0, 2.0])).unwrap();
        let green = Metric::new(MetricSpec::green(vec![0.375, 0.125])).unwrap();
        assert_eq!(quasi_isometry_constant(&std, &wt, 8).unwrap(), 2.0);
        let l = quasi_isometry_constant(&std, &green, 8).unwrap();
        assert!(l.is_finite() && l > 1.0);
    }
}
