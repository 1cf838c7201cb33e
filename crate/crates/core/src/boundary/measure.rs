use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{count, Cylinder, Leaf};
use crate::error::{Error, Result};
use crate::group::{common_prefix_len, Alphabet, Letter, Ray, ReducedWord};
use crate::metric::{GrowthData, Metric, MetricSpec, MetricVariant};
use crate::scalar::{sum, Scalar};

/// A Markov measure on ∂F_k: the mass of [s₁…s_n] is
/// π_{s₁}·Π p(s_i → s_{i+1}).
///
/// Alongside the chain it carries θ^{ℓ_s} per letter, so that powers of ω
/// along words stay inside the scalar field.
pub struct MarkovMeasure<S> {
    alphabet: Alphabet,
    initial: Vec<S>,
    transition: Vec<Vec<S>>,
    letter_scale: Vec<S>,
    growth: GrowthData<f64>,
    spec: MetricSpec,
    tables: Mutex<HashMap<usize, Arc<Vec<S>>>>,
}

impl<S: Clone> Clone for MarkovMeasure<S> {
    fn clone(&self) -> Self {
        Self {
            alphabet: self.alphabet,
            initial: self.initial.clone(),
            transition: self.transition.clone(),
            letter_scale: self.letter_scale.clone(),
            growth: self.growth.clone(),
            spec: self.spec.clone(),
            tables: Mutex::default(),
        }
    }
}

impl<S: std::fmt::Debug> std::fmt::Debug for MarkovMeasure<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MarkovMeasure")
            .field("spec", &self.spec)
            .field("initial", &self.initial)
            .field("transition", &self.transition)
            .finish()
    }
}

/// Sup and inf over samples of rn_derivative / formula_rn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiConformalReport {
    pub max_word_len: usize,
    pub depth: usize,
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl QuasiConformalReport {
    /// Smallest C with every ratio in [1/C, C].
    pub fn constant(&self) -> f64 {
        self.max_ratio.max(self.min_ratio.recip())
    }
}

/// Range of μ([w])·ω^{|w|} per depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AhlforsReport {
    /// `(depth, min, max)`.
    pub per_depth: Vec<(usize, f64, f64)>,
    pub min: f64,
    pub max: f64,
    /// All normalized masses are equal as scalars.
    pub constant: bool,
}

fn rationalize(x: f64, max_den: i64) -> Option<(i64, i64)> {
    // continued fraction convergents until the float is reproduced
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e12 {
            return None;
        }
        let a = a as i64;
        let (h2, k2) = (a.checked_mul(h1)?.checked_add(h0)?, a.checked_mul(k1)?.checked_add(k0)?);
        if k2 > max_den {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64 / k1 as f64) - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Some((h1, k1));
        }
        let frac = v - a as f64;
        if frac == 0.0 {
            return None;
        }
        v = frac.recip();
    }
    None
}

fn exact_green<S: Scalar>(alphabet: &Alphabet, walk: &[f64], f: &[f64]) -> Result<(Vec<S>, Vec<S>)> {
    let lift = |x: f64| -> Result<S> {
        rationalize(x, 1_000_000)
            .map(|(n, d)| S::from_ratio(n, d))
            .ok_or_else(|| Error::Unsupported(format!("{x} has no small rational form")))
    };
    let nu: Vec<S> = walk.iter().map(|&x| lift(x)).collect::<Result<_>>()?;
    let fs: Vec<S> = f.iter().map(|&x| lift(x)).collect::<Result<_>>()?;
    for s in alphabet.letters() {
        let back = sum(alphabet
            .letters()
            .filter(|&t| t != s)
            .map(|t| nu[t.code()].clone() * fs[t.inverse().code()].clone()));
        if fs[s.code()].clone() * (S::one() - back) != nu[s.code()] {
            return Err(Error::Unsupported("first-passage vector is not rational".into()));
        }
    }
    let c = alphabet
        .letters()
        .map(|s| {
            let fi = fs[s.inverse().code()].clone();
            (S::one() - fi.clone()) / (S::one() - fi * fs[s.code()].clone())
        })
        .collect();
    Ok((fs, c))
}

fn lift_f64<S: Scalar>(x: f64) -> Result<S> {
    S::from_f64(x).ok_or_else(|| Error::Conversion(x.to_string()))
}

/// The Patterson-Sullivan-class measure of a metric as a Markov measure.
///
/// Standard: uniform. Weighted: p(s→t) = θ^{ℓ_t}v_t/v_s with v the Perron
/// vector of M(θ). Green: the harmonic measure, π_s = F_s c_s and
/// p(s→t) = F_t c_t / c_s. Exact scalar types are served for the standard
/// metric and for Green metrics whose first-passage vector is rational.
pub fn ps_measure<S: Scalar>(metric: &Metric) -> Result<MarkovMeasure<S>> {
    let alphabet = *metric.alphabet();
    let n = alphabet.size();
    let (initial, transition, scale): (Vec<S>, Vec<Vec<S>>, Vec<S>) = match &metric.spec().variant {
        MetricVariant::Standard => {
            let q = alphabet.branching() as i64;
            let p = S::from_ratio(1, q);
            let transition = alphabet
                .letters()
                .map(|s| {
                    alphabet
                        .letters()
                        .map(|t| if t == s.inverse() { S::zero() } else { p.clone() })
                        .collect()
                })
                .collect();
            (vec![S::from_ratio(1, n as i64); n], transition, vec![p; n])
        }
        MetricVariant::Weighted { .. } => {
            if S::EXACT {
                return Err(Error::Unsupported("weighted metrics have no exact measure".into()));
            }
            let g = metric.growth();
            let v = &g.perron_right;
            let w: Vec<f64> = metric.letter_lengths().iter().map(|&l| g.theta.powf(l)).collect();
            let z: f64 = (0..n).map(|s| w[s] * v[s]).sum();
            let initial = (0..n).map(|s| lift_f64(w[s] * v[s] / z)).collect::<Result<_>>()?;
            let mut transition = Vec::with_capacity(n);
            for s in alphabet.letters() {
                let row: Vec<f64> = alphabet
                    .letters()
                    .map(|t| if t == s.inverse() { 0.0 } else { w[t.code()] * v[t.code()] / v[s.code()] })
                    .collect();
                let total: f64 = row.iter().sum();
                transition.push(row.iter().map(|&x| lift_f64(x / total)).collect::<Result<_>>()?);
            }
            let scale = w.iter().map(|&x| lift_f64(x)).collect::<Result<_>>()?;
            (initial, transition, scale)
        }
        MetricVariant::Green { walk } => {
            let solve = metric.green().expect("green metric carries its solve");
            let (f, c): (Vec<S>, Vec<S>) = if S::EXACT {
                let per_letter: Vec<f64> = walk.iter().flat_map(|&x| [x, x]).collect();
                exact_green(&alphabet, &per_letter, &solve.first_passage)?
            } else {
                (
                    solve.first_passage.iter().map(|&x| lift_f64(x)).collect::<Result<_>>()?,
                    solve.convergence.iter().map(|&x| lift_f64(x)).collect::<Result<_>>()?,
                )
            };
            let initial: Vec<S> = (0..n).map(|s| f[s].clone() * c[s].clone()).collect();
            let transition = alphabet
                .letters()
                .map(|s| {
                    alphabet
                        .letters()
                        .map(|t| {
                            if t == s.inverse() {
                                S::zero()
                            } else {
                                initial[t.code()].clone() / c[s.code()].clone()
                            }
                        })
                        .collect()
                })
                .collect();
            (initial, transition, f)
        }
    };
    MarkovMeasure::from_parts(metric, initial, transition, scale)
}

impl<S: Scalar> MarkovMeasure<S> {
    /// Validates a chain: stochastic rows, no backtracking, positive masses.
    pub fn from_parts(metric: &Metric, initial: Vec<S>, transition: Vec<Vec<S>>, letter_scale: Vec<S>) -> Result<Self> {
        let alphabet = *metric.alphabet();
        let n = alphabet.size();
        if initial.len() != n || transition.len() != n || letter_scale.len() != n {
            return Err(Error::InvalidParameter("chain needs one entry per letter".into()));
        }
        let tol = 1e-10;
        if !crate::scalar::close(&sum(initial.iter().cloned()), &S::one(), tol) {
            return Err(Error::InvalidParameter("initial distribution does not sum to 1".into()));
        }
        for s in alphabet.letters() {
            let row = &transition[s.code()];
            if row.len() != n || row[s.inverse().code()] != S::zero() {
                return Err(Error::InvalidParameter(format!("row {s} allows backtracking")));
            }
            if !crate::scalar::close(&sum(row.iter().cloned()), &S::one(), tol) {
                return Err(Error::InvalidParameter(format!("row {s} does not sum to 1")));
            }
            let positive = alphabet
                .successors(Some(s))
                .all(|t| row[t.code()].to_f64() > 0.0);
            if !positive || initial[s.code()].to_f64() <= 0.0 {
                return Err(Error::InvalidParameter("masses must be positive".into()));
            }
        }
        Ok(Self {
            alphabet,
            initial,
            transition,
            letter_scale,
            growth: metric.growth().clone(),
            spec: metric.spec().clone(),
            tables: Mutex::default(),
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn growth(&self) -> &GrowthData<f64> {
        &self.growth
    }

    pub fn initial(&self, s: Letter) -> &S {
        &self.initial[s.code()]
    }

    pub fn transition(&self, s: Letter, t: Letter) -> &S {
        &self.transition[s.code()][t.code()]
    }

    /// θ^{ℓ_s}.
    pub fn letter_scale(&self, s: Letter) -> &S {
        &self.letter_scale[s.code()]
    }

    /// θ^{|w|}, the product of letter scales.
    pub fn theta_power(&self, letters: &[Letter]) -> S {
        letters.iter().fold(S::one(), |a, l| a * self.letter_scale(*l).clone())
    }

    /// Mass of the cylinder with the given stem; the empty stem has mass 1.
    pub fn cylinder_mass(&self, stem: &[Letter]) -> S {
        let Some((&first, rest)) = stem.split_first() else {
            return S::one();
        };
        let mut m = self.initial(first).clone();
        let mut prev = first;
        for &t in rest {
            m = m * self.transition(prev, t).clone();
            prev = t;
        }
        m
    }

    pub fn mass(&self, w: &ReducedWord) -> S {
        self.cylinder_mass(w.letters())
    }

    pub fn mass_of(&self, c: &Cylinder) -> S {
        self.mass(c.stem())
    }

    /// Masses of all cylinders of a depth, in index order (cached).
    pub fn masses(&self, depth: usize) -> Arc<Vec<S>> {
        if let Some(t) = self.tables.lock().expect("mass cache").get(&depth) {
            return t.clone();
        }
        let a = self.alphabet;
        let q = a.branching();
        let mut masses = vec![S::one()];
        let mut lasts: Vec<Option<Letter>> = vec![None];
        for d in 1..=depth {
            let mut next = Vec::with_capacity(count(&a, d));
            let mut next_last = Vec::with_capacity(count(&a, d));
            for (m, last) in masses.iter().zip(&lasts) {
                for t in a.successors(*last) {
                    next.push(match last {
                        None => self.initial(t).clone(),
                        Some(s) => m.clone() * self.transition(*s, t).clone(),
                    });
                    next_last.push(Some(t));
                }
            }
            debug_assert!(d == 1 || next.len() == masses.len() * q);
            masses = next;
            lasts = next_last;
        }
        let table = Arc::new(masses);
        self.tables.lock().expect("mass cache").insert(depth, table.clone());
        table
    }

    /// P_g on [w] = μ(g⁻¹[w]) / μ([w]); constant once |w| > |g|.
    pub fn rn_derivative(&self, g: &ReducedWord, w: &Cylinder) -> Result<S> {
        if w.depth() < g.len() + 1 {
            return Err(Error::InsufficientDepth {
                needed: g.len() + 1,
                got: w.depth(),
            });
        }
        let pre = g.inverse().multiply(w.stem());
        Ok(self.mass(&pre) / self.mass_of(w))
    }

    /// The value of P_g on a leaf of its partition.
    pub fn leaf_rn(&self, leaf: &Leaf) -> S {
        self.mass(&leaf.image) / self.mass(&leaf.stem)
    }

    /// ω^{2(g,ξ) − |g|} in the weighted metric.
    pub fn formula_rn<X: Ray + ?Sized>(&self, g: &ReducedWord, xi: &X) -> S {
        let m = common_prefix_len(g, xi).unwrap_or(g.len()).min(g.len());
        let shared = self.theta_power(&g.letters()[..m]);
        self.theta_power(g.letters()) / (shared.clone() * shared)
    }

    /// Ratio rn_derivative / formula_rn over |g| ≤ `max_word_len` and all
    /// cylinders of `depth`.
    pub fn quasi_conformal_report(&self, max_word_len: usize, depth: usize) -> Result<QuasiConformalReport> {
        if depth < max_word_len + 1 {
            return Err(Error::InsufficientDepth {
                needed: max_word_len + 1,
                got: depth,
            });
        }
        let words = crate::group::ball(&self.alphabet, max_word_len, crate::group::DEFAULT_ENUMERATION_CAP)?;
        let cyl = super::cylinders(&self.alphabet, depth);
        let (lo, hi) = words
            .par_iter()
            .map(|g| {
                cyl.iter().fold((f64::INFINITY, 0f64), |(lo, hi), w| {
                    let r = (self.rn_derivative(g, w).expect("depth checked") / self.formula_rn(g, w.stem())).to_f64();
                    (lo.min(r), hi.max(r))
                })
            })
            .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        Ok(QuasiConformalReport {
            max_word_len,
            depth,
            samples: words.len() * cyl.len(),
            min_ratio: lo,
            max_ratio: hi,
        })
    }

    /// μ([w])·ω^{|w|} over all cylinders of depth 1..=max_depth.
    pub fn ahlfors_report(&self, max_depth: usize) -> AhlforsReport {
        let a = self.alphabet;
        let mut level: Vec<(S, Letter)> = a
            .letters()
            .map(|t| (self.initial(t).clone() / self.letter_scale(t).clone(), t))
            .collect();
        let reference = level[0].0.clone();
        let mut constant = true;
        let mut per_depth = Vec::new();
        for d in 1..=max_depth {
            if d > 1 {
                level = level
                    .iter()
                    .flat_map(|(v, s)| {
                        a.successors(Some(*s)).map(move |t| {
                            (v.clone() * self.transition(*s, t).clone() / self.letter_scale(t).clone(), t)
                        })
                    })
                    .collect();
            }
            let (mut lo, mut hi) = (f64::INFINITY, 0f64);
            for (v, _) in &level {
                constant &= *v == reference;
                let x = v.to_f64();
                lo = lo.min(x);
                hi = hi.max(x);
            }
            per_depth.push((d, lo, hi));
        }
        let min = per_depth.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let max = per_depth.iter().map(|r| r.2).fold(0.0, f64::max);
        AhlforsReport {
            per_depth,
            min,
            max,
            constant,
        }
    }

    /// `{initial, transition, growth_ref}`; exact scalars are written as strings.
    pub fn to_json(&self) -> Value {
        let enc = |x: &S| if S::EXACT { json!(x.to_string()) } else { json!(x.to_f64()) };
        json!({
            "initial": self.initial.iter().map(enc).collect::<Vec<_>>(),
            "transition": self.transition.iter().map(|r| r.iter().map(enc).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "growth_ref": self.spec.canonical_hash(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::QuadSurd;
    use num_traits::One;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    fn standard() -> MarkovMeasure<QuadSurd> {
        ps_measure(&Metric::standard(2).unwrap()).unwrap()
    }

    #[test]
    fn uniform_masses() {
        let mu = standard();
        assert_eq!(mu.mass(&w("a")), QuadSurd::rational(1, 4));
        assert_eq!(mu.mass(&w("ab")), QuadSurd::rational(1, 12));
        assert_eq!(mu.mass(&ReducedWord::identity()), QuadSurd::one());
        let t = mu.masses(3);
        assert_eq!(t.len(), 36);
        assert!(t.iter().all(|m| *m == QuadSurd::rational(1, 36)));
    }

    #[test]
    fn rn_examples() {
        let mu = standard();
        let c = |s: &str| Cylinder::new(w(s));
        assert_eq!(mu.rn_derivative(&w("a"), &c("aa")).unwrap(), QuadSurd::rational(3, 1));
        assert_eq!(mu.rn_derivative(&w("a"), &c("Ab")).unwrap(), QuadSurd::rational(1, 3));
        assert_eq!(mu.rn_derivative(&ReducedWord::identity(), &c("b")).unwrap(), QuadSurd::one());
        assert!(matches!(
            mu.rn_derivative(&w("ab"), &c("ab")),
            Err(Error::InsufficientDepth { needed: 3, got: 2 })
        ));
        assert_eq!(mu.formula_rn(&w("a"), &w("aa")), QuadSurd::rational(3, 1));
        assert_eq!(mu.formula_rn(&ReducedWord::identity(), &w("ab")), QuadSurd::one());
    }

    #[test]
    fn green_srw_is_uniform_exactly() {
        let green = Metric::new(MetricSpec::simple_random_walk(2)).unwrap();
        let h: MarkovMeasure<QuadSurd> = ps_measure(&green).unwrap();
        assert_eq!(h.initial(Letter::generator(0)), &QuadSurd::rational(1, 4));
        assert_eq!(h.transition(Letter::generator(0), Letter::generator(1)), &QuadSurd::rational(1, 3));
        assert_eq!(h.letter_scale(Letter::generator(1)), &QuadSurd::rational(1, 3));
        let skew = Metric::new(MetricSpec::green(vec![0.375, 0.125])).unwrap();
        assert!(ps_measure::<QuadSurd>(&skew).is_err());
        assert!(ps_measure::<f64>(&skew).is_ok());
    }

    #[test]
    fn weighted_rows_are_stochastic() {
        let m = Metric::new(MetricSpec::weighted(vec![1.0, 2.0])).unwrap();
        let mu: MarkovMeasure<f64> = ps_measure(&m).unwrap();
        let a = *mu.alphabet();
        for s in a.letters() {
            let row: f64 = a.letters().map(|t| *mu.transition(s, t)).sum();
            assert!((row - 1.0).abs() < 1e-12);
        }
        assert!(ps_measure::<QuadSurd>(&m).is_err());
    }

    #[test]
    fn rationalize_recovers_small_fractions() {
        assert_eq!(rationalize(1.0 / 3.0, 1000), Some((1, 3)));
        assert_eq!(rationalize(0.75, 1000), Some((3, 4)));
        assert_eq!(rationalize(std::f64::consts::PI, 1000), None);
    }

    #[test]
    fn json_export() {
        let v = standard().to_json();
        assert_eq!(v["initial"][0], "1/4");
        assert_eq!(v["transition"][0][1], "0");
        assert_eq!(v["growth_ref"].as_str().unwrap().len(), 64);
    }
}
