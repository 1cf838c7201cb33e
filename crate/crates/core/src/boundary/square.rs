use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cylinders, Cylinder, MarkovMeasure};
use crate::error::{Error, Result};
use crate::group::{common_prefix_len, Letter, ReducedWord};
use crate::scalar::Scalar;

impl<S: Scalar> MarkovMeasure<S> {
    /// ν([u]×[v]) = ω^{2(u,v)}·μ([u])·μ([v]) for separated cylinders, where
    /// ν = d_ε^{−2D} μ×μ. The Gromov product is constant on such rectangles.
    pub fn nu_square_mass(&self, u: &Cylinder, v: &Cylinder) -> Result<S> {
        let shared = common_prefix_len(u.stem(), v.stem()).unwrap_or(u.depth());
        if shared >= u.depth() || shared >= v.depth() {
            return Err(Error::NotSeparated(u.to_string(), v.to_string()));
        }
        let t = self.theta_power(&u.stem().letters()[..shared]);
        Ok(self.mass_of(u) * self.mass_of(v) / (t.clone() * t))
    }

    fn log_theta_prefix(&self, letters: &[Letter]) -> Vec<f64> {
        let mut out = Vec::with_capacity(letters.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for l in letters {
            acc += self.letter_scale(*l).to_f64().ln();
            out.push(acc);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostInvarianceRow {
    pub word_len: usize,
    pub words: usize,
    /// Distinct rectangle classes examined per word.
    pub classes: usize,
    pub max_abs_log: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostInvarianceReport {
    pub depth: usize,
    pub rows: Vec<AlmostInvarianceRow>,
}

impl AlmostInvarianceReport {
    pub fn max_abs_log(&self) -> f64 {
        self.rows.iter().map(|r| r.max_abs_log).fold(0.0, f64::max)
    }
}

struct Prefix {
    letters: Vec<Letter>,
    image: Vec<Letter>,
    log_theta: Vec<f64>,
    image_log_theta: Vec<f64>,
    log_mass_ratio: f64,
}

/// max |log ν(g·[u]×[v]) / ν([u]×[v])| per word length, over all separated
/// rectangles of `depth` and all g with |g| ≤ `max_word_len`.
///
/// For |g| = n the ratio depends only on the depth-(n+1) prefixes (u′, v′)
/// when they differ, and only on u′ when they agree, so each class is
/// evaluated once. Requires depth ≥ max_word_len + 2.
pub fn almost_invariance_report<S: Scalar>(
    mu: &MarkovMeasure<S>,
    max_word_len: usize,
    depth: usize,
) -> Result<AlmostInvarianceReport> {
    if depth < max_word_len + 2 {
        return Err(Error::InsufficientDepth {
            needed: max_word_len + 2,
            got: depth,
        });
    }
    let a = *mu.alphabet();
    let mut rows = Vec::new();
    for n in 0..=max_word_len {
        let words = crate::group::sphere(&a, n, crate::group::DEFAULT_ENUMERATION_CAP)?;
        let prefixes = cylinders(&a, n + 1);
        let classes = prefixes.len() * prefixes.len();
        let worst = words
            .par_iter()
            .map(|g| word_worst(mu, g, &prefixes))
            .reduce(|| 0.0, f64::max);
        rows.push(AlmostInvarianceRow {
            word_len: n,
            words: words.len(),
            classes,
            max_abs_log: worst,
        });
    }
    Ok(AlmostInvarianceReport { depth, rows })
}

fn word_worst<S: Scalar>(mu: &MarkovMeasure<S>, g: &ReducedWord, prefixes: &[Cylinder]) -> f64 {
    let data: Vec<Prefix> = prefixes
        .iter()
        .map(|u| {
            let image = g.multiply(u.stem());
            let ratio = (mu.mass(&image) / mu.mass_of(u)).to_f64();
            Prefix {
                log_theta: mu.log_theta_prefix(u.stem().letters()),
                image_log_theta: mu.log_theta_prefix(image.letters()),
                letters: u.stem().letters().to_vec(),
                image: image.letters().to_vec(),
                log_mass_ratio: ratio.ln(),
            }
        })
        .collect();
    let cp = |x: &[Letter], y: &[Letter]| x.iter().zip(y).take_while(|(p, q)| p == q).count();
    let mut worst = 0f64;
    for (i, u) in data.iter().enumerate() {
        // diagonal class: u′x × u′y, Gromov product |u′| before and |g·u′| after
        let diag = 2.0 * u.log_mass_ratio - 2.0 * (u.image_log_theta[u.image.len()] - u.log_theta[u.letters.len()]);
        worst = worst.max(diag.abs());
        for v in &data[i + 1..] {
            let before = u.log_theta[cp(&u.letters, &v.letters)];
            let after = u.image_log_theta[cp(&u.image, &v.image)];
            let log = u.log_mass_ratio + v.log_mass_ratio - 2.0 * (after - before);
            worst = worst.max(log.abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::ps_measure;
    use crate::exact::QuadSurd;
    use crate::metric::{Metric, MetricSpec};

    fn c(s: &str) -> Cylinder {
        Cylinder::new(s.parse().unwrap())
    }

    #[test]
    fn square_mass_examples() {
        let mu = ps_measure::<QuadSurd>(&Metric::standard(2).unwrap()).unwrap();
        assert_eq!(mu.nu_square_mass(&c("a"), &c("b")).unwrap(), QuadSurd::rational(1, 16));
        assert_eq!(mu.nu_square_mass(&c("ab"), &c("aa")).unwrap(), QuadSurd::rational(1, 16));
        assert!(matches!(mu.nu_square_mass(&c("a"), &c("ab")), Err(Error::NotSeparated(..))));
    }

    fn brute<S: Scalar>(mu: &MarkovMeasure<S>, n: usize, depth: usize) -> f64 {
        let a = *mu.alphabet();
        let cyl = cylinders(&a, depth);
        let mut worst = 0f64;
        for g in crate::group::sphere(&a, n, 1 << 20).unwrap() {
            for u in &cyl {
                for v in &cyl {
                    let Ok(before) = mu.nu_square_mass(u, v) else { continue };
                    let gu = Cylinder::new(g.multiply(u.stem()));
                    let gv = Cylinder::new(g.multiply(v.stem()));
                    let after = mu.nu_square_mass(&gu, &gv).expect("translates stay separated");
                    worst = worst.max((after / before).to_f64().ln().abs());
                }
            }
        }
        worst
    }

    #[test]
    fn class_reduction_matches_brute_force() {
        let m = Metric::new(MetricSpec::weighted(vec![1.0, 2.0])).unwrap();
        let mu = ps_measure::<f64>(&m).unwrap();
        let report = almost_invariance_report(&mu, 2, 4).unwrap();
        for row in &report.rows {
            let b = brute(&mu, row.word_len, 4);
            assert!((row.max_abs_log - b).abs() < 1e-12, "{row:?} vs {b}");
        }
        assert!(report.rows[0].max_abs_log < 1e-12);
    }

    #[test]
    fn standard_square_measure_is_invariant() {
        let mu = ps_measure::<QuadSurd>(&Metric::standard(2).unwrap()).unwrap();
        assert_eq!(brute(&mu, 2, 4), 0.0);
        let report = almost_invariance_report(&mu, 3, 5).unwrap();
        assert!(report.max_abs_log() < 1e-12);
    }
}
