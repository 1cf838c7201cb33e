//! Unitary equivalence of boundary representations, decided through rough
//! similarity of the underlying metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundary::{count, MarkovMeasure};
use crate::error::{Error, Result};
use crate::group::{ball, cyclic_cores, Alphabet, BoundaryPoint, Letter, ReducedWord, DEFAULT_ENUMERATION_CAP};
use crate::metric::Metric;
use crate::scalar::Scalar;

/// Two sampled length ratios farther apart than this disprove similarity.
pub const SPECTRUM_TOLERANCE: f64 = 1e-9;
/// Least-squares slopes above this count as growth.
pub const GROWTH_SLOPE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Equivalent,
    Inequivalent,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spectrum,
    Deviation,
    Holder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityVerdict {
    pub verdict: Verdict,
    /// A with |g|₁ ≈ A·|g|₂.
    pub scale: f64,
    /// Spectrum: |ratio − A| per sampled core. Deviation: dev(R) per radius.
    /// Hölder: max |deviation| per depth.
    pub max_deviation: Vec<f64>,
    pub method: Method,
}

fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        num += (i as f64 - mx) * (y - my);
        den += (i as f64 - mx).powi(2);
    }
    num / den
}

fn check_ranks(m1: &Metric, m2: &Metric) -> Result<Alphabet> {
    if m1.alphabet() != m2.alphabet() {
        return Err(Error::InvalidParameter("metrics live on free groups of different rank".into()));
    }
    Ok(*m1.alphabet())
}

/// Ratios ℓ₁(g)/ℓ₂(g) of translation lengths over cyclically reduced words,
/// by default all cores of letter length ≤ 6.
pub fn length_spectrum_test(m1: &Metric, m2: &Metric, sample: Option<&[ReducedWord]>) -> Result<SimilarityVerdict> {
    let a = check_ranks(m1, m2)?;
    let owned;
    let sample = match sample {
        Some(s) => s,
        None => {
            owned = cyclic_cores(&a, 6, DEFAULT_ENUMERATION_CAP)?;
            &owned
        }
    };
    let ratios: Vec<f64> = sample
        .iter()
        .filter(|g| !g.is_identity())
        .map(|g| m1.translation_length(g) / m2.translation_length(g))
        .collect();
    let Some(&first) = ratios.first() else {
        return Err(Error::DegenerateSample("no nontrivial element in the spectrum sample".into()));
    };
    let deviations: Vec<f64> = ratios.iter().map(|r| (r - first).abs()).collect();
    let spread = deviations.iter().copied().fold(0.0, f64::max);
    Ok(SimilarityVerdict {
        verdict: if spread > SPECTRUM_TOLERANCE { Verdict::Inequivalent } else { Verdict::Equivalent },
        scale: first,
        max_deviation: deviations,
        method: Method::Spectrum,
    })
}

/// dev(R) = max over the letter ball B_R of | |g|₁ − A·|g|₂ | with
/// A = log ω₂ / log ω₁, for R = 1..=r_max.
pub fn deviation_test(m1: &Metric, m2: &Metric, r_max: usize) -> Result<SimilarityVerdict> {
    let a = check_ranks(m1, m2)?;
    let scale = m2.growth().omega.ln() / m1.growth().omega.ln();
    let words = ball(&a, r_max, DEFAULT_ENUMERATION_CAP)?;
    let mut per_len = vec![0f64; r_max + 1];
    let worst: Vec<(usize, f64)> = words
        .par_iter()
        .map(|g| (g.len(), (m1.word_length(g) - scale * m2.word_length(g)).abs()))
        .collect();
    for (l, d) in worst {
        per_len[l] = per_len[l].max(d);
    }
    let mut dev = Vec::with_capacity(r_max);
    let mut run = per_len[0];
    for d in &per_len[1..] {
        run = run.max(*d);
        dev.push(run);
    }
    let s = slope(&dev);
    Ok(SimilarityVerdict {
        verdict: if s > GROWTH_SLOPE { Verdict::Inequivalent } else { Verdict::Equivalent },
        scale,
        max_deviation: dev,
        method: Method::Deviation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub xi: String,
    pub eta: String,
    pub depth: usize,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub rows: Vec<HolderRow>,
    pub max_abs: f64,
    pub verdict: SimilarityVerdict,
}

/// Pairs (ξ, η) with (ξ, η) = n letters for n ≤ `max_depth`, along the rays
/// a^∞, b^∞ and (ab)^∞ (the latter two need rank ≥ 2).
pub fn default_holder_pairs(alphabet: &Alphabet, max_depth: usize) -> Result<Vec<(BoundaryPoint, BoundaryPoint)>> {
    let g = |i: usize| Letter::generator(i % alphabet.rank());
    let bases = [
        ReducedWord::from_letters(vec![g(0)])?,
        ReducedWord::from_letters(vec![g(1)])?,
        ReducedWord::reduce([g(0), g(1)]),
    ];
    let mut out = Vec::new();
    for base in bases.iter().filter(|b| b.is_cyclically_reduced()) {
        let xi = BoundaryPoint::periodic(base.clone())?;
        for n in 0..=max_depth {
            let head = xi.prefix(n);
            let next = xi.letter(n);
            let t = alphabet
                .successors(head.last())
                .find(|&t| t != next)
                .expect("a tree vertex has at least two forward neighbours");
            let eta = BoundaryPoint::new(head, ReducedWord::from_letters(vec![t])?)?;
            out.push((xi.clone(), eta));
        }
    }
    Ok(out)
}

/// (ξ,η)₂·log ω₂ − (ξ,η)₁·log ω₁ over boundary pairs.
pub fn holder_test(m1: &Metric, m2: &Metric, pairs: &[(BoundaryPoint, BoundaryPoint)]) -> Result<HolderReport> {
    check_ranks(m1, m2)?;
    let (l1, l2) = (m1.growth().omega.ln(), m2.growth().omega.ln());
    let mut rows = Vec::with_capacity(pairs.len());
    for (xi, eta) in pairs {
        if xi == eta {
            return Err(Error::CoincidentPoints);
        }
        let depth = crate::group::common_prefix_len(xi, eta).expect("distinct points");
        let deviation = m2.gromov_product(xi, eta) * l2 - m1.gromov_product(xi, eta) * l1;
        rows.push(HolderRow {
            xi: xi.to_string(),
            eta: eta.to_string(),
            depth,
            deviation,
        });
    }
    let max_depth = rows.iter().map(|r| r.depth).max().unwrap_or(0);
    let mut per_depth = vec![0f64; max_depth + 1];
    for r in &rows {
        per_depth[r.depth] = per_depth[r.depth].max(r.deviation.abs());
    }
    let max_abs = per_depth.iter().copied().fold(0.0, f64::max);
    let verdict = SimilarityVerdict {
        verdict: if slope(&per_depth) > GROWTH_SLOPE { Verdict::Inequivalent } else { Verdict::Equivalent },
        scale: l2 / l1,
        max_deviation: per_depth,
        method: Method::Holder,
    };
    Ok(HolderReport { rows, max_abs, verdict })
}

/// [x,y,z,w] = d(x,z)d(y,w) / (d(x,w)d(y,z)) for d = e^{−ε(·,·)}.
pub fn cross_ratio(
    metric: &Metric,
    x: &BoundaryPoint,
    y: &BoundaryPoint,
    z: &BoundaryPoint,
    w: &BoundaryPoint,
) -> Result<f64> {
    let points = [x, y, z, w];
    if (0..4).any(|i| (i + 1..4).any(|j| points[i] == points[j])) {
        return Err(Error::CoincidentPoints);
    }
    let p = |u, v| metric.gromov_product(u, v);
    let eps = metric.growth().eps;
    Ok((-eps * (p(x, z) + p(y, w) - p(x, w) - p(y, z))).exp())
}

/// max over quadruples of |log cr₂ − (D₁/D₂)·log cr₁| with F the identity.
pub fn cross_ratio_distortion(m1: &Metric, m2: &Metric, quadruples: &[[BoundaryPoint; 4]]) -> Result<f64> {
    check_ranks(m1, m2)?;
    let exponent = m1.growth().dimension / m2.growth().dimension;
    quadruples.iter().try_fold(0f64, |acc, [x, y, z, w]| {
        let c1 = cross_ratio(m1, x, y, z, w)?.ln();
        let c2 = cross_ratio(m2, x, y, z, w)?.ln();
        Ok(acc.max((c2 - exponent * c1).abs()))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceBundle {
    pub verdict: Verdict,
    pub scale: f64,
    pub spectrum: SimilarityVerdict,
    pub deviation: SimilarityVerdict,
    pub holder: SimilarityVerdict,
}

impl EquivalenceBundle {
    /// Whether the corroborating tests point the same way as the spectrum.
    pub fn directions_agree(&self) -> bool {
        self.deviation.verdict == self.spectrum.verdict && self.holder.verdict == self.spectrum.verdict
    }

    pub fn to_json(&self) -> Value {
        json!({
            "verdict": self.verdict,
            "A": self.scale,
            "evidence": {
                "spectrum": self.spectrum.max_deviation,
                "deviation": self.deviation.max_deviation,
                "holder": self.holder.max_deviation,
            }
        })
    }
}

/// Spectrum test decides; deviation (R ≤ 10) and Hölder (depth ≤ 12)
/// corroborate. Disagreement downgrades nothing but is visible in the bundle.
pub fn equivalence_verdict(m1: &Metric, m2: &Metric) -> Result<EquivalenceBundle> {
    let spectrum = length_spectrum_test(m1, m2, None)?;
    let deviation = deviation_test(m1, m2, 10)?;
    let holder = holder_test(m1, m2, &default_holder_pairs(m1.alphabet(), 12)?)?.verdict;
    Ok(EquivalenceBundle {
        verdict: spectrum.verdict,
        scale: spectrum.scale,
        spectrum,
        deviation,
        holder,
    })
}

/// (dμ₁/dμ₂)^{1/2} on the cylinders of `depth`, the multiplier of the
/// intertwiner between the two representations when μ₁ ≪ μ₂ with step density.
pub fn intertwiner_multiplier<S: Scalar>(
    mu1: &MarkovMeasure<S>,
    mu2: &MarkovMeasure<S>,
    depth: usize,
) -> Result<Vec<S>> {
    if mu1.alphabet() != mu2.alphabet() {
        return Err(Error::InvalidParameter("measures live on different boundaries".into()));
    }
    let (p, q) = (mu1.masses(depth), mu2.masses(depth));
    (0..count(mu1.alphabet(), depth))
        .map(|i| {
            let r = p[i].clone() / q[i].clone();
            r.sqrt().ok_or_else(|| Error::InexactSqrt(r.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::ps_measure;
    use crate::exact::QuadSurd;
    use crate::metric::MetricSpec;
    use num_traits::One;

    fn metric(s: MetricSpec) -> Metric {
        Metric::new(s).unwrap()
    }

    fn pt(s: &str) -> BoundaryPoint {
        s.parse().unwrap()
    }

    #[test]
    fn spectrum_examples() {
        let std = metric(MetricSpec::standard(2));
        let double = metric(MetricSpec::weighted(vec![2.0, 2.0]));
        let w = metric(MetricSpec::weighted(vec![1.0, 2.0]));
        let srw = metric(MetricSpec::simple_random_walk(2));
        let v = length_spectrum_test(&std, &double, None).unwrap();
        assert_eq!(v.verdict, Verdict::Equivalent);
        assert!((v.scale - 0.5).abs() < 1e-12);
        assert_eq!(length_spectrum_test(&std, &w, None).unwrap().verdict, Verdict::Inequivalent);
        let g = length_spectrum_test(&srw, &std, None).unwrap();
        assert_eq!(g.verdict, Verdict::Equivalent);
        assert!((g.scale - 3f64.ln()).abs() < 1e-12);
        assert!(length_spectrum_test(&std, &w, Some(&[ReducedWord::identity()])).is_err());
    }

    #[test]
    fn deviation_examples() {
        let std = metric(MetricSpec::standard(2));
        let same = deviation_test(&std, &std, 6).unwrap();
        assert!((same.scale - 1.0).abs() < 1e-12 && same.max_deviation.iter().all(|d| *d == 0.0));
        let double = metric(MetricSpec::weighted(vec![2.0, 2.0]));
        let d = deviation_test(&std, &double, 6).unwrap();
        assert!((d.scale - 0.5).abs() < 1e-9 && d.max_deviation.iter().all(|x| *x < 1e-8));
        let w = metric(MetricSpec::weighted(vec![1.0, 2.0]));
        let d = deviation_test(&std, &w, 8).unwrap();
        assert_eq!(d.verdict, Verdict::Inequivalent);
        assert!(d.max_deviation.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn holder_examples() {
        let std = metric(MetricSpec::standard(2));
        let srw = metric(MetricSpec::simple_random_walk(2));
        let w = metric(MetricSpec::weighted(vec![1.0, 2.0]));
        let pairs = default_holder_pairs(std.alphabet(), 12).unwrap();
        assert_eq!(holder_test(&std, &std, &pairs).unwrap().max_abs, 0.0);
        assert!(holder_test(&std, &srw, &pairs).unwrap().max_abs < 1e-9);
        let diverging = holder_test(&std, &w, &pairs).unwrap();
        assert_eq!(diverging.verdict.verdict, Verdict::Inequivalent);
        assert!(diverging.verdict.max_deviation[12] > diverging.verdict.max_deviation[6]);
    }

    #[test]
    fn cross_ratio_identities() {
        let std = metric(MetricSpec::standard(2));
        let (x, y, z, w) = (pt("(a)"), pt("(b)"), pt("a(b)"), pt("b(a)"));
        let c = cross_ratio(&std, &x, &y, &z, &w).unwrap();
        assert!((c - 1.0 / 3.0).abs() < 1e-12);
        let swapped = cross_ratio(&std, &x, &y, &w, &z).unwrap();
        assert!((c * swapped - 1.0).abs() < 1e-12);
        assert!((cross_ratio(&std, &y, &x, &w, &z).unwrap() - c).abs() < 1e-15);
        assert_eq!(cross_ratio(&std, &x, &x, &z, &w), Err(Error::CoincidentPoints));
        let srw = metric(MetricSpec::simple_random_walk(2));
        let quads = [[x, y, z, w], [pt("(ab)"), pt("(B)"), pt("ab(A)"), pt("B(a)")]];
        assert!(cross_ratio_distortion(&std, &srw, &quads).unwrap() < 1e-9);
    }

    #[test]
    fn bundles() {
        let std = metric(MetricSpec::standard(2));
        let w = metric(MetricSpec::weighted(vec![1.0, 2.0]));
        let same = equivalence_verdict(&std, &std).unwrap();
        assert_eq!(same.verdict, Verdict::Equivalent);
        assert_eq!(same.scale, 1.0);
        let diff = equivalence_verdict(&std, &w).unwrap();
        assert_eq!(diff.verdict, Verdict::Inequivalent);
        assert!(diff.directions_agree());
        assert_eq!(diff.to_json()["verdict"], "inequivalent");
    }

    #[test]
    fn standard_and_srw_intertwine_trivially() {
        let mu1 = ps_measure::<QuadSurd>(&metric(MetricSpec::standard(2))).unwrap();
        let mu2 = ps_measure::<QuadSurd>(&metric(MetricSpec::simple_random_walk(2))).unwrap();
        assert!(intertwiner_multiplier(&mu1, &mu2, 5).unwrap().iter().all(|m| *m == QuadSurd::one()));
    }
}
