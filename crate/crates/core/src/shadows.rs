//! Shadows of group elements on the boundary, cones, double shadows and the
//! greedy partition of ∂F_k² they induce.

use serde::{Deserialize, Serialize};

use crate::boundary::{count, descendant_range, word_at, Cylinder, GridSet, MarkovMeasure};
use crate::error::{Error, Result};
use crate::group::{hat, hat_inverse, BoundaryPoint, ReducedWord, DEFAULT_ENUMERATION_CAP};
use crate::metric::{Metric, LENGTH_SLACK};
use crate::scalar::Scalar;

/// Uncovered cells listed in a cover report beyond which only the count is kept.
pub const MAX_WITNESSES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowParams {
    /// ρ of the single shadows Σ(g, ρ).
    pub rho: f64,
    /// ρ of the double shadows Σ₂(g, ρ).
    pub rho_double: f64,
    /// Half width r of the annuli A_R.
    pub half_width: f64,
}

impl ShadowParams {
    /// r = ρ = max ℓ and ρ₂ = 2·max ℓ.
    pub fn defaults(metric: &Metric) -> Self {
        let l = metric.max_letter_length();
        Self {
            rho: l,
            rho_double: 2.0 * l,
            half_width: l,
        }
    }

    pub fn new(rho: f64, rho_double: f64, half_width: f64) -> Result<Self> {
        let p = Self {
            rho,
            rho_double,
            half_width,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho", self.rho), ("rho_double", self.rho_double), ("half_width", self.half_width)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be a nonnegative number, got {v}")));
            }
        }
        Ok(())
    }
}

/// Σ(g, ρ) = {ξ : (ĝ, ξ) ≥ |g| − ρ}, a cylinder around ĝ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shadow {
    pub owner: ReducedWord,
    pub cylinder: Cylinder,
    pub threshold: f64,
}

impl Shadow {
    pub fn contains(&self, metric: &Metric, xi: &BoundaryPoint) -> bool {
        metric.gromov_product(&hat(&self.owner), xi) >= self.threshold - LENGTH_SLACK
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("rho must be a nonnegative number, got {rho}")));
    }
    Ok(())
}

pub fn shadow(metric: &Metric, g: &ReducedWord, rho: f64) -> Result<Shadow> {
    check_rho(rho)?;
    let threshold = metric.word_length(g) - rho;
    Ok(Shadow {
        owner: g.clone(),
        cylinder: Cylinder::new(metric.prefix_reaching(&hat(g), threshold)),
        threshold,
    })
}

/// Σ₂(g, ρ) = B(ĝ, ·) × B(ǧ, ·) at Gromov-product level |g|/2 − ρ.
pub fn double_shadow(metric: &Metric, g: &ReducedWord, rho: f64) -> Result<(Cylinder, Cylinder)> {
    check_rho(rho)?;
    let threshold = metric.word_length(g) / 2.0 - rho;
    Ok((
        Cylinder::new(metric.prefix_reaching(&hat(g), threshold)),
        Cylinder::new(metric.prefix_reaching(&hat_inverse(g), threshold)),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub radius: f64,
    pub params: ShadowParams,
    pub annulus_size: usize,
    /// Depth of the checked cylinders.
    pub depth: usize,
    pub cells: usize,
    pub uncovered_count: usize,
    /// Up to [`MAX_WITNESSES`] uncovered cells.
    pub uncovered: Vec<Cylinder>,
}

impl CoverReport {
    pub fn covered(&self) -> bool {
        self.uncovered_count == 0
    }
}

fn mark(marks: &mut [i64], range: std::ops::Range<usize>) {
    marks[range.start] += 1;
    marks[range.end] -= 1;
}

/// Checks that {Σ(g, ρ) : g ∈ A_R} covers ∂F_k, one level below the deepest shadow.
pub fn shadows_cover(metric: &Metric, radius: f64, params: &ShadowParams) -> Result<CoverReport> {
    params.validate()?;
    let annulus = metric.annulus(radius, params.half_width, DEFAULT_ENUMERATION_CAP)?;
    let shadows: Vec<Shadow> = annulus
        .members
        .iter()
        .map(|g| shadow(metric, g, params.rho))
        .collect::<Result<_>>()?;
    let a = metric.alphabet();
    let depth = shadows.iter().map(|s| s.cylinder.depth()).max().unwrap_or(0) + 1;
    let cells = count(a, depth);
    let mut marks = vec![0i64; cells + 1];
    for s in &shadows {
        mark(&mut marks, descendant_range(a, s.cylinder.depth(), s.cylinder.index(a), depth));
    }
    let mut uncovered = Vec::new();
    let mut uncovered_count = 0;
    let mut running = 0;
    for (i, m) in marks[..cells].iter().enumerate() {
        running += m;
        if running == 0 {
            uncovered_count += 1;
            if uncovered.len() < MAX_WITNESSES {
                uncovered.push(Cylinder::new(word_at(a, depth, i)));
            }
        }
    }
    Ok(CoverReport {
        radius,
        params: *params,
        annulus_size: shadows.len(),
        depth,
        cells,
        uncovered_count,
        uncovered,
    })
}

/// C_R(ξ, ρ): elements of A_R whose shadow meets the ball {η : (ξ, η) ≥ ρ}.
pub fn cone_members(
    metric: &Metric,
    xi: &BoundaryPoint,
    rho: f64,
    radius: f64,
    params: &ShadowParams,
) -> Result<Vec<ReducedWord>> {
    params.validate()?;
    check_rho(rho)?;
    let ball = Cylinder::new(metric.prefix_reaching(xi, rho));
    let annulus = metric.annulus(radius, params.half_width, DEFAULT_ENUMERATION_CAP)?;
    let mut out = Vec::new();
    for g in annulus.members {
        if shadow(metric, &g, params.rho)?.cylinder.intersects(&ball) {
            out.push(g);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeGrowthRow {
    pub xi: BoundaryPoint,
    pub rho: f64,
    pub radius: f64,
    pub members: usize,
    pub annulus_size: usize,
    /// |C_R(ξ, ρ)|·ω^{ρ−R}.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeGrowthReport {
    pub rows: Vec<ConeGrowthRow>,
    /// Extremes of the ratio over rows with R ≥ ρ.
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl ConeGrowthReport {
    pub fn spread(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }
}

pub fn cone_growth_report(
    metric: &Metric,
    samples: &[BoundaryPoint],
    rhos: &[f64],
    radii: &[f64],
    params: &ShadowParams,
) -> Result<ConeGrowthReport> {
    let omega = metric.growth().omega;
    let mut rows = Vec::new();
    for xi in samples {
        for &rho in rhos {
            for &radius in radii {
                let members = cone_members(metric, xi, rho, radius, params)?.len();
                let annulus_size = metric.annulus(radius, params.half_width, DEFAULT_ENUMERATION_CAP)?.members.len();
                rows.push(ConeGrowthRow {
                    xi: xi.clone(),
                    rho,
                    radius,
                    members,
                    annulus_size,
                    ratio: members as f64 * omega.powf(rho - radius),
                });
            }
        }
    }
    let relevant = || rows.iter().filter(|r| r.radius >= r.rho);
    let min_ratio = relevant().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = relevant().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(ConeGrowthReport {
        rows,
        min_ratio,
        max_ratio,
    })
}

/// Finds g near `g0` with no cancellation in g·h, so |gh| = |g| + |h|.
///
/// Searches B(g0, τ), τ = 2·max ℓ, by distance, then longer |g|, then
/// shortlex, and returns g together with d(g0, g).
pub fn prevent_cancellation(metric: &Metric, g0: &ReducedWord, h: &ReducedWord) -> (ReducedWord, f64) {
    let tau = 2.0 * metric.max_letter_length();
    let steps = metric.ball(tau, DEFAULT_ENUMERATION_CAP).expect("radius-τ ball is small");
    let mut candidates: Vec<(f64, f64, ReducedWord)> = steps
        .iter()
        .map(|x| {
            let g = g0.multiply(x);
            (metric.word_length(x), metric.word_length(&g), g)
        })
        .collect();
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite lengths")
            .then(b.1.partial_cmp(&a.1).expect("finite lengths"))
            .then_with(|| (a.2.len(), &a.2).cmp(&(b.2.len(), &b.2)))
    });
    let (d, _, g) = candidates
        .into_iter()
        .find(|(_, _, g)| g.cancellation(h) == 0)
        .expect("on a tree a non-cancelling element lies within two letters");
    debug_assert!(
        metric.word_length(&g.multiply(h)) >= metric.word_length(&g) + metric.word_length(h) - 2.0 * tau - LENGTH_SLACK
    );
    (g, d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleCoverReport {
    pub radius: f64,
    pub params: ShadowParams,
    pub annulus_size: usize,
    pub depth: usize,
    pub cells: usize,
    pub uncovered_count: usize,
    pub uncovered: Vec<(Cylinder, Cylinder)>,
}

impl DoubleCoverReport {
    pub fn covered(&self) -> bool {
        self.uncovered_count == 0
    }
}

struct DoubleShadows {
    members: Vec<ReducedWord>,
    factors: Vec<(Cylinder, Cylinder)>,
    depth: usize,
}

fn double_shadows(metric: &Metric, radius: f64, params: &ShadowParams) -> Result<DoubleShadows> {
    params.validate()?;
    let annulus = metric.annulus(radius, params.half_width, DEFAULT_ENUMERATION_CAP)?;
    let factors: Vec<(Cylinder, Cylinder)> = annulus
        .members
        .iter()
        .map(|g| double_shadow(metric, g, params.rho_double))
        .collect::<Result<_>>()?;
    let depth = factors.iter().map(|(u, v)| u.depth().max(v.depth())).max().unwrap_or(0) + 1;
    Ok(DoubleShadows {
        members: annulus.members,
        factors,
        depth,
    })
}

fn rectangle_ranges(
    metric: &Metric,
    depth: usize,
    (u, v): &(Cylinder, Cylinder),
) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let a = metric.alphabet();
    (
        descendant_range(a, u.depth(), u.index(a), depth),
        descendant_range(a, v.depth(), v.index(a), depth),
    )
}

/// Checks that {Σ₂(g) : g ∈ A_R} covers ∂F_k² on the grid one level below the
/// deepest factor.
pub fn double_shadows_cover(metric: &Metric, radius: f64, params: &ShadowParams) -> Result<DoubleCoverReport> {
    let ds = double_shadows(metric, radius, params)?;
    let n = count(metric.alphabet(), ds.depth);
    let mut hit = vec![false; n * n];
    for f in &ds.factors {
        let (ru, rv) = rectangle_ranges(metric, ds.depth, f);
        for i in ru {
            hit[i * n + rv.start..i * n + rv.end].iter_mut().for_each(|h| *h = true);
        }
    }
    let a = metric.alphabet();
    let missing: Vec<usize> = (0..n * n).filter(|&p| !hit[p]).collect();
    Ok(DoubleCoverReport {
        radius,
        params: *params,
        annulus_size: ds.members.len(),
        depth: ds.depth,
        cells: n * n,
        uncovered_count: missing.len(),
        uncovered: missing
            .iter()
            .take(MAX_WITNESSES)
            .map(|&p| {
                (
                    Cylinder::new(word_at(a, ds.depth, p / n)),
                    Cylinder::new(word_at(a, ds.depth, p % n)),
                )
            })
            .collect(),
    })
}

/// V_i = Σ₂(g_i) minus the earlier double shadows.
#[derive(Clone, Debug)]
pub struct PartitionCell {
    pub owner: ReducedWord,
    pub shadow: (Cylinder, Cylinder),
    pub set: GridSet,
}

#[derive(Clone, Debug)]
pub struct Partition {
    pub radius: f64,
    pub depth: usize,
    /// Size of A_R; elements whose V_i is empty are not kept as cells.
    pub candidates: usize,
    pub cells: Vec<PartitionCell>,
}

impl Partition {
    /// max_i μ²(V_i)·ω^R.
    pub fn max_scaled_mass<S: Scalar>(&self, mu: &MarkovMeasure<S>) -> f64 {
        let scale = mu.growth().omega.powf(self.radius);
        self.cells
            .iter()
            .map(|c| c.set.product_mass(mu).to_f64() * scale)
            .fold(0.0, f64::max)
    }
}

/// Greedy partition of ∂F_k² by the double shadows of A_R in shortlex order.
pub fn greedy_partition(metric: &Metric, radius: f64, params: &ShadowParams) -> Result<Partition> {
    let ds = double_shadows(metric, radius, params)?;
    let a = *metric.alphabet();
    let n = count(&a, ds.depth);
    let mut owner: Vec<Option<u32>> = vec![None; n * n];
    let mut sizes = vec![0usize; ds.members.len()];
    for (k, f) in ds.factors.iter().enumerate() {
        let (ru, rv) = rectangle_ranges(metric, ds.depth, f);
        for i in ru {
            for slot in &mut owner[i * n + rv.start..i * n + rv.end] {
                if slot.is_none() {
                    *slot = Some(k as u32);
                    sizes[k] += 1;
                }
            }
        }
    }
    let uncovered = owner.iter().filter(|o| o.is_none()).count();
    if uncovered > 0 {
        return Err(Error::CoverFailure { uncovered });
    }
    let mut groups: Vec<Vec<(usize, usize)>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    for (p, o) in owner.iter().enumerate() {
        groups[o.expect("covered") as usize].push((p / n, p % n));
    }
    let cells = groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(k, pairs)| PartitionCell {
            owner: ds.members[k].clone(),
            shadow: ds.factors[k].clone(),
            set: GridSet::from_pairs(a, ds.depth, pairs),
        })
        .collect();
    Ok(Partition {
        radius,
        depth: ds.depth,
        candidates: ds.members.len(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::ps_measure;
    use crate::exact::QuadSurd;
    use crate::metric::MetricSpec;
    use num_traits::{One, Zero};

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    fn c(s: &str) -> Cylinder {
        Cylinder::new(w(s))
    }

    #[test]
    fn shadow_examples() {
        let m = Metric::standard(2).unwrap();
        assert_eq!(shadow(&m, &w("ab"), 0.5).unwrap().cylinder, c("ab"));
        assert_eq!(shadow(&m, &w("ab"), 2.0).unwrap().cylinder, Cylinder::full());
        assert_eq!(shadow(&m, &w("a"), 0.0).unwrap().cylinder, c("a"));
        assert!(shadow(&m, &w("a"), -1.0).is_err());
        let s = shadow(&m, &w("abA"), 1.0).unwrap();
        for xi in ["ab(a)", "ab(b)", "a(B)", "aab(a)"] {
            let xi: BoundaryPoint = xi.parse().unwrap();
            assert_eq!(s.contains(&m, &xi), s.cylinder.contains_point(&xi), "{xi}");
        }
    }

    #[test]
    fn double_shadow_examples() {
        let m = Metric::standard(2).unwrap();
        assert_eq!(double_shadow(&m, &w("abab"), 0.0).unwrap(), (c("ab"), c("BA")));
        assert_eq!(double_shadow(&m, &w("abab"), 2.0).unwrap(), (Cylinder::full(), Cylinder::full()));
        assert_eq!(
            double_shadow(&m, &ReducedWord::identity(), 0.0).unwrap(),
            (Cylinder::full(), Cylinder::full())
        );
    }

    #[test]
    fn covers() {
        let m = Metric::standard(2).unwrap();
        assert!(shadows_cover(&m, 4.0, &ShadowParams::new(1.0, 1.0, 0.0).unwrap()).unwrap().covered());
        assert!(ShadowParams::new(-1.0, 1.0, 0.0).is_err());
        let wt = Metric::new(MetricSpec::weighted(vec![1.0, 2.0])).unwrap();
        assert!(shadows_cover(&wt, 6.0, &ShadowParams::new(4.0, 4.0, 2.0).unwrap()).unwrap().covered());
        assert!(double_shadows_cover(&m, 6.0, &ShadowParams::new(1.0, 1.0, 1.0).unwrap()).unwrap().covered());
        assert!(double_shadows_cover(&m, 0.0, &ShadowParams::defaults(&m)).unwrap().covered());
        let tight = double_shadows_cover(&m, 6.0, &ShadowParams::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(tight.uncovered.len(), tight.uncovered_count.min(MAX_WITNESSES));
    }

    #[test]
    fn cone_matches_brute_force() {
        let m = Metric::standard(2).unwrap();
        let xi: BoundaryPoint = "(a)".parse().unwrap();
        let params = ShadowParams::new(0.0, 0.0, 0.0).unwrap();
        let members = cone_members(&m, &xi, 2.0, 5.0, &params).unwrap();
        // oracle: a shadow [g] meets [aa] iff one stem extends the other
        let brute: Vec<_> = crate::group::sphere(m.alphabet(), 5, 1 << 20)
            .unwrap()
            .into_iter()
            .filter(|g| g.letters()[..2] == w("aa").letters()[..])
            .collect();
        assert_eq!(members, brute);
        assert_eq!(members.len(), 27);
        assert_eq!(cone_members(&m, &xi, 0.0, 5.0, &params).unwrap().len(), 324);
        let small = cone_members(&m, &xi, 3.0, 2.0, &params).unwrap();
        assert!(!small.is_empty() && small.len() <= 36);
    }

    #[test]
    fn prevent_cancellation_examples() {
        let m = Metric::standard(2).unwrap();
        let (g, tau) = prevent_cancellation(&m, &w("a"), &w("Ab"));
        assert_eq!(g.cancellation(&w("Ab")), 0);
        assert!(tau <= 2.0);
        assert_eq!(m.word_length(&g.multiply(&w("Ab"))), m.word_length(&g) + 2.0);
        assert_eq!(prevent_cancellation(&m, &w("ab"), &ReducedWord::identity()), (w("ab"), 0.0));
        assert_eq!(prevent_cancellation(&m, &ReducedWord::identity(), &w("ab")).0, ReducedWord::identity());
        // oracle: every element within distance 2 of g0 that avoids cancellation is at least as far
        for g0 in crate::group::ball(m.alphabet(), 3, 1 << 20).unwrap() {
            for h in crate::group::ball(m.alphabet(), 2, 1 << 20).unwrap() {
                let (g, d) = prevent_cancellation(&m, &g0, &h);
                assert!(d <= 2.0);
                let best = crate::group::ball(m.alphabet(), 2, 1 << 20)
                    .unwrap()
                    .iter()
                    .map(|x| g0.multiply(x))
                    .filter(|g| g.cancellation(&h) == 0)
                    .map(|g| m.distance(&g0, &g))
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(d, best);
                assert_eq!(g.cancellation(&h), 0);
            }
        }
    }

    #[test]
    fn partition_is_exact() {
        let m = Metric::standard(2).unwrap();
        let mu = ps_measure::<QuadSurd>(&m).unwrap();
        let params = ShadowParams::defaults(&m);
        let p = greedy_partition(&m, 4.0, &params).unwrap();
        let total = p.cells.iter().fold(QuadSurd::zero(), |acc, c| acc + c.set.product_mass(&mu));
        assert_eq!(total, QuadSurd::one());
        for (i, x) in p.cells.iter().enumerate() {
            for y in &p.cells[i + 1..] {
                assert!(x.set.is_disjoint(&y.set));
            }
        }
        let first = &p.cells[0];
        let full = GridSet::rectangle(*m.alphabet(), p.depth, &first.shadow.0, &first.shadow.1).unwrap();
        assert_eq!(first.set, full);
    }
}
