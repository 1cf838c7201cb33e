use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{kernel_pairing, KernelSpec};
use super::pi::{p_half_l1_norm, p_tilde_sums, pairing_matrix};
use super::{OperatorTable, StepFunction};
use crate::boundary::{count, MarkovMeasure};
use crate::error::{Error, Result};
use crate::group::{Alphabet, ReducedWord};
use crate::metric::Metric;
use crate::scalar::Scalar;
use crate::shadows::{greedy_partition, ShadowParams};

#[derive(Clone, Debug, PartialEq)]
pub struct AveragedTerm<S> {
    pub word: ReducedWord,
    /// ∫_{V_i} K with the first kernel slot on the ǧ side.
    pub weight: S,
    pub norm: S,
}

/// S_R = Σ_i w_i·π̃(g_i) over the cells V_i of the greedy double-shadow
/// partition at radius R.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragedOperator<S> {
    alphabet: Alphabet,
    radius: f64,
    terms: Vec<AveragedTerm<S>>,
}

/// Builds S_R for the kernel K. V_i pairs cells (p, q) with p in the ĝ_i
/// factor and q in the ǧ_i factor; since ⟨π̃(g)φ, ψ⟩ concentrates on
/// φ(ǧ)·conj ψ(ĝ), the weight integrates K(ξ, η) over ξ ∈ q, η ∈ p.
pub fn s_r<S: Scalar>(
    mu: &MarkovMeasure<S>,
    metric: &Metric,
    radius: f64,
    kernel: &KernelSpec<S>,
    params: &ShadowParams,
) -> Result<AveragedOperator<S>> {
    let partition = greedy_partition(metric, radius, params)?;
    let grid = kernel.grid_integrals(mu, partition.depth);
    let terms = partition
        .cells
        .par_iter()
        .map(|cell| {
            let weight = cell.set.iter().fold(S::zero(), |acc, (p, q)| acc + grid.get(q, p));
            Ok(AveragedTerm {
                word: cell.owner.clone(),
                weight,
                norm: p_half_l1_norm(mu, &cell.owner)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AveragedOperator {
        alphabet: *metric.alphabet(),
        radius,
        terms,
    })
}

impl<S: Scalar> AveragedOperator<S> {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn terms(&self) -> &[AveragedTerm<S>] {
        &self.terms
    }

    pub fn total_weight(&self) -> S {
        self.terms.iter().fold(S::zero(), |a, t| a + t.weight.clone())
    }

    /// ⟨S_R χ_u, χ_v⟩ over u of depth `d_in`, v of depth `d_out`, row-major in u.
    pub fn pairing_matrix(&self, mu: &MarkovMeasure<S>, d_in: usize, d_out: usize) -> Result<Vec<S>> {
        let size = count(&self.alphabet, d_in) * count(&self.alphabet, d_out);
        self.terms
            .par_iter()
            .filter(|t| t.weight != S::zero())
            .try_fold(
                || vec![S::zero(); size],
                |mut acc, t| {
                    let c = t.weight.clone() / t.norm.clone();
                    for (x, y) in acc.iter_mut().zip(pairing_matrix(mu, &t.word, d_in, d_out)?) {
                        *x = x.clone() + c.clone() * y;
                    }
                    Ok(acc)
                },
            )
            .try_reduce(
                || vec![S::zero(); size],
                |mut x, y| {
                    for (p, q) in x.iter_mut().zip(y) {
                        *p = p.clone() + q;
                    }
                    Ok(x)
                },
            )
    }

    /// ⟨S_R φ, ψ⟩.
    pub fn pairing(&self, mu: &MarkovMeasure<S>, phi: &StepFunction<S>, psi: &StepFunction<S>) -> Result<S> {
        let m = self.pairing_matrix(mu, phi.depth(), psi.depth())?;
        let n_out = psi.coeffs().len();
        let mut acc = S::zero();
        for (u, x) in phi.coeffs().iter().enumerate() {
            for (v, y) in psi.coeffs().iter().enumerate() {
                acc = acc + x.clone() * y.conj() * m[u * n_out + v].clone();
            }
        }
        Ok(acc)
    }

    /// The compression of S_R to step functions: (S_R φ)_v = Σ_u φ_u·⟨S_R χ_u, χ_v⟩/μ(v).
    pub fn to_table(&self, mu: &MarkovMeasure<S>, d_in: usize, d_out: usize) -> Result<OperatorTable<S>> {
        let m = self.pairing_matrix(mu, d_in, d_out)?;
        let masses = mu.masses(d_out);
        let n_out = masses.len();
        let entries = m
            .into_iter()
            .enumerate()
            .filter(|(_, x)| *x != S::zero())
            .map(|(p, x)| (p / n_out, p % n_out, x / masses[p % n_out].clone()))
            .collect();
        OperatorTable::new(self.alphabet, d_in, d_out, entries)
    }

    /// max_η Σ_i w_i·P̃_{g_i}(η)/Σ_i w_i, resolved one level below the longest word.
    pub fn sup_density(&self, mu: &MarkovMeasure<S>) -> Result<f64> {
        let terms: Vec<_> = self.terms.iter().map(|t| (t.word.clone(), t.weight.to_f64())).collect();
        let depth = terms.iter().map(|(g, _)| g.len()).max().unwrap_or(0) + 1;
        let total = self.total_weight().to_f64();
        if total <= 0.0 {
            return Err(Error::DegenerateSample("kernel has zero mass".into()));
        }
        Ok(p_tilde_sums(mu, &terms, depth)?.into_iter().fold(0.0, f64::max) / total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub radius: f64,
    pub u: String,
    pub v: String,
    pub value: f64,
    pub target: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub radii: Vec<f64>,
    /// Per radius, max over pairs of residual/target (targets of zero count
    /// the raw residual).
    pub max_relative: Vec<f64>,
    /// Running maximum of `max_relative` from the right.
    pub envelope: Vec<f64>,
    /// Whether `max_relative` itself is non-increasing.
    pub monotone: bool,
    /// ⟨S_R𝟙, 𝟙⟩ per radius.
    pub identity: Vec<f64>,
}

impl ConvergenceReport {
    pub fn final_relative(&self) -> f64 {
        self.max_relative.last().copied().unwrap_or(f64::NAN)
    }

    /// Envelope at the last radius strictly below the envelope at the first.
    pub fn decreasing(&self) -> bool {
        match (self.envelope.first(), self.envelope.last()) {
            (Some(a), Some(b)) => self.envelope.len() > 1 && b < a,
            _ => false,
        }
    }
}

/// Residuals |⟨S_R χ_u, χ_v⟩ − ⟨T_K χ_u, χ_v⟩| for each radius and pair.
pub fn convergence_report<S: Scalar>(
    mu: &MarkovMeasure<S>,
    metric: &Metric,
    kernel: &KernelSpec<S>,
    radii: &[f64],
    pairs: &[(crate::boundary::Cylinder, crate::boundary::Cylinder)],
    params: &ShadowParams,
) -> Result<ConvergenceReport> {
    let a = *metric.alphabet();
    let d_in = pairs.iter().map(|(u, _)| u.depth()).max().unwrap_or(0);
    let d_out = pairs.iter().map(|(_, v)| v.depth()).max().unwrap_or(0);
    let targets: Vec<f64> = pairs
        .iter()
        .map(|(u, v)| {
            kernel_pairing(mu, kernel, &StepFunction::indicator(a, u), &StepFunction::indicator(a, v)).to_f64()
        })
        .collect();
    let n_out = count(&a, d_out);
    let mut rows = Vec::new();
    let mut max_relative = Vec::new();
    let mut identity = Vec::new();
    for &radius in radii {
        let op = s_r(mu, metric, radius, kernel, params)?;
        let m = op.pairing_matrix(mu, d_in, d_out)?;
        let mut worst = 0f64;
        let mut total = S::zero();
        for x in &m {
            total = total + x.clone();
        }
        identity.push(total.to_f64());
        for ((u, v), target) in pairs.iter().zip(&targets) {
            let sum = crate::boundary::descendant_range(&a, u.depth(), u.index(&a), d_in)
                .flat_map(|i| {
                    crate::boundary::descendant_range(&a, v.depth(), v.index(&a), d_out).map(move |j| (i, j))
                })
                .fold(S::zero(), |acc, (i, j)| acc + m[i * n_out + j].clone());
            let value = sum.to_f64();
            let residual = (value - target).abs();
            worst = worst.max(if *target > 0.0 { residual / target } else { residual });
            rows.push(ConvergenceRow {
                radius,
                u: u.to_string(),
                v: v.to_string(),
                value,
                target: *target,
                residual,
            });
        }
        max_relative.push(worst);
    }
    let mut envelope = max_relative.clone();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let monotone = max_relative.windows(2).all(|w| w[1] <= w[0]);
    Ok(ConvergenceReport {
        rows,
        radii: radii.to_vec(),
        max_relative,
        envelope,
        monotone,
        identity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{ps_measure, Cylinder};
    use crate::exact::QuadSurd;
    use crate::representation::inner_product;
    use num_traits::One;

    fn c(s: &str) -> Cylinder {
        Cylinder::new(s.parse().unwrap())
    }

    #[test]
    fn identity_row_is_exact() {
        let m = Metric::standard(2).unwrap();
        let mu = ps_measure::<QuadSurd>(&m).unwrap();
        let a = *m.alphabet();
        let k = KernelSpec::constant(a, QuadSurd::one()).unwrap();
        let params = ShadowParams::defaults(&m);
        for r in 1..=4 {
            let op = s_r(&mu, &m, r as f64, &k, &params).unwrap();
            assert_eq!(op.total_weight(), QuadSurd::one());
            let one = StepFunction::one(a);
            assert_eq!(op.pairing(&mu, &one, &one).unwrap(), QuadSurd::one());
        }
    }

    #[test]
    fn table_matches_pairing() {
        let m = Metric::standard(2).unwrap();
        let mu = ps_measure::<f64>(&m).unwrap();
        let a = *m.alphabet();
        let k = KernelSpec::indicator(a, &c("a"), &c("B")).unwrap();
        let op = s_r(&mu, &m, 3.0, &k, &ShadowParams::defaults(&m)).unwrap();
        let t = op.to_table(&mu, 1, 2).unwrap();
        let phi = StepFunction::from_fn(a, 1, |w| 1.0 + w.index(&a) as f64);
        let psi = StepFunction::indicator(a, &c("Ba"));
        let direct = op.pairing(&mu, &phi, &psi).unwrap();
        let via = inner_product(&mu, &t.apply(&phi).unwrap(), &psi).unwrap();
        assert!((direct - via).abs() < 1e-14);
    }

    #[test]
    fn orientation_follows_the_kernel() {
        // K = 1 on [a]×[b] is not symmetric, so the slot order is visible
        let m = Metric::standard(2).unwrap();
        let mu = ps_measure::<f64>(&m).unwrap();
        let a = *m.alphabet();
        let k = KernelSpec::indicator(a, &c("a"), &c("b")).unwrap();
        let (xa, xb) = (StepFunction::indicator(a, &c("a")), StepFunction::indicator(a, &c("b")));
        let mut last = 0.0;
        for r in [6.0, 7.0, 8.0] {
            let op = s_r(&mu, &m, r, &k, &ShadowParams::defaults(&m)).unwrap();
            let forward = op.pairing(&mu, &xa, &xb).unwrap();
            let backward = op.pairing(&mu, &xb, &xa).unwrap();
            assert!(forward > last && forward < 1.0 / 16.0, "{forward}");
            assert!(backward.abs() < 1e-15, "{backward}");
            last = forward;
        }
        assert!(last > 0.6 / 16.0);
    }

    #[test]
    fn sup_density_of_constant_kernel() {
        let m = Metric::standard(2).unwrap();
        let mu = ps_measure::<f64>(&m).unwrap();
        let k = KernelSpec::constant(*m.alphabet(), 1.0).unwrap();
        let op = s_r(&mu, &m, 4.0, &k, &ShadowParams::defaults(&m)).unwrap();
        let s = op.sup_density(&mu).unwrap();
        assert!(s.is_finite() && s >= 1.0 - 1e-12, "{s}");
    }
}
