use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_cells, inner_product, OperatorTable, StepFunction};
use crate::boundary::{ancestor, count, descendant_range, index_of, leaves, Leaf, MarkovMeasure};
use crate::error::{Error, Result};
use crate::group::{Letter, ReducedWord};
use crate::scalar::Scalar;

fn sqrt_rn<S: Scalar>(mu: &MarkovMeasure<S>, leaf: &Leaf) -> Result<S> {
    let rn = mu.leaf_rn(leaf);
    rn.sqrt().ok_or_else(|| Error::InexactSqrt(rn.to_string()))
}

/// Visits the triples of π(g) from depth `in_depth` to depth in_depth + |g|.
fn for_each_entry<S: Scalar>(
    mu: &MarkovMeasure<S>,
    g: &ReducedWord,
    in_depth: usize,
    mut f: impl FnMut(usize, usize, &S),
) -> Result<usize> {
    let a = *mu.alphabet();
    let out_depth = in_depth + g.len();
    check_cells(&a, out_depth)?;
    for leaf in leaves(&a, g) {
        let s = sqrt_rn(mu, &leaf)?;
        let (ls, lt) = (leaf.stem.len(), leaf.image.len());
        let start = index_of(&a, leaf.stem.letters());
        let image = index_of(&a, leaf.image.letters());
        let extra = out_depth - ls;
        let span = a.branching().pow(extra as u32);
        let image_depth = lt + extra;
        for (o, w) in descendant_range(&a, ls, start, out_depth).enumerate() {
            let x = image * span + o;
            f(ancestor(&a, image_depth, x, in_depth), w, &s);
        }
    }
    Ok(out_depth)
}

/// π(g)φ(ξ) = P_g(ξ)^{1/2}·φ(g⁻¹ξ), written at depth |φ| + |g| (at least 1 + |g|).
pub fn pi<S: Scalar>(mu: &MarkovMeasure<S>, g: &ReducedWord, phi: &StepFunction<S>) -> Result<StepFunction<S>> {
    let in_depth = phi.depth().max(1);
    let phi = phi.embed(in_depth)?;
    let a = *mu.alphabet();
    let mut out = vec![S::zero(); count(&a, in_depth + g.len())];
    let out_depth = for_each_entry(mu, g, in_depth, |i, w, s| {
        out[w] = s.clone() * phi.value(i).clone();
    })?;
    StepFunction::new(a, out_depth, out)
}

/// π(g) as an operator table from `in_depth` (at least 1).
pub fn pi_table<S: Scalar>(mu: &MarkovMeasure<S>, g: &ReducedWord, in_depth: usize) -> Result<OperatorTable<S>> {
    let in_depth = in_depth.max(1);
    let mut entries = Vec::new();
    let out_depth = for_each_entry(mu, g, in_depth, |i, w, s| entries.push((i, w, s.clone())))?;
    OperatorTable::new(*mu.alphabet(), in_depth, out_depth, entries)
}

/// ‖P_g^{1/2}‖₁ = ⟨π(g)𝟙, 𝟙⟩.
///
/// Sums μ(stem)·P_g^{1/2} over the leaves of g, with the masses of the
/// prefixes g[..m] and of the inverted suffixes g[m..]⁻¹ built incrementally.
pub fn p_half_l1_norm<S: Scalar>(mu: &MarkovMeasure<S>, g: &ReducedWord) -> Result<S> {
    let a = *mu.alphabet();
    let gl = g.letters();
    let n = gl.len();
    let extend = |m: &S, last: Option<Letter>, t: Letter| match last {
        None => mu.initial(t).clone(),
        Some(s) => m.clone() * mu.transition(s, t).clone(),
    };
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(S::one());
    for k in 0..n {
        let next = extend(&prefix[k], k.checked_sub(1).map(|j| gl[j]), gl[k]);
        prefix.push(next);
    }
    // suffix[m] is the mass of g[m..]⁻¹, whose last letter is g[m]⁻¹
    let mut suffix = vec![S::one(); n + 1];
    for m in (0..n).rev() {
        let last = (m + 1 < n).then(|| gl[m + 1].inverse());
        suffix[m] = extend(&suffix[m + 1], last, gl[m].inverse());
    }
    let mut total = S::zero();
    for m in 0..=n {
        let head_last = m.checked_sub(1).map(|j| gl[j]);
        let tail_last = (m < n).then(|| gl[m].inverse());
        for t in a.successors(head_last) {
            if m < n && t == gl[m] {
                continue;
            }
            let stem = extend(&prefix[m], head_last, t);
            let image = extend(&suffix[m], tail_last, t);
            let rn = image / stem.clone();
            let root = rn.sqrt().ok_or_else(|| Error::InexactSqrt(rn.to_string()))?;
            total = total + root * stem;
        }
    }
    Ok(total)
}

/// π̃(g) = π(g)/‖P_g^{1/2}‖₁ as an operator table.
pub fn pi_tilde<S: Scalar>(mu: &MarkovMeasure<S>, g: &ReducedWord, in_depth: usize) -> Result<OperatorTable<S>> {
    let norm = p_half_l1_norm(mu, g)?;
    Ok(pi_table(mu, g, in_depth)?.scale(&(S::one() / norm)))
}

/// The matrix ⟨π(g)χ_u, χ_v⟩ over u of depth `d_in` and v of depth `d_out`,
/// row-major in u.
pub fn pairing_matrix<S: Scalar>(mu: &MarkovMeasure<S>, g: &ReducedWord, d_in: usize, d_out: usize) -> Result<Vec<S>> {
    let a = *mu.alphabet();
    check_cells(&a, d_in)?;
    check_cells(&a, d_out)?;
    let n_out = count(&a, d_out);
    let mut m = vec![S::zero(); count(&a, d_in) * n_out];
    for leaf in leaves(&a, g) {
        let s = sqrt_rn(mu, &leaf)?;
        let (ls, lt) = (leaf.stem.len(), leaf.image.len());
        // refine until both the leaf and its image resolve the grids
        let extra = d_out.saturating_sub(ls).max(d_in.saturating_sub(lt));
        let cont = mu.masses(extra + 1);
        let t = leaf.stem.last().expect("leaf stems are nonempty");
        let lead = mu.initial(t).clone();
        let weight = s * mu.mass(&leaf.stem) / lead;
        let span = a.branching().pow(extra as u32);
        let (start, image) = (index_of(&a, leaf.stem.letters()), index_of(&a, leaf.image.letters()));
        for o in 0..span {
            let v = ancestor(&a, ls + extra, start * span + o, d_out);
            let u = ancestor(&a, lt + extra, image * span + o, d_in);
            let cell = &mut m[u * n_out + v];
            *cell = cell.clone() + weight.clone() * cont[t.code() * span + o].clone();
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checked: usize,
    pub max_defect: f64,
    pub failures: usize,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn merge(self, other: CheckReport) -> CheckReport {
        CheckReport {
            checked: self.checked + other.checked,
            max_defect: self.max_defect.max(other.max_defect),
            failures: self.failures + other.failures,
        }
    }

    fn empty() -> CheckReport {
        CheckReport {
            checked: 0,
            max_defect: 0.0,
            failures: 0,
        }
    }
}

fn compare<S: Scalar>(x: &S, y: &S, tol: f64) -> CheckReport {
    let defect = (x.clone() - y.clone()).abs_f64();
    let bad = if S::EXACT { x != y } else { defect > tol };
    CheckReport {
        checked: 1,
        max_defect: defect,
        failures: bad as usize,
    }
}

/// ⟨π(g)φ, π(g)ψ⟩ = ⟨φ, ψ⟩ for every g and every pair of test functions.
/// Exact scalars must agree exactly, floats within `tol`.
pub fn unitarity_check<S: Scalar>(
    mu: &MarkovMeasure<S>,
    words: &[ReducedWord],
    phis: &[StepFunction<S>],
    tol: f64,
) -> Result<CheckReport> {
    let base: Vec<Vec<S>> = phis
        .iter()
        .map(|p| phis.iter().map(|q| inner_product(mu, p, q)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    words
        .par_iter()
        .map(|g| {
            let moved = phis.iter().map(|p| pi(mu, g, p)).collect::<Result<Vec<_>>>()?;
            let mut report = CheckReport::empty();
            for i in 0..phis.len() {
                for j in i..phis.len() {
                    let lhs = inner_product(mu, &moved[i], &moved[j])?;
                    report = report.merge(compare(&lhs, &base[i][j], tol));
                }
            }
            Ok(report)
        })
        .try_reduce(CheckReport::empty, |a, b| Ok(a.merge(b)))
}

/// π(g)π(h)φ = π(gh)φ coefficientwise on a common refinement.
pub fn cocycle_check<S: Scalar>(
    mu: &MarkovMeasure<S>,
    pairs: &[(ReducedWord, ReducedWord)],
    phis: &[StepFunction<S>],
    tol: f64,
) -> Result<CheckReport> {
    pairs
        .par_iter()
        .map(|(g, h)| {
            let gh = g.multiply(h);
            let mut report = CheckReport::empty();
            for phi in phis {
                let lhs = pi(mu, g, &pi(mu, h, phi)?)?;
                let rhs = pi(mu, &gh, phi)?;
                let d = lhs.depth().max(rhs.depth());
                let (lhs, rhs) = (lhs.embed(d)?, rhs.embed(d)?);
                for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
                    report = report.merge(compare(x, y, tol));
                }
            }
            Ok(report)
        })
        .try_reduce(CheckReport::empty, |a, b| Ok(a.merge(b)))
}

/// Σ_i w_i·P̃_{g_i} on the cylinders of `depth`, which must exceed every |g_i|.
pub fn p_tilde_sums<S: Scalar>(mu: &MarkovMeasure<S>, terms: &[(ReducedWord, f64)], depth: usize) -> Result<Vec<f64>> {
    let a = *mu.alphabet();
    let longest = terms.iter().map(|(g, _)| g.len()).max().unwrap_or(0);
    if depth < longest + 1 {
        return Err(Error::InsufficientDepth {
            needed: longest + 1,
            got: depth,
        });
    }
    check_cells(&a, depth)?;
    let n = count(&a, depth);
    let diff = terms
        .par_iter()
        .try_fold(
            || vec![0f64; n + 1],
            |mut acc, (g, w)| {
                let ls = leaves(&a, g);
                let norm = p_half_l1_norm(mu, g)?.to_f64();
                for l in &ls {
                    let value = w * sqrt_rn(mu, l)?.to_f64() / norm;
                    let r = descendant_range(&a, l.stem.len(), index_of(&a, l.stem.letters()), depth);
                    acc[r.start] += value;
                    acc[r.end] -= value;
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0f64; n + 1],
            |mut x, y| {
                x.iter_mut().zip(&y).for_each(|(p, q)| *p += q);
                Ok(x)
            },
        )?;
    let mut out = Vec::with_capacity(n);
    let mut run = 0.0;
    for d in &diff[..n] {
        run += d;
        out.push(run);
    }
    Ok(out)
}
