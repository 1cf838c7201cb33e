//! The boundary representation on L²(∂F_k, μ), restricted to step functions
//! on cylinders, and the operators built from it.

mod averaged;
mod cyclic;
mod kernel;
mod pi;

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::boundary::{ancestor, count, descendant_range, word_at, Cylinder, MarkovMeasure};
use crate::error::{Error, Result};
use crate::group::Alphabet;
use crate::scalar::Scalar;

pub use averaged::{convergence_report, s_r, AveragedOperator, ConvergenceReport, ConvergenceRow};
pub use cyclic::{cyclicity_report, CyclicityReport, CyclicityRow};
pub use kernel::{kernel_pairing, projection_kernel, projection_report, t_kernel, KernelSpec, ProjectionRow};
pub use pi::{
    cocycle_check, p_half_l1_norm, p_tilde_sums, pairing_matrix, pi, pi_table, pi_tilde, unitarity_check, CheckReport,
};

/// Largest step-function dimension handled, 4·3¹³ (depth 14 on F_2).
pub const MAX_CELLS: usize = 4 * 1_594_323;

fn check_cells(alphabet: &Alphabet, depth: usize) -> Result<()> {
    let cells = alphabet.size() as u128 * (alphabet.branching() as u128).pow(depth.saturating_sub(1) as u32);
    if cells > MAX_CELLS as u128 {
        return Err(Error::EnumerationCap {
            requested: cells,
            cap: MAX_CELLS as u128,
        });
    }
    Ok(())
}

/// A function constant on the cylinders of one depth.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction<S> {
    alphabet: Alphabet,
    depth: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> StepFunction<S> {
    pub fn new(alphabet: Alphabet, depth: usize, coeffs: Vec<S>) -> Result<Self> {
        check_cells(&alphabet, depth)?;
        if coeffs.len() != count(&alphabet, depth) {
            return Err(Error::InvalidParameter(format!(
                "depth {depth} needs {} coefficients, got {}",
                count(&alphabet, depth),
                coeffs.len()
            )));
        }
        Ok(Self { alphabet, depth, coeffs })
    }

    pub fn constant(alphabet: Alphabet, depth: usize, value: S) -> Self {
        Self {
            alphabet,
            depth,
            coeffs: vec![value; count(&alphabet, depth)],
        }
    }

    pub fn one(alphabet: Alphabet) -> Self {
        Self::constant(alphabet, 0, S::one())
    }

    pub fn zero(alphabet: Alphabet, depth: usize) -> Self {
        Self::constant(alphabet, depth, S::zero())
    }

    /// χ_c at the depth of c.
    pub fn indicator(alphabet: Alphabet, c: &Cylinder) -> Self {
        let mut coeffs = vec![S::zero(); count(&alphabet, c.depth())];
        coeffs[c.index(&alphabet)] = S::one();
        Self {
            alphabet,
            depth: c.depth(),
            coeffs,
        }
    }

    pub fn from_fn(alphabet: Alphabet, depth: usize, f: impl Fn(&Cylinder) -> S) -> Self {
        let coeffs = (0..count(&alphabet, depth))
            .map(|i| f(&Cylinder::new(word_at(&alphabet, depth, i))))
            .collect();
        Self { alphabet, depth, coeffs }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn value(&self, idx: usize) -> &S {
        &self.coeffs[idx]
    }

    /// The same function written on a finer grid.
    pub fn embed(&self, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::InsufficientDepth {
                needed: self.depth,
                got: depth,
            });
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        check_cells(&self.alphabet, depth)?;
        let coeffs = (0..count(&self.alphabet, depth))
            .map(|i| self.coeffs[ancestor(&self.alphabet, depth, i, self.depth)].clone())
            .collect();
        Ok(Self {
            alphabet: self.alphabet,
            depth,
            coeffs,
        })
    }

    fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        let d = self.depth.max(other.depth);
        let (a, b) = (self.embed(d)?, other.embed(d)?);
        Ok(Self {
            alphabet: self.alphabet,
            depth: d,
            coeffs: a.coeffs.into_iter().zip(b.coeffs).map(|(x, y)| f(x, y)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x * y)
    }

    pub fn scale(&self, c: &S) -> Self {
        Self {
            alphabet: self.alphabet,
            depth: self.depth,
            coeffs: self.coeffs.iter().map(|x| x.clone() * c.clone()).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().map(|x| x.abs_f64()).fold(0.0, f64::max)
    }

    /// ∫_c φ dμ for every cylinder c of `depth`.
    pub fn integrals(&self, mu: &MarkovMeasure<S>, depth: usize) -> Vec<S> {
        let cells = count(&self.alphabet, depth);
        if depth >= self.depth {
            let m = mu.masses(depth);
            (0..cells)
                .map(|i| self.coeffs[ancestor(&self.alphabet, depth, i, self.depth)].clone() * m[i].clone())
                .collect()
        } else {
            let m = mu.masses(self.depth);
            (0..cells)
                .map(|i| {
                    descendant_range(&self.alphabet, depth, i, self.depth)
                        .fold(S::zero(), |a, j| a + self.coeffs[j].clone() * m[j].clone())
                })
                .collect()
        }
    }

    /// Lipschitz constant for d_ε(ξ, η) = e^{−ε(ξ,η)}.
    pub fn lipschitz(&self, mu: &MarkovMeasure<S>) -> f64 {
        let eps = mu.growth().eps;
        let n = self.coeffs.len();
        let words: Vec<_> = (0..n).map(|i| word_at(&self.alphabet, self.depth, i)).collect();
        let log_theta: Vec<f64> = self.alphabet.letters().map(|l| mu.letter_scale(l).to_f64().ln()).collect();
        let mut best = 0f64;
        for i in 0..n {
            for j in i + 1..n {
                let diff = (self.coeffs[i].clone() - self.coeffs[j].clone()).abs_f64();
                if diff == 0.0 {
                    continue;
                }
                let shared = crate::group::common_prefix_len(&words[i], &words[j]).unwrap_or(self.depth);
                // the Gromov product in metric units is −log θ-weight / log ω
                let product: f64 =
                    words[i].letters()[..shared].iter().map(|l| log_theta[l.code()]).sum::<f64>() / -mu.growth().omega.ln();
                best = best.max(diff * (eps * product).exp());
            }
        }
        best
    }
}

/// ⟨φ, ψ⟩ = Σ_w φ_w·conj(ψ_w)·μ([w]) on a common refinement.
pub fn inner_product<S: Scalar>(mu: &MarkovMeasure<S>, phi: &StepFunction<S>, psi: &StepFunction<S>) -> Result<S> {
    let d = phi.depth.max(psi.depth);
    let (a, b) = (phi.embed(d)?, psi.embed(d)?);
    let m = mu.masses(d);
    Ok(a.coeffs
        .iter()
        .zip(&b.coeffs)
        .zip(m.iter())
        .fold(S::zero(), |acc, ((x, y), w)| acc + x.clone() * y.conj() * w.clone()))
}

/// A linear map from step functions of `in_depth` to step functions of
/// `out_depth`, stored as sparse triples: (Tφ)_out += value·φ_in.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTable<S> {
    alphabet: Alphabet,
    in_depth: usize,
    out_depth: usize,
    entries: Vec<(usize, usize, S)>,
}

impl<S: Scalar> OperatorTable<S> {
    pub fn new(alphabet: Alphabet, in_depth: usize, out_depth: usize, entries: Vec<(usize, usize, S)>) -> Result<Self> {
        let (ni, no) = (count(&alphabet, in_depth), count(&alphabet, out_depth));
        if entries.iter().any(|(i, o, _)| *i >= ni || *o >= no) {
            return Err(Error::InvalidParameter("operator entry outside its grid".into()));
        }
        Ok(Self {
            alphabet,
            in_depth,
            out_depth,
            entries,
        })
    }

    pub fn identity(alphabet: Alphabet, depth: usize) -> Self {
        Self {
            alphabet,
            in_depth: depth,
            out_depth: depth,
            entries: (0..count(&alphabet, depth)).map(|i| (i, i, S::one())).collect(),
        }
    }

    pub fn in_depth(&self) -> usize {
        self.in_depth
    }

    pub fn out_depth(&self) -> usize {
        self.out_depth
    }

    pub fn entries(&self) -> &[(usize, usize, S)] {
        &self.entries
    }

    /// Applies the map to φ, refining φ to `in_depth` first.
    pub fn apply(&self, phi: &StepFunction<S>) -> Result<StepFunction<S>> {
        let phi = phi.embed(self.in_depth)?;
        let mut out = vec![S::zero(); count(&self.alphabet, self.out_depth)];
        for (i, o, v) in &self.entries {
            out[*o] = out[*o].clone() + v.clone() * phi.coeffs[*i].clone();
        }
        StepFunction::new(self.alphabet, self.out_depth, out)
    }

    fn merged(alphabet: Alphabet, in_depth: usize, out_depth: usize, map: BTreeMap<(usize, usize), S>) -> Self {
        Self {
            alphabet,
            in_depth,
            out_depth,
            entries: map
                .into_iter()
                .filter(|(_, v)| *v != S::zero())
                .map(|((i, o), v)| (i, o, v))
                .collect(),
        }
    }

    /// self ∘ inner; the outputs of `inner` are refined to `self.in_depth`.
    pub fn compose(&self, inner: &OperatorTable<S>) -> Result<Self> {
        if inner.out_depth > self.in_depth {
            return Err(Error::InsufficientDepth {
                needed: inner.out_depth,
                got: self.in_depth,
            });
        }
        let mut by_input: Vec<Vec<(usize, &S)>> = vec![Vec::new(); count(&self.alphabet, self.in_depth)];
        for (i, o, v) in &self.entries {
            by_input[*i].push((*o, v));
        }
        let mut map: BTreeMap<(usize, usize), S> = BTreeMap::new();
        for (i, mid, v) in &inner.entries {
            for d in descendant_range(&self.alphabet, inner.out_depth, *mid, self.in_depth) {
                for (o, w) in &by_input[d] {
                    let e = map.entry((*i, *o)).or_insert_with(S::zero);
                    *e = e.clone() + (*w).clone() * v.clone();
                }
            }
        }
        Ok(Self::merged(self.alphabet, inner.in_depth, self.out_depth, map))
    }

    pub fn add(&self, other: &OperatorTable<S>) -> Result<Self> {
        if (self.in_depth, self.out_depth) != (other.in_depth, other.out_depth) {
            return Err(Error::InvalidParameter("operator depths differ".into()));
        }
        let mut map: BTreeMap<(usize, usize), S> = BTreeMap::new();
        for (i, o, v) in self.entries.iter().chain(&other.entries) {
            let e = map.entry((*i, *o)).or_insert_with(S::zero);
            *e = e.clone() + v.clone();
        }
        Ok(Self::merged(self.alphabet, self.in_depth, self.out_depth, map))
    }

    pub fn scale(&self, c: &S) -> Self {
        Self {
            entries: self.entries.iter().map(|(i, o, v)| (*i, *o, v.clone() * c.clone())).collect(),
            ..self.clone()
        }
    }

    /// `{in_depth, out_depth, entries: [[in_cylinder, out_cylinder, value]]}`.
    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|(i, o, v)| {
                let val = if S::EXACT { json!(v.to_string()) } else { json!(v.to_f64()) };
                json!([
                    word_at(&self.alphabet, self.in_depth, *i).to_string(),
                    word_at(&self.alphabet, self.out_depth, *o).to_string(),
                    val
                ])
            })
            .collect();
        json!({"in_depth": self.in_depth, "out_depth": self.out_depth, "entries": entries})
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::ps_measure;
    use crate::exact::QuadSurd;
    use crate::metric::Metric;
    use num_traits::{One, Zero};

    fn setup() -> (Alphabet, MarkovMeasure<QuadSurd>) {
        let m = Metric::standard(2).unwrap();
        (*m.alphabet(), ps_measure(&m).unwrap())
    }

    fn c(s: &str) -> Cylinder {
        Cylinder::new(s.parse().unwrap())
    }

    #[test]
    fn inner_products() {
        let (a, mu) = setup();
        let one = StepFunction::one(a);
        assert_eq!(inner_product(&mu, &one, &one).unwrap(), QuadSurd::one());
        let xa = StepFunction::indicator(a, &c("a"));
        let xb = StepFunction::indicator(a, &c("b"));
        assert_eq!(inner_product(&mu, &xa, &xa).unwrap(), QuadSurd::rational(1, 4));
        assert_eq!(inner_product(&mu, &xa, &xb).unwrap(), QuadSurd::zero());
        let deep = xa.embed(4).unwrap();
        assert_eq!(inner_product(&mu, &deep, &one).unwrap(), QuadSurd::rational(1, 4));
        assert!(deep.embed(2).is_err());
    }

    #[test]
    fn integrals_both_ways() {
        let (a, mu) = setup();
        let f = StepFunction::from_fn(a, 2, |w| QuadSurd::from_usize(w.index(&a)));
        let coarse = f.integrals(&mu, 1);
        let fine = f.integrals(&mu, 3);
        for (i, v) in coarse.iter().enumerate() {
            let s = descendant_range(&a, 1, i, 3).fold(QuadSurd::zero(), |x, j| x + fine[j].clone());
            assert_eq!(&s, v);
        }
    }

    #[test]
    fn lipschitz_of_indicators() {
        let (a, mu) = setup();
        let eps = mu.growth().eps;
        for (w, shared) in [("a", 0.0), ("ab", 1.0), ("abA", 2.0)] {
            let l = StepFunction::indicator(a, &c(w)).lipschitz(&mu);
            assert!((l - (eps * shared).exp()).abs() < 1e-9, "{w}: {l}");
        }
        assert_eq!(StepFunction::<QuadSurd>::one(a).lipschitz(&mu), 0.0);
    }

    #[test]
    fn operator_algebra() {
        let (a, _) = setup();
        let id = OperatorTable::<QuadSurd>::identity(a, 1);
        let two = id.add(&id).unwrap();
        assert_eq!(two, id.scale(&QuadSurd::from_usize(2)));
        let id2 = OperatorTable::<QuadSurd>::identity(a, 2);
        let f = StepFunction::indicator(a, &c("b"));
        assert_eq!(id2.compose(&id).unwrap().apply(&f).unwrap(), f.embed(2).unwrap());
        assert!(id.compose(&id2).is_err());
        let json = id.to_json();
        assert_eq!(json["entries"][0], serde_json::json!(["a", "a", "1"]));
    }
}
