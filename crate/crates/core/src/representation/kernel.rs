use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{check_cells, inner_product, OperatorTable, StepFunction};
use crate::boundary::{ancestor, count, descendant_range, index_of, word_at, Cylinder, MarkovMeasure};
use crate::error::{Error, Result};
use crate::group::Alphabet;
use crate::metric::Metric;
use crate::scalar::Scalar;

/// A nonnegative kernel K(ξ, η) constant on rectangles [u]×[v] of one depth.
/// Missing entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec<S> {
    alphabet: Alphabet,
    depth: usize,
    entries: BTreeMap<(usize, usize), S>,
}

impl<S: Scalar> KernelSpec<S> {
    pub fn new(alphabet: Alphabet, depth: usize, entries: BTreeMap<(usize, usize), S>) -> Result<Self> {
        check_cells(&alphabet, depth)?;
        let n = count(&alphabet, depth);
        for ((u, v), k) in &entries {
            if *u >= n || *v >= n {
                return Err(Error::InvalidParameter("kernel entry outside its grid".into()));
            }
            if !(k.to_f64() >= 0.0) {
                return Err(Error::InvalidParameter(format!("kernel value {k} is not nonnegative")));
            }
        }
        Ok(Self { alphabet, depth, entries })
    }

    pub fn constant(alphabet: Alphabet, value: S) -> Result<Self> {
        Self::new(alphabet, 0, BTreeMap::from([((0, 0), value)]))
    }

    /// 1 on [u]×[v], 0 elsewhere.
    pub fn indicator(alphabet: Alphabet, u: &Cylinder, v: &Cylinder) -> Result<Self> {
        let depth = u.depth().max(v.depth());
        let ru = descendant_range(&alphabet, u.depth(), u.index(&alphabet), depth);
        let rv = descendant_range(&alphabet, v.depth(), v.index(&alphabet), depth);
        let entries = ru.flat_map(|i| rv.clone().map(move |j| ((i, j), S::one()))).collect();
        Self::new(alphabet, depth, entries)
    }

    /// K(ξ, η) = ψ₀(η).
    pub fn second_slot(psi0: &StepFunction<S>) -> Result<Self> {
        let a = *psi0.alphabet();
        let d = psi0.depth();
        let n = count(&a, d);
        let entries = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|(_, v)| *psi0.value(*v) != S::zero())
            .map(|(u, v)| ((u, v), psi0.value(v).clone()))
            .collect();
        Self::new(a, d, entries)
    }

    pub fn from_fn(alphabet: Alphabet, depth: usize, f: impl Fn(&Cylinder, &Cylinder) -> S) -> Result<Self> {
        let cyl = crate::boundary::cylinders(&alphabet, depth);
        let mut entries = BTreeMap::new();
        for (i, u) in cyl.iter().enumerate() {
            for (j, v) in cyl.iter().enumerate() {
                let k = f(u, v);
                if k != S::zero() {
                    entries.insert((i, j), k);
                }
            }
        }
        Self::new(alphabet, depth, entries)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), S> {
        &self.entries
    }

    pub fn value(&self, u: usize, v: usize) -> S {
        self.entries.get(&(u, v)).cloned().unwrap_or_else(S::zero)
    }

    pub fn sup(&self) -> f64 {
        self.entries.values().map(|k| k.abs_f64()).fold(0.0, f64::max)
    }

    /// ∫_{[p]×[q]} K dμ² for cells p, q of depth `m`.
    pub fn grid_integrals(&self, mu: &MarkovMeasure<S>, m: usize) -> GridIntegrals<S> {
        let a = self.alphabet;
        if m >= self.depth {
            return GridIntegrals::Fine {
                kernel: self.clone(),
                depth: m,
                masses: mu.masses(m).to_vec(),
            };
        }
        let masses = mu.masses(self.depth);
        let mut map: HashMap<(usize, usize), S> = HashMap::new();
        for ((u, v), k) in &self.entries {
            let key = (ancestor(&a, self.depth, *u, m), ancestor(&a, self.depth, *v, m));
            let e = map.entry(key).or_insert_with(S::zero);
            *e = e.clone() + k.clone() * masses[*u].clone() * masses[*v].clone();
        }
        GridIntegrals::Coarse(map)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<_> = self
            .entries
            .iter()
            .map(|((u, v), k)| {
                serde_json::json!([
                    word_at(&self.alphabet, self.depth, *u).to_string(),
                    word_at(&self.alphabet, self.depth, *v).to_string(),
                    if S::EXACT { serde_json::json!(k.to_string()) } else { serde_json::json!(k.to_f64()) }
                ])
            })
            .collect();
        serde_json::json!({"depth": self.depth, "entries": entries})
    }
}

pub enum GridIntegrals<S> {
    Fine {
        kernel: KernelSpec<S>,
        depth: usize,
        masses: Vec<S>,
    },
    Coarse(HashMap<(usize, usize), S>),
}

impl<S: Scalar> GridIntegrals<S> {
    pub fn get(&self, p: usize, q: usize) -> S {
        match self {
            GridIntegrals::Fine { kernel, depth, masses } => {
                let a = &kernel.alphabet;
                kernel.value(ancestor(a, *depth, p, kernel.depth), ancestor(a, *depth, q, kernel.depth))
                    * masses[p].clone()
                    * masses[q].clone()
            }
            GridIntegrals::Coarse(map) => map.get(&(p, q)).cloned().unwrap_or_else(S::zero),
        }
    }
}

/// T_K φ(η) = ∫ K(ξ, η) φ(ξ) dμ(ξ) on step functions of the kernel depth,
/// so that ⟨T_K φ, ψ⟩ = ∫ φ(ξ)·conj ψ(η)·K(ξ, η) dμ².
pub fn t_kernel<S: Scalar>(mu: &MarkovMeasure<S>, kernel: &KernelSpec<S>) -> Result<OperatorTable<S>> {
    let masses = mu.masses(kernel.depth);
    let entries = kernel
        .entries
        .iter()
        .map(|((u, v), k)| (*u, *v, k.clone() * masses[*u].clone()))
        .collect();
    OperatorTable::new(kernel.alphabet, kernel.depth, kernel.depth, entries)
}

/// ⟨T_K φ, ψ⟩ exactly, for step functions of any depth.
pub fn kernel_pairing<S: Scalar>(
    mu: &MarkovMeasure<S>,
    kernel: &KernelSpec<S>,
    phi: &StepFunction<S>,
    psi: &StepFunction<S>,
) -> S {
    let f = phi.integrals(mu, kernel.depth);
    let g = psi.integrals(mu, kernel.depth);
    kernel
        .entries
        .iter()
        .fold(S::zero(), |acc, ((u, v), k)| acc + k.clone() * f[*u].clone() * g[*v].conj())
}

/// K_θ(ξ, η) = χ_E(ξ)·χ_{B(ξ,θ)}(η) / μ(B(ξ,θ)) for θ = e^{−ε·level}, where
/// B(ξ, θ) is the cylinder of points whose Gromov product with ξ is at least
/// `level`. The kernel depth is the deepest such ball and at least the depth
/// of E.
pub fn projection_kernel<S: Scalar>(
    mu: &MarkovMeasure<S>,
    metric: &Metric,
    e: &[Cylinder],
    level: f64,
) -> Result<KernelSpec<S>> {
    if !(level >= 0.0) {
        return Err(Error::InvalidParameter("projection level must be nonnegative".into()));
    }
    let a = *metric.alphabet();
    let ball_depth = (level / metric.min_letter_length() - 1e-9).ceil().max(0.0) as usize;
    let depth = e.iter().map(Cylinder::depth).max().unwrap_or(0).max(ball_depth);
    check_cells(&a, depth)?;
    let masses = mu.masses(depth);
    let mut entries = BTreeMap::new();
    for c in 0..count(&a, depth) {
        let stem = word_at(&a, depth, c);
        if !e.iter().any(|x| x.stem().is_prefix_of(&stem)) {
            continue;
        }
        let ball = metric.prefix_reaching(&stem, level);
        let b = index_of(&a, ball.letters());
        let range = descendant_range(&a, ball.len(), b, depth);
        let mass = range.clone().fold(S::zero(), |acc, i| acc + masses[i].clone());
        let k = S::one() / mass;
        for v in range {
            entries.insert((c, v), k.clone());
        }
    }
    KernelSpec::new(a, depth, entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRow {
    pub level: f64,
    pub theta: f64,
    pub kernel_depth: usize,
    pub value: f64,
    pub target: f64,
    pub residual: f64,
    /// μ(E)·‖φ‖_∞·λ(ψ)·θ.
    pub bound: f64,
}

impl ProjectionRow {
    pub fn within_bound(&self) -> bool {
        self.residual <= self.bound + 1e-12
    }
}

/// Residuals |⟨T_θ φ, ψ⟩ − ⟨χ_E φ, ψ⟩| along a grid of levels.
pub fn projection_report<S: Scalar>(
    mu: &MarkovMeasure<S>,
    metric: &Metric,
    e: &[Cylinder],
    phi: &StepFunction<S>,
    psi: &StepFunction<S>,
    levels: &[f64],
) -> Result<Vec<ProjectionRow>> {
    let a = *metric.alphabet();
    let e_depth = e.iter().map(Cylinder::depth).max().unwrap_or(0);
    let chi_e = StepFunction::from_fn(a, e_depth, |c| {
        if e.iter().any(|x| x.contains(c)) {
            S::one()
        } else {
            S::zero()
        }
    });
    let target = inner_product(mu, &chi_e.mul(phi)?, psi)?.to_f64();
    let mass_e = inner_product(mu, &chi_e, &chi_e)?.to_f64();
    let slope = phi.sup_norm() * psi.lipschitz(mu);
    let eps = mu.growth().eps;
    levels
        .iter()
        .map(|&level| {
            let k = projection_kernel(mu, metric, e, level)?;
            let value = kernel_pairing(mu, &k, phi, psi).to_f64();
            let theta = (-eps * level).exp();
            Ok(ProjectionRow {
                level,
                theta,
                kernel_depth: k.depth(),
                value,
                target,
                residual: (value - target).abs(),
                bound: mass_e * slope * theta,
            })
        })
        .collect()
}
