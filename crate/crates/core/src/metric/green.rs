//! First-passage probabilities of symmetric nearest-neighbour random walks on F_k.
//!
//! On the tree, reaching w from 1 means crossing every edge of the geodesic
//! in turn, so F(1, w) = Π F_{w_i} and the Green metric −log F is the letter
//! weighted metric with ℓ_s = −log F_s.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Alphabet;

pub const GREEN_MAX_STEPS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenSolve<F> {
    /// F_s, probability of ever reaching s from the identity.
    pub first_passage: Vec<F>,
    /// c_s, probability that a walk started at s converges into the cylinder [s].
    pub convergence: Vec<F>,
    pub iterations: usize,
}

fn validate_walk<F: Float>(alphabet: &Alphabet, walk: &[F]) -> Result<()> {
    if walk.len() != alphabet.size() {
        return Err(Error::InvalidSpec("walk needs one probability per letter".into()));
    }
    if walk.iter().any(|&p| !(p > F::zero())) {
        return Err(Error::InvalidSpec("walk probabilities must all be positive".into()));
    }
    for s in alphabet.letters() {
        if walk[s.code()] != walk[s.inverse().code()] {
            return Err(Error::InvalidSpec(format!("walk is not symmetric at {s}")));
        }
    }
    let total = walk.iter().fold(F::zero(), |a, &b| a + b);
    if (total - F::one()).abs() > F::from(1e-12).unwrap().max(F::epsilon() * F::from(16.0).unwrap()) {
        return Err(Error::InvalidSpec("walk probabilities must sum to 1".into()));
    }
    Ok(())
}

/// Solves F_s = ν_s / (1 − Σ_{t≠s} ν_t F_{t⁻¹}) by iteration from F ≡ 0.
///
/// The iteration is monotone, so its limit is the minimal positive solution,
/// which is the first-passage vector.
pub fn green_weights<F: Float>(alphabet: &Alphabet, walk: &[F]) -> Result<GreenSolve<F>> {
    validate_walk(alphabet, walk)?;
    let n = alphabet.size();
    let tol = F::epsilon() * F::from(4.0).unwrap();
    let mut f = vec![F::zero(); n];
    for it in 1..=GREEN_MAX_STEPS {
        let next: Vec<F> = alphabet
            .letters()
            .map(|s| {
                let back = alphabet
                    .letters()
                    .filter(|&t| t != s)
                    .fold(F::zero(), |a, t| a + walk[t.code()] * f[t.inverse().code()]);
                walk[s.code()] / (F::one() - back)
            })
            .collect();
        let change = next.iter().zip(&f).fold(F::zero(), |a, (&x, &y)| a.max((x - y).abs()));
        f = next;
        if change <= tol {
            let convergence = alphabet
                .letters()
                .map(|s| {
                    let fi = f[s.inverse().code()];
                    (F::one() - fi) / (F::one() - fi * f[s.code()])
                })
                .collect();
            return Ok(GreenSolve {
                first_passage: f,
                convergence,
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "first-passage fixed point",
        iterations: GREEN_MAX_STEPS,
    })
}

impl<F: Float> GreenSolve<F> {
    /// Σ_s F_s c_s, which equals 1.
    pub fn total_mass(&self) -> F {
        self.first_passage
            .iter()
            .zip(&self.convergence)
            .fold(F::zero(), |a, (&f, &c)| a + f * c)
    }

    /// max_s |Σ_{t≠s⁻¹} F_t c_t − c_s|, which vanishes.
    pub fn harmonic_defect(&self, alphabet: &Alphabet) -> F {
        alphabet.letters().fold(F::zero(), |worst, s| {
            let sum = alphabet
                .letters()
                .filter(|&t| t != s.inverse())
                .fold(F::zero(), |a, t| a + self.first_passage[t.code()] * self.convergence[t.code()]);
            worst.max((sum - self.convergence[s.code()]).abs())
        })
    }

    /// Letter lengths −log F_s of the Green metric.
    pub fn letter_lengths(&self) -> Vec<F> {
        self.first_passage.iter().map(|f| -f.ln()).collect()
    }
}

/// Σ_g e^{λ|g|} ν(g) < ∞. Every walk representable here is finitely
/// supported, so the moment is a finite sum for every λ.
pub fn check_exp_moment<F: Float>(alphabet: &Alphabet, walk: &[F], _lambda: F) -> Result<bool> {
    validate_walk(alphabet, walk)?;
    Ok(true)
}
