//! Bowen-type root finding for the growth rate of a letter-weighted tree metric.
//!
//! With letter lengths ℓ_s the transfer matrix is M(θ)_{s,t} = θ^{ℓ_t}·[t ≠ s⁻¹].
//! Its spectral radius increases strictly from 0 to at least 2k − 1 on (0, 1],
//! and the decay base θ* of the metric is the unique root of ρ(M(θ)) = 1.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::EpsPolicy;
use crate::error::{Error, Result};
use crate::group::{Alphabet, Letter};

pub const BISECTION_MAX_STEPS: usize = 10_000;
pub const POWER_MAX_STEPS: usize = 10_000;

/// Growth constants of a metric: decay base θ, ω = θ⁻¹, visual parameter ε,
/// dimension D = −ln θ / ε and the Perron vectors of M(θ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthData<F> {
    pub theta: F,
    pub omega: F,
    pub eps: F,
    pub dimension: F,
    /// Right eigenvector v of M(θ), normalized to sum 1.
    pub perron_right: Vec<F>,
    /// Left eigenvector u of M(θ), normalized to sum 1.
    pub perron_left: Vec<F>,
    /// ρ(M(θ)) at the returned θ.
    pub spectral_radius: F,
}

pub(crate) fn tolerance<F: Float>() -> F {
    F::from(1e-12).unwrap().max(F::epsilon() * F::from(64.0).unwrap())
}

pub fn transfer_matrix<F: Float>(alphabet: &Alphabet, lengths: &[F], theta: F) -> Vec<Vec<F>> {
    let weights: Vec<F> = lengths.iter().map(|&l| theta.powf(l)).collect();
    alphabet
        .letters()
        .map(|s| {
            alphabet
                .letters()
                .map(|t| if t == s.inverse() { F::zero() } else { weights[t.code()] })
                .collect()
        })
        .collect()
}

/// Dominant eigenpair of a primitive nonnegative matrix by power iteration.
/// `transpose` selects the left eigenvector.
pub fn perron_eigen<F: Float>(matrix: &[Vec<F>], transpose: bool) -> Result<(F, Vec<F>)> {
    let n = matrix.len();
    let tol = tolerance::<F>();
    let mut v = vec![F::one() / F::from(n).unwrap(); n];
    let mut lambda = F::zero();
    for _ in 0..POWER_MAX_STEPS {
        let mut next = vec![F::zero(); n];
        for i in 0..n {
            for j in 0..n {
                let m = if transpose { matrix[j][i] } else { matrix[i][j] };
                next[i] = next[i] + m * v[j];
            }
        }
        let total = next.iter().fold(F::zero(), |a, &b| a + b);
        if total <= F::zero() {
            return Err(Error::InvalidParameter("transfer matrix is not positive".into()));
        }
        // v sums to one, so the total is the Rayleigh-type estimate of λ
        let new_lambda = total;
        next.iter_mut().for_each(|x| *x = *x / total);
        let change = next
            .iter()
            .zip(&v)
            .fold(F::zero(), |a, (&x, &y)| a.max((x - y).abs()));
        let settled = change <= tol && (new_lambda - lambda).abs() <= tol * new_lambda.max(F::one());
        v = next;
        lambda = new_lambda;
        if settled {
            return Ok((lambda, v));
        }
    }
    Err(Error::NonConvergence {
        what: "power iteration",
        iterations: POWER_MAX_STEPS,
    })
}

pub fn spectral_radius<F: Float>(alphabet: &Alphabet, lengths: &[F], theta: F) -> Result<F> {
    perron_eigen(&transfer_matrix(alphabet, lengths, theta), false).map(|(l, _)| l)
}

/// Solves ρ(M(θ)) = 1 by bisection on (0, 1) and fixes ε by the policy.
pub fn critical_exponent<F: Float>(alphabet: &Alphabet, lengths: &[F], policy: EpsPolicy) -> Result<GrowthData<F>> {
    if lengths.len() != alphabet.size() || lengths.iter().any(|&l| !(l > F::zero()) || !l.is_finite()) {
        return Err(Error::InvalidSpec("letter lengths must be positive and finite, one per letter".into()));
    }
    for s in alphabet.letters() {
        if lengths[s.code()] != lengths[s.inverse().code()] {
            return Err(Error::InvalidSpec(format!("length of {s} differs from its inverse")));
        }
    }
    let tol = tolerance::<F>();
    let (mut lo, mut hi) = (F::zero(), F::one());
    let two = F::from(2.0).unwrap();
    let mut steps = 0;
    while hi - lo > tol {
        if steps == BISECTION_MAX_STEPS {
            return Err(Error::NonConvergence {
                what: "critical exponent bisection",
                iterations: steps,
            });
        }
        let mid = (lo + hi) / two;
        if spectral_radius(alphabet, lengths, mid)? < F::one() {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let theta = (lo + hi) / two;
    let m = transfer_matrix(alphabet, lengths, theta);
    let (rho, perron_right) = perron_eigen(&m, false)?;
    let (_, perron_left) = perron_eigen(&m, true)?;
    let log_omega = -theta.ln();
    let (eps, dimension) = match policy {
        EpsPolicy::Dimension { dimension } => {
            let d = F::from(dimension).unwrap();
            (log_omega / d, d)
        }
        EpsPolicy::Fixed { eps } => {
            let e = F::from(eps).unwrap();
            (e, log_omega / e)
        }
    };
    if !(dimension > F::one()) {
        return Err(Error::InvalidSpec(format!(
            "visual parameter gives dimension {:?}, which must exceed 1",
            dimension.to_f64()
        )));
    }
    Ok(GrowthData {
        theta,
        omega: theta.recip(),
        eps,
        dimension,
        perron_right,
        perron_left,
        spectral_radius: rho,
    })
}

/// Weighted length of a letter sequence under per-letter lengths.
pub(crate) fn weighted<F: Float>(lengths: &[F], letters: impl IntoIterator<Item = Letter>) -> F {
    letters.into_iter().fold(F::zero(), |a, l| a + lengths[l.code()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    #[test]
    fn standard_root_is_one_over_three() {
        let g = critical_exponent(&f2(), &[1.0f64; 4], EpsPolicy::default()).unwrap();
        assert!((g.theta - 1.0 / 3.0).abs() < 1e-12);
        assert!((g.omega - 3.0).abs() < 1e-11);
        assert!((g.dimension - 2.0).abs() < 1e-15);
        assert!((g.eps - 3f64.ln() / 2.0).abs() < 1e-12);
        let f3 = Alphabet::new(3).unwrap();
        let g3 = critical_exponent(&f3, &[1.0f64; 6], EpsPolicy::default()).unwrap();
        assert!((g3.theta - 0.2).abs() < 1e-12);
    }

    #[test]
    fn weighted_root_matches_cubic() {
        // oracle: bisection directly on 3x³ + x² + x − 1
        let cubic = |x: f64| 3.0 * x * x * x + x * x + x - 1.0;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cubic(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let x = 0.5 * (lo + hi);
        assert!((x - 0.469396).abs() < 1e-6);
        let g = critical_exponent(&f2(), &[1.0, 1.0, 2.0, 2.0], EpsPolicy::default()).unwrap();
        assert!((g.theta - x).abs() < 1e-11, "{} vs {}", g.theta, x);
        assert!((g.spectral_radius - 1.0).abs() < 1e-10);
    }

    #[test]
    fn single_precision_solve() {
        let g = critical_exponent(&f2(), &[1.0f32; 4], EpsPolicy::default()).unwrap();
        assert!((g.theta - 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn bracket_is_valid() {
        let lengths = [1.0, 1.0, 2.0, 2.0];
        assert!(spectral_radius(&f2(), &lengths, 1e-9f64).unwrap() < 1e-8);
        assert!(spectral_radius(&f2(), &lengths, 1.0f64).unwrap() >= 3.0 - 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(critical_exponent(&f2(), &[1.0, 2.0, 1.0, 1.0], EpsPolicy::default()).is_err());
        assert!(critical_exponent(&f2(), &[0.0f64; 4], EpsPolicy::default()).is_err());
        // ε too large pushes D below 1
        assert!(critical_exponent(&f2(), &[1.0f64; 4], EpsPolicy::Fixed { eps: 2.0 }).is_err());
    }
}
