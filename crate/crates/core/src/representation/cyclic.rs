use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::pi::pi;
use super::StepFunction;
use crate::boundary::{ancestor, count, MarkovMeasure};
use crate::error::Result;
use crate::group::{ball, DEFAULT_ENUMERATION_CAP};
use crate::scalar::Scalar;

/// Gram eigenvalues below this fraction of the largest are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CyclicityRow {
    pub max_word_len: usize,
    pub vectors: usize,
    pub rank: usize,
    /// max over depth-N indicators of ‖χ − proj χ‖/‖χ‖.
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CyclicityReport {
    pub depth: usize,
    pub rows: Vec<CyclicityRow>,
}

impl CyclicityReport {
    /// Residuals non-increasing in M, with differences below `floor` ignored.
    pub fn decreasing(&self, floor: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].max_residual <= w[0].max_residual + floor)
    }

    pub fn final_residual(&self) -> f64 {
        self.rows.last().map(|r| r.max_residual).unwrap_or(f64::NAN)
    }
}

/// How well span{π(g)𝟙 : |g| ≤ M} approximates the indicators of depth-N
/// cylinders in L²(μ), for M = 0..=max_word_len.
pub fn cyclicity_report<S: Scalar>(mu: &MarkovMeasure<S>, max_word_len: usize, depth: usize) -> Result<CyclicityReport> {
    let a = *mu.alphabet();
    let grid = (max_word_len + 1).max(depth);
    let masses = mu.masses(grid);
    let n = count(&a, grid);
    let weights: Vec<f64> = masses.iter().map(|m| m.to_f64().sqrt()).collect();
    let words = ball(&a, max_word_len, DEFAULT_ENUMERATION_CAP)?;
    let one = StepFunction::<S>::one(a);
    let mut columns: Vec<(usize, Vec<f64>)> = Vec::with_capacity(words.len());
    for g in &words {
        let v = pi(mu, g, &one)?.embed(grid)?;
        columns.push((g.len(), v.coeffs().iter().zip(&weights).map(|(x, w)| x.to_f64() * w).collect()));
    }
    let targets: Vec<DVector<f64>> = (0..count(&a, depth))
        .map(|c| DVector::from_iterator(n, (0..n).map(|i| if ancestor(&a, grid, i, depth) == c { weights[i] } else { 0.0 })))
        .collect();
    let mut rows = Vec::new();
    for m in 0..=max_word_len {
        let cols: Vec<&Vec<f64>> = columns.iter().filter(|(l, _)| *l <= m).map(|(_, v)| v).collect();
        let mat = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        // least squares through the Gram matrix, pseudo-inverted on its numerical range
        let eig = SymmetricEigen::new(mat.transpose() * &mat);
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > RANK_CUTOFF * top)
            .collect();
        let mut basis = &mat * eig.eigenvectors.select_columns(&keep);
        for (c, &i) in keep.iter().enumerate() {
            basis.column_mut(c).scale_mut(1.0 / eig.eigenvalues[i].sqrt());
        }
        let worst = targets
            .iter()
            .map(|b| {
                let proj = &basis * (basis.transpose() * b);
                (b - proj).norm() / b.norm()
            })
            .fold(0.0, f64::max);
        rows.push(CyclicityRow {
            max_word_len: m,
            vectors: cols.len(),
            rank: keep.len(),
            max_residual: worst,
        });
    }
    Ok(CyclicityReport { depth, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::ps_measure;
    use crate::metric::Metric;

    #[test]
    fn constants_are_reached_at_once() {
        let mu = ps_measure::<f64>(&Metric::standard(2).unwrap()).unwrap();
        let r = cyclicity_report(&mu, 1, 0).unwrap();
        assert!(r.rows[0].max_residual < 1e-12);
        assert_eq!(r.rows[0].rank, 1);
    }

    #[test]
    fn standard_depth_two() {
        let mu = ps_measure::<f64>(&Metric::standard(2).unwrap()).unwrap();
        let r = cyclicity_report(&mu, 2, 2).unwrap();
        assert!(r.decreasing(1e-10), "{r:?}");
        assert!(r.rows[0].max_residual > 0.5);
        // 3^{(w,ξ)} is triangular in the prefix indicators of w
        assert!(r.final_residual() < 1e-12);
    }
}
