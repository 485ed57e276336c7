use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Volatilities and a correlation matrix; the covariance is `vol_i vol_j ρ_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub vols: Vec<f64>,
    pub correlations: Vec<Vec<f64>>,
}

/// Lower-triangular `Λ` with `ΛΛᵀ = M`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerFactor {
    pub rows: Vec<Vec<f64>>,
}

const TOL: f64 = 1e-12;

impl CovarianceSpec {
    pub fn dim(&self) -> usize {
        self.vols.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vols.len();
        if self.correlations.len() != n || self.correlations.iter().any(|r| r.len() != n) {
            return domain(format!("correlation matrix must be {n}x{n}"));
        }
        for (i, &v) in self.vols.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return domain(format!("vol[{i}] = {v} must be finite and >= 0"));
            }
        }
        for i in 0..n {
            if (self.correlations[i][i] - 1.0).abs() > TOL {
                return domain(format!("correlation[{i}][{i}] must be 1"));
            }
            for j in 0..n {
                let c = self.correlations[i][j];
                if !(c.abs() <= 1.0) {
                    return domain(format!("correlation[{i}][{j}] = {c} outside [-1, 1]"));
                }
                if (c - self.correlations[j][i]).abs() > TOL {
                    return domain(format!("correlation matrix not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(())
    }

    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.vols[i] * self.vols[j] * self.correlations[i][j]).collect())
            .collect()
    }
}

impl LowerFactor {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `Λ z` for a vector of independent draws.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| self.rows[i][k] * self.rows[j][k]).sum())
                    .collect()
            })
            .collect()
    }
}

/// Cholesky factor of the covariance, tolerating semidefinite input.
///
/// A vanishing pivot (within `1e-12` of the largest diagonal entry) zeroes its
/// column, provided the remaining column residual also vanishes. Any negative
/// pivot reports the most negative eigendirection of the covariance.
pub fn factor_covariance(spec: &CovarianceSpec) -> Result<LowerFactor> {
    spec.validate()?;
    let m = spec.covariance();
    let n = m.len();
    let scale = (0..n).map(|i| m[i][i]).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let tol = TOL * scale;
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let d = m[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if d > tol {
            let pivot = d.sqrt();
            l[j][j] = pivot;
            for i in j + 1..n {
                let s = m[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                l[i][j] = s / pivot;
            }
        } else if d >= -tol {
            for i in j + 1..n {
                let s = m[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if s.abs() > tol.sqrt() * scale.sqrt() {
                    return Err(indefinite(&m));
                }
            }
        } else {
            return Err(indefinite(&m));
        }
    }
    Ok(LowerFactor { rows: l })
}

fn indefinite(m: &[Vec<f64>]) -> Error {
    let n = m.len();
    let mat = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let eig = SymmetricEigen::new(mat);
    let (idx, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty matrix");
    Error::Indefinite {
        eigenvalue: value,
        direction: eig.eigenvectors.column(idx).iter().copied().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr2(rho: f64) -> CovarianceSpec {
        CovarianceSpec { vols: vec![1.0, 1.0], correlations: vec![vec![1.0, rho], vec![rho, 1.0]] }
    }

    #[test]
    fn two_by_two_factor() {
        let f = factor_covariance(&corr2(0.5)).unwrap();
        assert_eq!(f.rows[0], vec![1.0, 0.0]);
        assert!((f.rows[1][0] - 0.5).abs() < 1e-15);
        assert!((f.rows[1][1] - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn perfectly_correlated_is_semidefinite() {
        let f = factor_covariance(&corr2(1.0)).unwrap();
        assert_eq!(f.rows[1], vec![1.0, 0.0]);
    }

    #[test]
    fn three_by_three_inconsistent_correlations_are_refused() {
        let spec = CovarianceSpec {
            vols: vec![1.0; 3],
            correlations: vec![vec![1.0, 0.9, -0.9], vec![0.9, 1.0, 0.9], vec![-0.9, 0.9, 1.0]],
        };
        match factor_covariance(&spec) {
            Err(Error::Indefinite { eigenvalue, direction }) => {
                assert!(eigenvalue < 0.0);
                assert_eq!(direction.len(), 3);
            }
            other => panic!("expected indefinite, got {other:?}"),
        }
    }
}
