use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::linalg;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceMode {
    /// Per-dimension variances floored at the ridge.
    #[default]
    Diagonal,
    /// `(1 - λ) S + λ diag(S) + ε I`.
    FullShrinkage,
}

/// A regularized covariance matrix together with what is needed to evaluate
/// a Gaussian density against it.
#[derive(Debug, Clone)]
pub struct CovarianceRep {
    pub mode: CovarianceMode,
    /// Variances: the whole matrix in diagonal mode, its diagonal otherwise.
    pub diag: Array1<f64>,
    pub full: Option<Array2<f64>>,
    pub shrinkage: f64,
    pub ridge: f64,
    factor: Option<Array2<f64>>,
    log_det: f64,
}

impl CovarianceRep {
    /// Diagonal covariance with every variance floored at `ridge`.
    pub fn diagonal(variances: Array1<f64>, ridge: f64) -> Self {
        let diag = variances.mapv(|v| v.max(ridge));
        let log_det = diag.iter().map(|v| v.ln()).sum();
        CovarianceRep {
            mode: CovarianceMode::Diagonal,
            diag,
            full: None,
            shrinkage: 0.0,
            ridge,
            factor: None,
            log_det,
        }
    }

    /// Shrinks a sample covariance toward its diagonal and adds a ridge.
    pub fn shrunk(sample: &Array2<f64>, shrinkage: f64, ridge: f64) -> Result<Self> {
        let v = sample.nrows();
        let mut m = Array2::<f64>::zeros((v, v));
        for i in 0..v {
            for j in 0..v {
                // average the two triangles so the result is exactly symmetric
                let s = 0.5 * (sample[[i, j]] + sample[[j, i]]);
                m[[i, j]] = if i == j { s + ridge } else { (1.0 - shrinkage) * s };
            }
        }
        Self::from_matrix(m, shrinkage, ridge)
    }

    /// Wraps an already regularized matrix.
    pub fn from_matrix(matrix: Array2<f64>, shrinkage: f64, ridge: f64) -> Result<Self> {
        let factor = linalg::cholesky(&matrix).map_err(|pivot| {
            let d = matrix.diag();
            let (lo, hi) = d
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            Error::Numerical(format!(
                "covariance is not positive definite after regularization \
                 (pivot {pivot} of {}, diagonal range [{lo:e}, {hi:e}], ridge {ridge:e})",
                matrix.nrows()
            ))
        })?;
        let log_det = linalg::log_det(&factor);
        Ok(CovarianceRep {
            mode: CovarianceMode::FullShrinkage,
            diag: matrix.diag().to_owned(),
            full: Some(matrix),
            shrinkage,
            ridge,
            factor: Some(factor),
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Condition estimate from the factor (or the variance ratio in diagonal mode).
    pub fn condition_estimate(&self) -> f64 {
        match &self.factor {
            Some(l) => linalg::pivot_condition(l),
            None => {
                let (lo, hi) = self
                    .diag
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
                hi / lo
            }
        }
    }

    /// `(x - μ)ᵀ Σ⁻¹ (x - μ)` for a centred vector.
    pub fn mahalanobis_sq(&self, centred: ArrayView1<f64>) -> f64 {
        match &self.factor {
            Some(l) => linalg::solve_lower(l, centred).iter().map(|y| y * y).sum(),
            None => centred
                .iter()
                .zip(self.diag.iter())
                .map(|(d, v)| d * d / v)
                .sum(),
        }
    }

    /// The covariance as a dense matrix.
    pub fn to_dense(&self) -> Array2<f64> {
        match &self.full {
            Some(m) => m.clone(),
            None => Array2::from_diag(&self.diag),
        }
    }
}

/// One mixture component: a multivariate Gaussian.
#[derive(Debug, Clone)]
pub struct GaussianComponent {
    pub mean: Array1<f64>,
    pub cov: CovarianceRep,
}

/// `ln N(x | μ, Σ) = -½ [V ln 2π + ln|Σ| + (x-μ)ᵀ Σ⁻¹ (x-μ)]`.
pub fn log_density(x: ArrayView1<f64>, c: &GaussianComponent) -> Result<f64> {
    let v = c.mean.len();
    if x.len() != v || c.cov.dim() != v {
        return Err(Error::Data(format!(
            "dimension mismatch: point has {} entries, component has {v}",
            x.len()
        )));
    }
    let centred = &x - &c.mean;
    let q = c.cov.mahalanobis_sq(centred.view());
    Ok(-0.5 * (v as f64 * (2.0 * PI).ln() + c.cov.log_det() + q))
}
