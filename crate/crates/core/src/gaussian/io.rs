use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{CovarianceMode, CovarianceRep, EmConfig, GaussianComponent, GmmModel, Mixture};

/// JSON layout of a fitted mixture. Full covariances are stored row-major,
/// one flat array of V·V values per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFile {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub mode: CovarianceMode,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<f64>>,
    pub shrinkage: f64,
    pub ridge: f64,
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub config: EmConfig,
}

impl GmmFile {
    pub fn from_model(model: &GmmModel) -> Self {
        let mix = &model.mixture;
        let mode = model.config.covariance;
        GmmFile {
            k: mix.k(),
            v: mix.dim(),
            mode,
            weights: mix.weights.clone(),
            means: mix.components.iter().map(|c| c.mean.to_vec()).collect(),
            covariances: mix
                .components
                .iter()
                .map(|c| match &c.cov.full {
                    Some(m) => m.iter().copied().collect(),
                    None => c.cov.diag.to_vec(),
                })
                .collect(),
            shrinkage: model.config.shrinkage,
            ridge: model.ridge,
            loglik_trace: model.loglik_trace.clone(),
            iterations: model.iterations,
            converged: model.converged,
            seed: model.seed,
            config: model.config.clone(),
        }
    }

    pub fn into_model(self) -> Result<GmmModel> {
        let bad = |m: String| Error::Data(format!("model file: {m}"));
        if self.weights.len() != self.k || self.means.len() != self.k || self.covariances.len() != self.k {
            return Err(bad(format!("expected {} weights, means and covariances", self.k)));
        }
        let mut components = Vec::with_capacity(self.k);
        for (mean, cov) in self.means.into_iter().zip(self.covariances) {
            if mean.len() != self.v {
                return Err(bad(format!("mean of length {} but V = {}", mean.len(), self.v)));
            }
            let cov = match self.mode {
                CovarianceMode::Diagonal => {
                    if cov.len() != self.v {
                        return Err(bad("diagonal covariance has the wrong length".into()));
                    }
                    CovarianceRep::diagonal(Array1::from(cov), self.ridge)
                }
                CovarianceMode::FullShrinkage => {
                    let m = Array2::from_shape_vec((self.v, self.v), cov)
                        .map_err(|e| bad(format!("full covariance: {e}")))?;
                    CovarianceRep::from_matrix(m, self.shrinkage, self.ridge)?
                }
            };
            components.push(GaussianComponent {
                mean: Array1::from(mean),
                cov,
            });
        }
        if self.loglik_trace.is_empty() {
            return Err(bad("empty log-likelihood trace".into()));
        }
        Ok(GmmModel {
            mixture: Mixture {
                weights: self.weights,
                components,
            },
            loglik_trace: self.loglik_trace,
            iterations: self.iterations,
            converged: self.converged,
            seed: self.seed,
            ridge: self.ridge,
            config: self.config,
            reinitialized: Vec::new(),
            rejected_covariance_updates: 0,
        })
    }
}
