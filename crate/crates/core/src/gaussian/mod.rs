//! Multivariate Gaussian densities, Gaussian mixtures and EM fitting.

mod component;
mod em;
mod io;
pub mod linalg;

pub use component::{log_density, CovarianceMode, CovarianceRep, GaussianComponent};
pub use em::{
    column_variances, e_step, kmeans, kmeans_plus_plus_seeds, fit_em, log_sum_exp, m_step,
    weighted_moments, EmConfig, EmptyClusterPolicy, GmmModel, InitMethod, Mixture,
    Responsibilities, EMPTY_MASS,
};
pub use io::GmmFile;

pub(crate) use em::argmax;
