//! Topic modelling with multivariate Gaussian mixtures.
//!
//! Documents are embedded as TF-IDF rows, a Gaussian mixture is fitted to the
//! rows with EM, and every mixture component is read as a topic. Keywords are
//! ranked by the mean-covariance contribution score (the term's mean TF-IDF
//! times the sum of its squared covariances). A collapsed Gibbs LDA sampler,
//! Cv coherence and a pooled-variance t-test provide the comparison baseline.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod gaussian;
pub mod lda;
pub mod topics;
pub mod vectorizer;

pub use error::{Error, Result};
