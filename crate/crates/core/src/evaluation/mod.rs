//! Coherence, topic-count selection and the model comparison test.

mod coherence;
mod selection;
mod ttest;

pub use coherence::{cv_coherence, npmi, window_counts, CoherenceConfig, CoherenceReport, WindowCounts};
pub use selection::{select_topic_count, KSweep, Normalization, SweepRow};
pub use ttest::{
    ln_gamma, pooled_t_test, regularized_incomplete_beta, student_t_sf, student_t_upper_quantile,
    SampleStats, TTestResult,
};
