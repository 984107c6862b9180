//! Evaluation metrics, simple baselines, Ward clustering and survival
//! statistics.

mod baselines;
mod metrics;
mod survival;
mod ward;

pub use baselines::{gaussian_nb, knn, GaussianNb};
pub use metrics::{classification_metrics, ClassificationMetrics, ConfusionMatrix};
pub use survival::{chi_square_sf, km_estimate, logrank_test, KmCurve, LogRankResult};
pub use ward::{ward_cluster, WardResult};
