//! The hybrid classifier: graph convolution stack `h` fused additively with a
//! relation head, plus training and Monte-Carlo cross-validation.

mod config;
mod cv;
mod hybrid;
mod train;

pub use config::{ModelConfig, Precision, RelationKind};
pub use cv::{
    monte_carlo_cv, stratified_split, CvReport, CvSummary, GaussianNbMethod, KnnMethod, Method,
    MetricSummary, ModelMethod, SplitOutcome, SplitResult, VALIDATION_FRACTION,
};
pub use hybrid::{ForwardCache, HybridModel, ModelOutput};
pub use train::{evaluate, predict, train, train_with, TrainReport};
