//! Dataset loading, metrics, the synthetic task and the ablation harness.

pub mod dataset;
pub mod metrics;
pub mod synthetic;

pub use dataset::{load_dataset, parse_dataset, write_dataset, Dataset, LoadOptions, SplitStats, ARG_CN_STATS, ARG_EN_STATS};
pub use metrics::{compute_metrics, read_predictions, write_predictions, ClassCounts, MetricsReport, PredictionRecord};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticItem, SyntheticVariant};
