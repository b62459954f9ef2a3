//! Numerical core of the Analysis Agent, with hand-written gradients.

pub mod activation;
pub mod adam;
pub mod attention;
pub mod checkpoint;
pub mod classifier;
pub mod gat;
pub mod linalg;
pub mod model;
pub mod train;

pub use activation::Activation;
pub use adam::{adam_step, AdamConfig, AdamState};
pub use attention::{global_mean_pool, interact, InteractionHead, InteractionMode};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use classifier::{classify, loss, ClassifierHead};
pub use gat::{gat_forward, GatLayer};
pub use model::{AnalysisModel, ForwardTrace, GraphSample, ModelConfig, ParamBlock, ParamLayout};
pub use train::{decide, train, TrainConfig, TrainReport};
