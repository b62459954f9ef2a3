//! Multi-agent debate pipeline for fake news detection.
//!
//! Two teams of text-generating agents debate a news item through four
//! stages; a synthesis agent writes a report over the transcript; and a
//! graph-attention classifier reads the role-aware debate graph together
//! with the news embedding to predict `real` or `fake`.

pub mod domain;
pub mod encoding;
pub mod error;
pub mod debate;
pub mod gateway;
pub mod evaluation;
pub mod graph;
pub mod neural;
pub mod pipeline;
pub mod synthesis;

pub use domain::*;
pub use error::*;
