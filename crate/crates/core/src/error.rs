use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::domain::{DebateStage, Stance};

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("news item {0:?} has empty content")]
    EmptyContent(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid debate log: {}", .0.join("; "))]
    InvalidLog(Vec<String>),
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid generation request: {0}")]
    InvalidRequest(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("backend rejected request with HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("gateway misconfigured: {0}")]
    Config(String),
    #[error("cache i/o at {path}: {source}")]
    Cache { path: PathBuf, source: io::Error },
}

#[derive(Debug, Error)]
pub enum DebateError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("template {template}: {message}")]
    Template { template: String, message: String },
    #[error("history is missing {stage} turn(s) from the {} team", .stance.team_name())]
    MissingStage { stage: DebateStage, stance: Stance },
    #[error("prompt set: {0}")]
    PromptSet(String),
}

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite embedding from provider {0}")]
    NonFinite(String),
    #[error("embedding transport: {0}")]
    Transport(String),
    #[error("embedding cache i/o at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("embedding cache entry {0} is corrupt")]
    Corrupt(PathBuf),
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("got {nodes} node vectors for {turns} turns")]
    LengthMismatch { nodes: usize, turns: usize },
    #[error("node index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("node vectors have inconsistent dimension")]
    RaggedNodes,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite values in parameter block(s): {}", .0.join(", "))]
    NonFinite(Vec<String>),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("no items")]
    NoItems,
    #[error("{count} malformed line(s); first at line {first_line}: {message}")]
    Malformed {
        count: usize,
        first_line: usize,
        message: String,
    },
    #[error("no {0} items")]
    MissingSplit(&'static str),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("metrics: {0}")]
    Metrics(String),
    #[error("unknown ablation variant {0:?}")]
    UnknownVariant(String),
}

/// Top-level error for the end-to-end pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Debate(#[from] DebateError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },
    #[error("{failed} of {total} item(s) failed")]
    ItemFailures { failed: usize, total: usize },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}
