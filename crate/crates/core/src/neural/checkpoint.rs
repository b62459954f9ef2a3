//! Model checkpoints: an 8-byte magic, a little-endian `u32` header length,
//! a JSON header, then the flat parameter vector as little-endian `f64`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{AnalysisModel, ModelConfig, ParamBlock};
use crate::error::NeuralError;

pub const MAGIC: &[u8; 8] = b"VDMODEL1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: ModelConfig,
    pub embed_dim: usize,
    pub role_dim: usize,
    pub gat_layers: usize,
    pub heads: usize,
    pub seed: u64,
    /// Class names by index.
    pub labels: [String; 2],
    pub num_params: usize,
    pub blocks: Vec<ParamBlock>,
}

pub fn encode_checkpoint(model: &AnalysisModel, seed: u64) -> Vec<u8> {
    let header = CheckpointHeader {
        config: model.config.clone(),
        embed_dim: model.config.embed_dim,
        role_dim: model.config.role_dim,
        gat_layers: model.config.gat_layers,
        heads: model.config.heads,
        seed,
        labels: ["real".into(), "fake".into()],
        num_params: model.num_params(),
        blocks: model.layout.blocks.clone(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(12 + json.len() + 8 * model.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in &model.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(mut bytes: &[u8]) -> Result<(AnalysisModel, CheckpointHeader), NeuralError> {
    let corrupt = |m: &str| NeuralError::Checkpoint(m.to_string());
    let mut magic = [0u8; 8];
    bytes.read_exact(&mut magic).map_err(|_| corrupt("truncated magic"))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut len = [0u8; 4];
    bytes.read_exact(&mut len).map_err(|_| corrupt("truncated header length"))?;
    let len = u32::from_le_bytes(len) as usize;
    if bytes.len() < len {
        return Err(corrupt("truncated header"));
    }
    let (json, rest) = bytes.split_at(len);
    let header: CheckpointHeader =
        serde_json::from_slice(json).map_err(|e| NeuralError::Checkpoint(format!("header: {e}")))?;
    if rest.len() != 8 * header.num_params {
        return Err(NeuralError::Checkpoint(format!(
            "expected {} parameter bytes, found {}",
            8 * header.num_params,
            rest.len()
        )));
    }
    let params: Vec<f64> = rest
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let model = AnalysisModel::from_params(header.config.clone(), params)
        .map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
    if model.layout.blocks != header.blocks {
        return Err(corrupt("block layout does not match config"));
    }
    let bad = model.layout.non_finite_blocks(&model.params);
    if !bad.is_empty() {
        return Err(NeuralError::NonFinite(bad));
    }
    Ok((model, header))
}

pub fn save_checkpoint(path: &Path, model: &AnalysisModel, seed: u64) -> Result<(), NeuralError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_checkpoint(model, seed))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(AnalysisModel, CheckpointHeader), NeuralError> {
    decode_checkpoint(&std::fs::read(path)?)
}
