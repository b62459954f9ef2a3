//! Text-embedding providers and role-aware node construction.
//!
//! A node vector is the frozen text embedding of a turn followed by the
//! projected embedding of the turn's (role, stance) pair:
//! `node = [emb ; W_role · e(role, stance)]`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{DebateRole, DebateTurn, Stance};
use crate::error::EncodingError;

pub const DEFAULT_EMBED_DIM: usize = 384;
pub const DEFAULT_ROLE_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub provider_id: String,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EncodingError>;
}

impl EmbeddingProvider for Box<dyn EmbeddingProvider> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EncodingError> {
        (**self).embed(text)
    }
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    // Alphanumeric runs, except CJK ideographs, which count one per character.
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        let cjk = ('\u{4e00}'..='\u{9fff}').contains(&c) || ('\u{3400}'..='\u{4dbf}').contains(&c);
        if cjk {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(c.to_string());
        } else if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out.into_iter()
}

/// Deterministic bag-of-tokens embedding: each distinct token contributes its
/// count times a pseudorandom direction seeded from `(seed, token)`; the sum
/// is L2-normalized.
#[derive(Debug, Clone)]
pub struct HashingProvider {
    id: String,
    dim: usize,
    seed: u64,
}

impl HashingProvider {
    pub fn new(dim: usize, seed: u64) -> Self {
        HashingProvider {
            id: format!("hashing-{dim}-{seed}"),
            dim,
            seed,
        }
    }

    fn direction(&self, token: &str, out: &mut [f64], weight: f64) {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(token.as_bytes());
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&h.finalize());
        let mut rng = ChaCha8Rng::from_seed(seed);
        for v in out.iter_mut() {
            *v += weight * rng.random_range(-1.0..1.0);
        }
    }
}

impl EmbeddingProvider for HashingProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EncodingError> {
        if text.trim().is_empty() {
            return Err(EncodingError::EmptyText);
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        for t in tokens(text) {
            *counts.entry(t).or_default() += 1;
        }
        let mut sorted: Vec<(String, usize)> = counts.into_iter().collect();
        sorted.sort_unstable();
        let mut values = vec![0.0; self.dim];
        for (tok, n) in &sorted {
            self.direction(tok, &mut values, *n as f64);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(EmbeddingVector {
            values,
            provider_id: self.id.clone(),
        })
    }
}

/// Client for an HTTP embeddings endpoint (`{model, input}` in,
/// `data[0].embedding` out).
#[cfg(feature = "remote")]
pub struct RemoteEmbeddingProvider {
    id: String,
    endpoint: String,
    model: String,
    dim: usize,
    api_key: Option<String>,
    agent: ureq::Agent,
}

#[cfg(feature = "remote")]
impl RemoteEmbeddingProvider {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, dim: usize, api_key: Option<String>) -> Self {
        let model = model.into();
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(60)))
            .build()
            .into();
        RemoteEmbeddingProvider {
            id: format!("remote-embed:{model}"),
            endpoint: endpoint.into(),
            model,
            dim,
            api_key,
            agent,
        }
    }
}

#[cfg(feature = "remote")]
pub fn parse_embedding_response(body: &str) -> Result<Vec<f64>, EncodingError> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| EncodingError::Transport(format!("bad JSON: {e}")))?;
    v.pointer("/data/0/embedding")
        .and_then(|e| e.as_array())
        .and_then(|a| a.iter().map(|x| x.as_f64()).collect::<Option<Vec<f64>>>())
        .ok_or_else(|| EncodingError::Transport("missing data[0].embedding".into()))
}

#[cfg(feature = "remote")]
impl EmbeddingProvider for RemoteEmbeddingProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EncodingError> {
        if text.trim().is_empty() {
            return Err(EncodingError::EmptyText);
        }
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = call
            .send_json(serde_json::json!({ "model": self.model, "input": text }))
            .map_err(|e| EncodingError::Transport(e.to_string()))?;
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| EncodingError::Transport(e.to_string()))?;
        let values = parse_embedding_response(&body)?;
        check_embedding(&values, self.dim, &self.id)?;
        Ok(EmbeddingVector {
            values,
            provider_id: self.id.clone(),
        })
    }
}

#[cfg(feature = "remote")]
fn check_embedding(values: &[f64], dim: usize, provider: &str) -> Result<(), EncodingError> {
    if values.len() != dim {
        return Err(EncodingError::DimensionMismatch {
            expected: dim,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(EncodingError::NonFinite(provider.to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorSidecar {
    pub dim: usize,
    pub provider_id: String,
}

/// Writes `values` as little-endian f32 to `path` and `{dim, provider_id}` to
/// `path` with a `.json` extension.
pub fn write_f32_vectors(path: &Path, values: &[f64], sidecar: &VectorSidecar) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let bytes: Vec<u8> = values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
    fs::write(path, bytes)?;
    fs::write(
        path.with_extension("json"),
        serde_json::to_string(sidecar).expect("sidecar serializes"),
    )
}

pub fn read_f32_vectors(path: &Path) -> Result<(Vec<f64>, VectorSidecar), EncodingError> {
    let io = |source| EncodingError::Io {
        path: path.to_path_buf(),
        source,
    };
    let side_path = path.with_extension("json");
    let sidecar: VectorSidecar = serde_json::from_str(&fs::read_to_string(&side_path).map_err(io)?)
        .map_err(|_| EncodingError::Corrupt(side_path.clone()))?;
    let bytes = fs::read(path).map_err(io)?;
    if bytes.len() % 4 != 0 || sidecar.dim == 0 || (bytes.len() / 4) % sidecar.dim != 0 {
        return Err(EncodingError::Corrupt(path.to_path_buf()));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok((values, sidecar))
}

/// Disk cache in front of any provider, keyed by provider id and text digest.
pub struct CachedProvider<P> {
    inner: P,
    dir: PathBuf,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P, dir: impl Into<PathBuf>) -> Self {
        CachedProvider {
            inner,
            dir: dir.into(),
        }
    }

    pub fn path_for(&self, text: &str) -> PathBuf {
        let provider: String = self
            .inner
            .id()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        self.dir.join(provider).join(format!("{digest}.f32"))
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EncodingError> {
        if text.trim().is_empty() {
            return Err(EncodingError::EmptyText);
        }
        let path = self.path_for(text);
        if path.exists() {
            match read_f32_vectors(&path) {
                Ok((values, side)) if side.provider_id == self.inner.id() && values.len() == self.dim() => {
                    return Ok(EmbeddingVector {
                        values,
                        provider_id: side.provider_id,
                    })
                }
                _ => log::warn!("re-embedding over stale cache entry {}", path.display()),
            }
        }
        let emb = self.inner.embed(text)?;
        let side = VectorSidecar {
            dim: emb.dim(),
            provider_id: emb.provider_id.clone(),
        };
        write_f32_vectors(&path, &emb.values, &side).map_err(|source| EncodingError::Io { path, source })?;
        // Return the f32-rounded values so cold and warm lookups agree.
        Ok(EmbeddingVector {
            values: emb.values.iter().map(|&v| v as f32 as f64).collect(),
            provider_id: emb.provider_id,
        })
    }
}

/// Number of (role, stance) keys in a role table.
pub const ROLE_KEYS: usize = DebateRole::ALL.len() * Stance::ALL.len();

pub fn role_key(role: DebateRole, stance: Stance) -> usize {
    role.index() * Stance::ALL.len() + stance.index()
}

/// Trainable role embeddings, one per (role, stance) pair, plus the
/// projection `W_role` (d_h × d_r, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct RoleTable {
    pub embed_dim: usize,
    pub role_dim: usize,
    pub embeddings: Vec<f64>,
    pub projection: Vec<f64>,
}

impl RoleTable {
    pub fn zeros(embed_dim: usize, role_dim: usize) -> Self {
        RoleTable {
            embed_dim,
            role_dim,
            embeddings: vec![0.0; ROLE_KEYS * role_dim],
            projection: vec![0.0; embed_dim * role_dim],
        }
    }

    /// Entries drawn from uniform(-0.1, 0.1).
    pub fn random(embed_dim: usize, role_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Self::zeros(embed_dim, role_dim);
        t.embeddings.iter_mut().chain(t.projection.iter_mut()).for_each(|v| {
            *v = rng.random_range(-0.1..0.1);
        });
        t
    }

    pub fn embedding(&self, role: DebateRole, stance: Stance) -> &[f64] {
        let k = role_key(role, stance);
        &self.embeddings[k * self.role_dim..(k + 1) * self.role_dim]
    }

    pub fn embedding_mut(&mut self, role: DebateRole, stance: Stance) -> &mut [f64] {
        let k = role_key(role, stance);
        &mut self.embeddings[k * self.role_dim..(k + 1) * self.role_dim]
    }

    /// `W_role · e(role, stance)`.
    pub fn project(&self, role: DebateRole, stance: Stance) -> Vec<f64> {
        let e = self.embedding(role, stance);
        self.projection
            .chunks_exact(self.role_dim)
            .map(|row| row.iter().zip(e).map(|(w, x)| w * x).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeVector {
    pub values: Vec<f64>,
}

impl NodeVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn text_part(&self) -> &[f64] {
        &self.values[..self.values.len() / 2]
    }

    pub fn role_part(&self) -> &[f64] {
        &self.values[self.values.len() / 2..]
    }
}

pub fn build_node(turn: &DebateTurn, emb: &EmbeddingVector, table: &RoleTable) -> Result<NodeVector, EncodingError> {
    if emb.dim() != table.embed_dim {
        return Err(EncodingError::DimensionMismatch {
            expected: table.embed_dim,
            got: emb.dim(),
        });
    }
    let mut values = emb.values.clone();
    values.extend(table.project(turn.role, turn.stance));
    Ok(NodeVector { values })
}

/// Node for a bare news embedding with no role: `[emb ; 0]`.
pub fn news_node(emb: &EmbeddingVector) -> NodeVector {
    let mut values = emb.values.clone();
    values.resize(2 * emb.dim(), 0.0);
    NodeVector { values }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::domain::fixtures::default_log;

    #[test]
    fn hashing_provider_is_deterministic() {
        let p = HashingProvider::new(32, 7);
        assert_eq!(p.embed("alpha beta").unwrap(), p.embed("alpha beta").unwrap());
        assert!(matches!(p.embed("  "), Err(EncodingError::EmptyText)));
        let v = p.embed("alpha").unwrap();
        assert_eq!(v.dim(), 32);
        assert!((v.values.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collisions_on_fixed_corpus_are_exactly_the_token_equal_pairs() {
        let corpus = [
            "The mayor opened the new bridge.",
            "the MAYOR opened the new bridge",
            "The mayor closed the new bridge.",
            "Bridge new the opened mayor the",
            "Scientists confirm water on the moon",
            "Scientists deny water on the moon",
            "官方确认新桥通车",
            "官方否认新桥通车",
            "1 2 3",
            "1 2 4",
        ];
        let p = HashingProvider::new(DEFAULT_EMBED_DIM, 0);
        let vecs: Vec<_> = corpus.iter().map(|t| p.embed(t).unwrap().values).collect();
        let mut collisions = Vec::new();
        for i in 0..corpus.len() {
            for j in i + 1..corpus.len() {
                if vecs[i] == vecs[j] {
                    collisions.push((i, j));
                }
            }
        }
        // Case and order are discarded by tokenization, so 0, 1 and 3 share a bag.
        assert_eq!(collisions, vec![(0, 1), (0, 3), (1, 3)]);
    }

    #[test]
    fn hand_computed_node() {
        let table = RoleTable {
            embed_dim: 2,
            role_dim: 1,
            embeddings: {
                let mut e = vec![0.0; ROLE_KEYS];
                e[role_key(DebateRole::Rebutter, Stance::True)] = 3.0;
                e
            },
            projection: vec![1.0, 2.0],
        };
        let mut turn = default_log().turns[4].clone();
        turn.role = DebateRole::Rebutter;
        turn.stance = Stance::True;
        let emb = EmbeddingVector {
            values: vec![5.0, 7.0],
            provider_id: "t".into(),
        };
        assert_eq!(build_node(&turn, &emb, &table).unwrap().values, vec![5.0, 7.0, 3.0, 6.0]);
        let bad = EmbeddingVector {
            values: vec![1.0; 3],
            provider_id: "t".into(),
        };
        assert!(matches!(
            build_node(&turn, &bad, &table),
            Err(EncodingError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn zero_projection_keeps_embedding() {
        let mut table = RoleTable::random(4, 2, 1);
        table.projection.iter_mut().for_each(|v| *v = 0.0);
        let emb = HashingProvider::new(4, 0).embed("abc").unwrap();
        let node = build_node(&default_log().turns[0], &emb, &table).unwrap();
        assert_eq!(node.text_part(), emb.values.as_slice());
        assert!(node.role_part().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cached_provider_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cached = CachedProvider::new(HashingProvider::new(8, 3), dir.path());
        let cold = cached.embed("disk cached text").unwrap();
        let path = cached.path_for("disk cached text");
        assert!(path.exists() && path.with_extension("json").exists());
        assert_eq!(fs::read(&path).unwrap().len(), 8 * 4);
        let warm = cached.embed("disk cached text").unwrap();
        assert_eq!(cold, warm);
        let (_, side) = read_f32_vectors(&path).unwrap();
        assert_eq!(side, VectorSidecar { dim: 8, provider_id: "hashing-8-3".into() });
    }

    proptest! {
        #[test]
        fn node_tail_is_linear_in_role_embedding(alpha in -4.0f64..4.0, seed in 0u64..1000) {
            let mut table = RoleTable::random(6, 3, seed);
            let turn = default_log().turns[2].clone();
            let emb = HashingProvider::new(6, seed).embed("some text here").unwrap();
            let base = build_node(&turn, &emb, &table).unwrap();
            table.embedding_mut(turn.role, turn.stance).iter_mut().for_each(|v| *v *= alpha);
            let scaled = build_node(&turn, &emb, &table).unwrap();
            prop_assert_eq!(base.text_part(), scaled.text_part());
            for (a, b) in base.role_part().iter().zip(scaled.role_part()) {
                prop_assert!((a * alpha - b).abs() < 1e-12);
            }
        }

        #[test]
        fn same_text_different_role_differs_only_in_tail(seed in 0u64..1000) {
            let table = RoleTable::random(6, 3, seed);
            let log = default_log();
            let emb = HashingProvider::new(6, 1).embed("identical").unwrap();
            let a = build_node(&log.turns[0], &emb, &table).unwrap();
            let b = build_node(&log.turns[5], &emb, &table).unwrap();
            prop_assert_eq!(a.text_part(), b.text_part());
            prop_assert_ne!(a.role_part(), b.role_part());
        }
    }
}
