//! The Analysis Agent: role-aware node inputs, stacked GAT layers, mean
//! pooling, debate-news interaction and the classifier, over one flat
//! parameter vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::attention::{global_mean_pool, HeadGrads, InteractCache, InteractionHead, InteractionMode};
use super::classifier::{loss, loss_grad_logits, ClassifierHead};
use super::gat::{GatCache, GatLayer};
use super::linalg::{add_outer, axpy, MatRef};
use crate::domain::Label;
use crate::encoding::{role_key, RoleTable, DEFAULT_EMBED_DIM, DEFAULT_ROLE_DIM, ROLE_KEYS};
use crate::error::NeuralError;
use crate::graph::{DebateGraph, NodeMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Text embedding width `d_h`; node vectors are `2·d_h` wide.
    pub embed_dim: usize,
    /// Role embedding width `d_r`.
    pub role_dim: usize,
    pub gat_layers: usize,
    /// Output width of every GAT layer but the last, which maps back to `2·d_h`.
    pub gat_hidden: usize,
    pub proj_dim: usize,
    pub heads: usize,
    pub interaction_mode: InteractionMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: DEFAULT_EMBED_DIM,
            role_dim: DEFAULT_ROLE_DIM,
            gat_layers: 2,
            gat_hidden: 128,
            proj_dim: 128,
            heads: 4,
            interaction_mode: InteractionMode::Nodes,
        }
    }
}

impl ModelConfig {
    pub fn check(&self) -> Result<(), NeuralError> {
        for (name, v) in [
            ("embed_dim", self.embed_dim),
            ("role_dim", self.role_dim),
            ("gat_layers", self.gat_layers),
            ("gat_hidden", self.gat_hidden),
            ("proj_dim", self.proj_dim),
            ("heads", self.heads),
        ] {
            if v == 0 {
                return Err(NeuralError::Config(format!("{name} must be positive")));
            }
        }
        if !self.proj_dim.is_multiple_of(self.heads) {
            return Err(NeuralError::Config(format!(
                "proj_dim {} not divisible by heads {}",
                self.proj_dim, self.heads
            )));
        }
        Ok(())
    }

    /// `(in, out)` widths of each GAT layer.
    pub fn gat_dims(&self) -> Vec<(usize, usize)> {
        let node = 2 * self.embed_dim;
        (0..self.gat_layers)
            .map(|l| {
                let i = if l == 0 { node } else { self.gat_hidden };
                let o = if l + 1 == self.gat_layers { node } else { self.gat_hidden };
                (i, o)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl ParamBlock {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Named, contiguous blocks of the flat parameter vector, in a fixed order:
/// role table, GAT layers, interaction projections, attention projections,
/// classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub blocks: Vec<ParamBlock>,
}

const ROLE_EMB: usize = 0;
const ROLE_PROJ: usize = 1;
const GAT_BASE: usize = 2;

impl ParamLayout {
    pub fn for_config(config: &ModelConfig) -> Self {
        let d_p = config.proj_dim;
        let node = 2 * config.embed_dim;
        let mut shapes: Vec<(String, usize, usize)> = vec![
            ("role.embeddings".into(), ROLE_KEYS, config.role_dim),
            ("role.projection".into(), config.embed_dim, config.role_dim),
        ];
        for (l, (i, o)) in config.gat_dims().into_iter().enumerate() {
            shapes.push((format!("gat{l}.weight"), o, i));
            shapes.push((format!("gat{l}.attn"), 1, 2 * o));
        }
        shapes.push(("interact.w_g".into(), d_p, node));
        shapes.push(("interact.w_e".into(), d_p, config.embed_dim));
        for name in ["mha.w_q", "mha.w_k", "mha.w_v", "mha.w_o"] {
            shapes.push((name.into(), d_p, d_p));
        }
        shapes.push(("classifier.weight".into(), 2, 2 * d_p));
        shapes.push(("classifier.bias".into(), 1, 2));
        let mut offset = 0;
        let blocks = shapes
            .into_iter()
            .map(|(name, rows, cols)| {
                let b = ParamBlock {
                    name,
                    offset,
                    rows,
                    cols,
                };
                offset += b.len();
                b
            })
            .collect();
        ParamLayout { blocks }
    }

    pub fn total_len(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.offset + b.len())
    }

    pub fn get(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Disjoint mutable views of `buf`, one per block.
    pub fn split_mut<'a>(&self, mut buf: &'a mut [f64]) -> Vec<&'a mut [f64]> {
        let mut out = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let (head, tail) = buf.split_at_mut(b.len());
            out.push(head);
            buf = tail;
        }
        out
    }

    /// Names of blocks holding any non-finite entry of `values`.
    pub fn non_finite_blocks(&self, values: &[f64]) -> Vec<String> {
        self.blocks
            .iter()
            .filter(|b| values[b.range()].iter().any(|v| !v.is_finite()))
            .map(|b| b.name.clone())
            .collect()
    }

    fn interact_base(&self) -> usize {
        self.blocks.len() - 8
    }
}

/// One training or evaluation example.
#[derive(Debug, Clone)]
pub struct GraphSample {
    pub graph: DebateGraph,
    /// News embedding `e_F`, length `d_h`.
    pub news: Vec<f64>,
    pub label: Label,
}

/// Intermediate values of one forward pass, useful for inspection.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub node_inputs: Vec<Vec<f64>>,
    pub gat: Vec<GatCache>,
    pub node_outputs: Vec<Vec<f64>>,
    pub pooled: Vec<f64>,
    pub interact: InteractCache,
    pub fused: Vec<f64>,
    pub probs: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisModel {
    pub config: ModelConfig,
    pub layout: ParamLayout,
    pub params: Vec<f64>,
}

impl AnalysisModel {
    /// Fresh model: role entries from uniform(−0.1, 0.1), weight matrices from
    /// uniform(−1/√fan_in, 1/√fan_in), biases zero.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, NeuralError> {
        config.check()?;
        let layout = ParamLayout::for_config(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; layout.total_len()];
        for b in &layout.blocks {
            let s = if b.name.starts_with("role.") {
                0.1
            } else if b.name == "classifier.bias" {
                continue;
            } else {
                1.0 / (b.cols as f64).sqrt()
            };
            for p in &mut params[b.range()] {
                *p = rng.random_range(-s..s);
            }
        }
        Ok(AnalysisModel { config, layout, params })
    }

    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Self, NeuralError> {
        config.check()?;
        let layout = ParamLayout::for_config(&config);
        if params.len() != layout.total_len() {
            return Err(NeuralError::DimensionMismatch(format!(
                "{} parameters for a layout of {}",
                params.len(),
                layout.total_len()
            )));
        }
        Ok(AnalysisModel { config, layout, params })
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn block(&self, idx: usize) -> &[f64] {
        &self.params[self.layout.blocks[idx].range()]
    }

    fn mat(&self, idx: usize) -> MatRef<'_> {
        let b = &self.layout.blocks[idx];
        MatRef::new(&self.params[b.range()], b.rows, b.cols)
    }

    pub fn block_values(&self, name: &str) -> Option<&[f64]> {
        self.layout.get(name).map(|b| &self.params[b.range()])
    }

    pub fn role_table(&self) -> RoleTable {
        RoleTable {
            embed_dim: self.config.embed_dim,
            role_dim: self.config.role_dim,
            embeddings: self.block(ROLE_EMB).to_vec(),
            projection: self.block(ROLE_PROJ).to_vec(),
        }
    }

    pub fn set_role_table(&mut self, table: &RoleTable) -> Result<(), NeuralError> {
        if table.embed_dim != self.config.embed_dim || table.role_dim != self.config.role_dim {
            return Err(NeuralError::DimensionMismatch(format!(
                "role table {}x{} for model {}x{}",
                table.embed_dim, table.role_dim, self.config.embed_dim, self.config.role_dim
            )));
        }
        let e = self.layout.blocks[ROLE_EMB].range();
        let p = self.layout.blocks[ROLE_PROJ].range();
        self.params[e].copy_from_slice(&table.embeddings);
        self.params[p].copy_from_slice(&table.projection);
        Ok(())
    }

    fn gat_layer(&self, l: usize) -> GatLayer<'_> {
        let act = if l + 1 == self.config.gat_layers {
            Activation::Identity
        } else {
            Activation::Elu
        };
        GatLayer::new(self.mat(GAT_BASE + 2 * l), self.block(GAT_BASE + 2 * l + 1), act)
    }

    fn interaction_head(&self) -> InteractionHead<'_> {
        let base = self.layout.interact_base();
        InteractionHead {
            w_g: self.mat(base),
            w_e: self.mat(base + 1),
            w_q: self.mat(base + 2),
            w_k: self.mat(base + 3),
            w_v: self.mat(base + 4),
            w_o: self.mat(base + 5),
            heads: self.config.heads,
        }
    }

    fn classifier(&self) -> ClassifierHead<'_> {
        let base = self.layout.interact_base();
        ClassifierHead {
            weight: self.mat(base + 6),
            bias: self.block(base + 7),
        }
    }

    /// `W_role · e(role, stance)` for a turn node, zeros for a news node.
    fn role_tail(&self, meta: &NodeMeta) -> Vec<f64> {
        match meta {
            NodeMeta::Turn { role, stance, .. } => {
                let d_r = self.config.role_dim;
                let k = role_key(*role, *stance);
                let e = &self.block(ROLE_EMB)[k * d_r..(k + 1) * d_r];
                self.mat(ROLE_PROJ).matvec(e)
            }
            NodeMeta::News => vec![0.0; self.config.embed_dim],
        }
    }

    /// Node inputs with the role half recomputed from the current parameters;
    /// only the text half of the stored graph features is read.
    pub fn node_inputs(&self, graph: &DebateGraph) -> Result<Vec<Vec<f64>>, NeuralError> {
        let d_h = self.config.embed_dim;
        if graph.num_nodes() == 0 {
            return Err(NeuralError::Empty("graph has no nodes"));
        }
        if graph.embed_dim() != d_h {
            return Err(NeuralError::DimensionMismatch(format!(
                "graph text width {} != model embed_dim {d_h}",
                graph.embed_dim()
            )));
        }
        Ok(graph
            .node_features()
            .iter()
            .zip(graph.node_meta())
            .map(|(f, m)| {
                let mut v = f[..d_h].to_vec();
                v.extend(self.role_tail(m));
                v
            })
            .collect())
    }

    pub fn trace(&self, graph: &DebateGraph, news: &[f64]) -> Result<ForwardTrace, NeuralError> {
        let node_inputs = self.node_inputs(graph)?;
        let mut h = node_inputs.clone();
        let mut gat = Vec::with_capacity(self.config.gat_layers);
        for l in 0..self.config.gat_layers {
            let (out, cache) = self.gat_layer(l).forward(&h, graph)?;
            gat.push(cache);
            h = out;
        }
        let pooled = global_mean_pool(&h)?;
        let (fused, interact) =
            self.interaction_head()
                .forward(news, &h, &pooled, self.config.interaction_mode)?;
        let probs = super::classifier::classify(&fused, &self.classifier())?;
        Ok(ForwardTrace {
            node_inputs,
            gat,
            node_outputs: h,
            pooled,
            interact,
            fused,
            probs,
        })
    }

    /// `(p_real, p_fake)`.
    pub fn predict(&self, graph: &DebateGraph, news: &[f64]) -> Result<[f64; 2], NeuralError> {
        self.trace(graph, news).map(|t| t.probs)
    }

    pub fn sample_loss(&self, sample: &GraphSample) -> Result<f64, NeuralError> {
        let p = self.predict(&sample.graph, &sample.news)?;
        Ok(loss(&p, sample.label.index()))
    }

    /// Mean loss over `samples`.
    pub fn loss(&self, samples: &[GraphSample]) -> Result<f64, NeuralError> {
        if samples.is_empty() {
            return Err(NeuralError::Empty("batch"));
        }
        let mut total = 0.0;
        for s in samples {
            total += self.sample_loss(s)?;
        }
        Ok(total / samples.len() as f64)
    }

    /// Mean loss and its gradient with respect to the full parameter vector.
    pub fn loss_and_grad(&self, samples: &[GraphSample]) -> Result<(f64, Vec<f64>), NeuralError> {
        if samples.is_empty() {
            return Err(NeuralError::Empty("batch"));
        }
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / samples.len() as f64;
        let mut total = 0.0;
        for s in samples {
            total += self.accumulate(s, scale, &mut grad)?;
        }
        let bad = self.layout.non_finite_blocks(&grad);
        if !bad.is_empty() {
            return Err(NeuralError::NonFinite(bad));
        }
        Ok((total * scale, grad))
    }

    /// Adds `scale · ∂loss/∂θ` for one sample into `grad`; returns the loss.
    fn accumulate(&self, sample: &GraphSample, scale: f64, grad: &mut [f64]) -> Result<f64, NeuralError> {
        let t = self.trace(&sample.graph, &sample.news)?;
        let y = sample.label.index();
        let l = loss(&t.probs, y);
        let d_logits = loss_grad_logits(&t.probs, y).map(|g| g * scale);
        if d_logits == [0.0, 0.0] {
            return Ok(l);
        }

        let layout = &self.layout;
        let base = layout.interact_base();
        let mut g = layout.split_mut(grad);

        let cls = self.classifier();
        add_outer(g[base + 6], &d_logits, &t.fused);
        axpy(g[base + 7], 1.0, &d_logits);
        let d_fused = cls.weight.matvec_t(&d_logits);

        let d_int = {
            let [w_g, w_e, w_q, w_k, w_v, w_o] = &mut g[base..base + 6] else {
                unreachable!("layout has six interaction blocks")
            };
            self.interaction_head().backward(
                &t.interact,
                &d_fused,
                HeadGrads {
                    w_g,
                    w_e,
                    w_q,
                    w_k,
                    w_v,
                    w_o,
                },
            )
        };

        let n = t.node_outputs.len();
        let mut d_h: Vec<Vec<f64>> = if d_int.d_nodes.is_empty() {
            vec![vec![0.0; d_int.d_pooled.len()]; n]
        } else {
            d_int.d_nodes
        };
        for row in &mut d_h {
            axpy(row, 1.0 / n as f64, &d_int.d_pooled);
        }

        for l in (0..self.config.gat_layers).rev() {
            let (gw, ga) = {
                let (lo, hi) = g.split_at_mut(GAT_BASE + 2 * l + 1);
                (&mut *lo[GAT_BASE + 2 * l], &mut *hi[0])
            };
            d_h = self.gat_layer(l).backward(&t.gat[l], &sample.graph, &d_h, gw, ga);
        }

        let d_e = self.config.embed_dim;
        let d_r = self.config.role_dim;
        let w_role = self.mat(ROLE_PROJ);
        let emb = self.block(ROLE_EMB);
        for (d_x, meta) in d_h.iter().zip(sample.graph.node_meta()) {
            if let NodeMeta::Turn { role, stance, .. } = meta {
                let k = role_key(*role, *stance);
                let d_tail = &d_x[d_e..];
                add_outer(g[ROLE_PROJ], d_tail, &emb[k * d_r..(k + 1) * d_r]);
                axpy(&mut g[ROLE_EMB][k * d_r..(k + 1) * d_r], 1.0, &w_role.matvec_t(d_tail));
            }
        }
        Ok(l)
    }
}
