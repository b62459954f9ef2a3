#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use veridebate_core::graph::{DebateGraph, NodeMeta};
use veridebate_core::neural::{AnalysisModel, GraphSample, InteractionMode, ModelConfig};
use veridebate_core::{DebateRole, Label, Stance};

pub fn random_meta(rng: &mut ChaCha8Rng) -> NodeMeta {
    if rng.random_bool(0.1) {
        return NodeMeta::News;
    }
    let role = DebateRole::ALL[rng.random_range(0..DebateRole::ALL.len())];
    let stance = if rng.random_bool(0.5) { Stance::True } else { Stance::Fake };
    NodeMeta::Turn {
        stance,
        role,
        stage: role.stage(),
    }
}

/// Random graph with `n` nodes of text width `d_h` and a few random pairs.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, d_h: usize) -> DebateGraph {
    let feats = (0..n)
        .map(|_| (0..2 * d_h).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let meta = (0..n).map(|_| random_meta(rng)).collect();
    let mut pairs = Vec::new();
    for i in 1..n {
        pairs.push((i - 1, i));
        if rng.random_bool(0.4) {
            pairs.push((i, rng.random_range(0..i)));
        }
    }
    DebateGraph::from_undirected(feats, meta, &pairs).unwrap()
}

pub fn random_sample(rng: &mut ChaCha8Rng, n: usize, d_h: usize) -> GraphSample {
    GraphSample {
        graph: random_graph(rng, n, d_h),
        news: (0..d_h).map(|_| rng.random_range(-1.0..1.0)).collect(),
        label: if rng.random_bool(0.5) { Label::Real } else { Label::Fake },
    }
}

pub fn tiny_config(layers: usize, heads: usize, mode: InteractionMode) -> ModelConfig {
    ModelConfig {
        embed_dim: 4,
        role_dim: 2,
        gat_layers: layers,
        gat_hidden: 3,
        proj_dim: 4,
        heads,
        interaction_mode: mode,
    }
}

/// Per-block norm-wise relative error between the analytic gradient and
/// central differences: `‖a − n‖ / max(‖a‖, ‖n‖)`, zero when both vanish.
pub fn gradient_errors(model: &AnalysisModel, batch: &[GraphSample], step: f64) -> Vec<(String, f64)> {
    let (_, analytic) = model.loss_and_grad(batch).unwrap();
    let mut probe = model.clone();
    let mut numeric = vec![0.0; analytic.len()];
    for i in 0..analytic.len() {
        let orig = probe.params[i];
        probe.params[i] = orig + step;
        let up = probe.loss(batch).unwrap();
        probe.params[i] = orig - step;
        let down = probe.loss(batch).unwrap();
        probe.params[i] = orig;
        numeric[i] = (up - down) / (2.0 * step);
    }
    model
        .layout
        .blocks
        .iter()
        .map(|b| {
            let r = b.range();
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let diff: Vec<f64> = analytic[r.clone()].iter().zip(&numeric[r.clone()]).map(|(a, n)| a - n).collect();
            let scale = norm(&analytic[r.clone()]).max(norm(&numeric[r]));
            let err = if scale < 1e-12 { 0.0 } else { norm(&diff) / scale };
            (b.name.clone(), err)
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
