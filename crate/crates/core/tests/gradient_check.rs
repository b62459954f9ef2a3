mod common;

use common::*;
use rand::Rng;
use veridebate_core::neural::{AnalysisModel, InteractionMode};

fn check(seed: u64, layers: usize, heads: usize, mode: InteractionMode) {
    let mut r = rng(seed);
    let model = AnalysisModel::new(tiny_config(layers, heads, mode), seed).unwrap();
    let batch: Vec<_> = (0..2)
        .map(|_| {
            let n = r.random_range(3..=8);
            random_sample(&mut r, n, 4)
        })
        .collect();
    for (name, err) in gradient_errors(&model, &batch, 1e-4) {
        assert!(err < 1e-4, "seed {seed} block {name}: relative error {err:e}");
    }
}

#[test]
fn nodes_mode_single_layer() {
    for seed in 0..5 {
        check(seed, 1, 1, InteractionMode::Nodes);
    }
}

#[test]
fn nodes_mode_two_layers_two_heads() {
    for seed in 10..15 {
        check(seed, 2, 2, InteractionMode::Nodes);
    }
}

#[test]
fn pooled_mode() {
    for seed in 20..25 {
        check(seed, 2, 1, InteractionMode::Pooled);
    }
}

#[test]
fn every_block_receives_gradient() {
    let mut r = rng(99);
    let model = AnalysisModel::new(tiny_config(2, 1, InteractionMode::Nodes), 99).unwrap();
    let batch: Vec<_> = (0..4).map(|_| random_sample(&mut r, 6, 4)).collect();
    let (_, g) = model.loss_and_grad(&batch).unwrap();
    for b in &model.layout.blocks {
        assert!(g[b.range()].iter().any(|v| *v != 0.0), "block {} has zero gradient", b.name);
    }
}
