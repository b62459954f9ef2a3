//! Debate–news interactive attention.
//!
//! The pooled debate vector `g` and the news embedding `e` are projected to a
//! common width `d_p`; the projected news vector then queries the debate with
//! multi-head scaled dot-product attention. Keys and values are either the
//! per-node projections `W_g h_i` (`Nodes`) or the single vector `W_g g`
//! (`Pooled`). The output is `[W_g g ; c]`.

use serde::{Deserialize, Serialize};

use super::activation::{softmax, softmax_backward};
use super::linalg::{add_outer, axpy, dot, MatRef};
use crate::error::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionMode {
    /// Attend over per-node debate representations.
    #[default]
    Nodes,
    /// Attend over the single pooled debate vector.
    Pooled,
}

impl std::str::FromStr for InteractionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nodes" => Ok(InteractionMode::Nodes),
            "pooled" => Ok(InteractionMode::Pooled),
            other => Err(format!("unknown interaction mode {other:?} (expected nodes|pooled)")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InteractionHead<'a> {
    /// `d_p × graph_dim`
    pub w_g: MatRef<'a>,
    /// `d_p × d_h`
    pub w_e: MatRef<'a>,
    pub w_q: MatRef<'a>,
    pub w_k: MatRef<'a>,
    pub w_v: MatRef<'a>,
    pub w_o: MatRef<'a>,
    pub heads: usize,
}

#[derive(Debug, Clone)]
pub struct InteractCache {
    pub news: Vec<f64>,
    pub pooled: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
    pub g_proj: Vec<f64>,
    pub e_proj: Vec<f64>,
    /// Key/value sources: projected nodes, or `[g_proj]` in pooled mode.
    pub sources: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub k: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// `weights[h][i]`: attention of head `h` on source `i`.
    pub weights: Vec<Vec<f64>>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub mode: InteractionMode,
}

/// Gradients for the frozen-free inputs of the interaction.
pub struct InteractGrads {
    pub d_pooled: Vec<f64>,
    /// Empty in pooled mode.
    pub d_nodes: Vec<Vec<f64>>,
}

/// Gradient buffers for the six projection matrices.
pub struct HeadGrads<'a> {
    pub w_g: &'a mut [f64],
    pub w_e: &'a mut [f64],
    pub w_q: &'a mut [f64],
    pub w_k: &'a mut [f64],
    pub w_v: &'a mut [f64],
    pub w_o: &'a mut [f64],
}

impl InteractionHead<'_> {
    pub fn proj_dim(&self) -> usize {
        self.w_g.rows
    }

    fn head_dim(&self) -> usize {
        self.proj_dim() / self.heads
    }

    fn check(&self, news: &[f64], nodes: &[Vec<f64>], pooled: &[f64], mode: InteractionMode) -> Result<(), NeuralError> {
        let d_p = self.proj_dim();
        let mismatch = |what: &str, got: usize, want: usize| {
            Err(NeuralError::DimensionMismatch(format!("{what}: got {got}, expected {want}")))
        };
        if self.heads == 0 || !d_p.is_multiple_of(self.heads) {
            return Err(NeuralError::Config(format!("d_p={d_p} not divisible by heads={}", self.heads)));
        }
        for (name, m) in [("w_e", self.w_e), ("w_q", self.w_q), ("w_k", self.w_k), ("w_v", self.w_v), ("w_o", self.w_o)] {
            if m.rows != d_p {
                return mismatch(name, m.rows, d_p);
            }
        }
        if news.len() != self.w_e.cols {
            return mismatch("news embedding", news.len(), self.w_e.cols);
        }
        if pooled.len() != self.w_g.cols {
            return mismatch("pooled vector", pooled.len(), self.w_g.cols);
        }
        if mode == InteractionMode::Nodes {
            if nodes.is_empty() {
                return Err(NeuralError::Empty("node features"));
            }
            if let Some(bad) = nodes.iter().find(|n| n.len() != self.w_g.cols) {
                return mismatch("node feature", bad.len(), self.w_g.cols);
            }
        }
        Ok(())
    }

    pub fn forward(
        &self,
        news: &[f64],
        nodes: &[Vec<f64>],
        pooled: &[f64],
        mode: InteractionMode,
    ) -> Result<(Vec<f64>, InteractCache), NeuralError> {
        self.check(news, nodes, pooled, mode)?;
        let g_proj = self.w_g.matvec(pooled);
        let e_proj = self.w_e.matvec(news);
        let sources: Vec<Vec<f64>> = match mode {
            InteractionMode::Nodes => nodes.iter().map(|h| self.w_g.matvec(h)).collect(),
            InteractionMode::Pooled => vec![g_proj.clone()],
        };
        let q = self.w_q.matvec(&e_proj);
        let k: Vec<Vec<f64>> = sources.iter().map(|s| self.w_k.matvec(s)).collect();
        let v: Vec<Vec<f64>> = sources.iter().map(|s| self.w_v.matvec(s)).collect();
        let dh = self.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let mut o = vec![0.0; self.proj_dim()];
        let mut weights = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let r = h * dh..(h + 1) * dh;
            let scores: Vec<f64> = k.iter().map(|ki| scale * dot(&q[r.clone()], &ki[r.clone()])).collect();
            let w = softmax(&scores);
            for (wi, vi) in w.iter().zip(&v) {
                axpy(&mut o[r.clone()], *wi, &vi[r.clone()]);
            }
            weights.push(w);
        }
        let c = self.w_o.matvec(&o);
        let mut fused = g_proj.clone();
        fused.extend_from_slice(&c);
        Ok((
            fused,
            InteractCache {
                news: news.to_vec(),
                pooled: pooled.to_vec(),
                nodes: if mode == InteractionMode::Nodes { nodes.to_vec() } else { Vec::new() },
                g_proj,
                e_proj,
                sources,
                q,
                k,
                v,
                weights,
                o,
                c,
                mode,
            },
        ))
    }

    pub fn backward(&self, cache: &InteractCache, d_fused: &[f64], grads: HeadGrads<'_>) -> InteractGrads {
        let d_p = self.proj_dim();
        let (d_gproj_direct, dc) = d_fused.split_at(d_p);
        let mut d_gproj = d_gproj_direct.to_vec();

        add_outer(grads.w_o, dc, &cache.o);
        let d_o = self.w_o.matvec_t(dc);

        let dh = self.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let n_src = cache.sources.len();
        let mut dq = vec![0.0; d_p];
        let mut dk = vec![vec![0.0; d_p]; n_src];
        let mut dv = vec![vec![0.0; d_p]; n_src];
        for h in 0..self.heads {
            let r = h * dh..(h + 1) * dh;
            let w = &cache.weights[h];
            let dw: Vec<f64> = cache.v.iter().map(|vi| dot(&d_o[r.clone()], &vi[r.clone()])).collect();
            for (dvi, &wi) in dv.iter_mut().zip(w) {
                axpy(&mut dvi[r.clone()], wi, &d_o[r.clone()]);
            }
            let d_scores = softmax_backward(w, &dw);
            for (i, &ds) in d_scores.iter().enumerate() {
                axpy(&mut dq[r.clone()], ds * scale, &cache.k[i][r.clone()]);
                axpy(&mut dk[i][r.clone()], ds * scale, &cache.q[r.clone()]);
            }
        }

        add_outer(grads.w_q, &dq, &cache.e_proj);
        let d_eproj = self.w_q.matvec_t(&dq);
        add_outer(grads.w_e, &d_eproj, &cache.news);

        let mut d_sources = Vec::with_capacity(n_src);
        for i in 0..n_src {
            add_outer(grads.w_k, &dk[i], &cache.sources[i]);
            add_outer(grads.w_v, &dv[i], &cache.sources[i]);
            let mut ds = self.w_k.matvec_t(&dk[i]);
            axpy(&mut ds, 1.0, &self.w_v.matvec_t(&dv[i]));
            d_sources.push(ds);
        }

        let d_nodes = match cache.mode {
            InteractionMode::Pooled => {
                axpy(&mut d_gproj, 1.0, &d_sources[0]);
                Vec::new()
            }
            InteractionMode::Nodes => d_sources
                .iter()
                .zip(&cache.nodes)
                .map(|(dp, h)| {
                    add_outer(grads.w_g, dp, h);
                    self.w_g.matvec_t(dp)
                })
                .collect(),
        };
        add_outer(grads.w_g, &d_gproj, &cache.pooled);
        InteractGrads {
            d_pooled: self.w_g.matvec_t(&d_gproj),
            d_nodes,
        }
    }
}

/// Fused debate-news representation `[W_g g ; c]`.
pub fn interact(
    news: &[f64],
    nodes: &[Vec<f64>],
    pooled: &[f64],
    head: &InteractionHead<'_>,
    mode: InteractionMode,
) -> Result<Vec<f64>, NeuralError> {
    head.forward(news, nodes, pooled, mode).map(|(h, _)| h)
}

/// Coordinate-wise mean over node rows.
pub fn global_mean_pool(features: &[Vec<f64>]) -> Result<Vec<f64>, NeuralError> {
    let first = features.first().ok_or(NeuralError::Empty("graph has no nodes"))?;
    let mut g = vec![0.0; first.len()];
    for row in features {
        if row.len() != g.len() {
            return Err(NeuralError::DimensionMismatch("ragged node features".into()));
        }
        axpy(&mut g, 1.0, row);
    }
    let n = features.len() as f64;
    g.iter_mut().for_each(|x| *x /= n);
    Ok(g)
}
