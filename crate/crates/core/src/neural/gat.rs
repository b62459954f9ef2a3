//! Single-head graph attention layer.
//!
//! For node `i` with neighbor set `N(i)` (self included):
//!
//! ```text
//! z_j    = W h_j
//! s_ij   = a_dstᵀ z_i + a_srcᵀ z_j
//! α_ij   = softmax_{j ∈ N(i)} leaky_relu(s_ij)
//! h'_i   = σ(Σ_j α_ij z_j)
//! ```
//!
//! where `a = [a_dst ; a_src]` has length `2 · out_dim`.

use super::activation::{leaky_relu, leaky_relu_grad, softmax, softmax_backward, Activation};
use super::linalg::{add_outer, axpy, dot, MatRef};
use crate::error::NeuralError;
use crate::graph::DebateGraph;

#[derive(Debug, Clone, Copy)]
pub struct GatLayer<'a> {
    /// `out_dim × in_dim`
    pub weight: MatRef<'a>,
    /// `2 · out_dim`
    pub attn: &'a [f64],
    pub activation: Activation,
}

/// Intermediate values kept from the forward pass.
#[derive(Debug, Clone)]
pub struct GatCache {
    pub input: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    /// Raw attention logits, per node, aligned with `graph.in_neighbors(i)`.
    pub logits: Vec<Vec<f64>>,
    /// Attention coefficients, aligned the same way.
    pub alpha: Vec<Vec<f64>>,
    pub pre: Vec<Vec<f64>>,
}

impl<'a> GatLayer<'a> {
    pub fn new(weight: MatRef<'a>, attn: &'a [f64], activation: Activation) -> Self {
        GatLayer {
            weight,
            attn,
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows
    }

    fn check(&self, features: &[Vec<f64>], graph: &DebateGraph) -> Result<(), NeuralError> {
        if self.attn.len() != 2 * self.out_dim() {
            return Err(NeuralError::DimensionMismatch(format!(
                "attention vector has {} entries, expected {}",
                self.attn.len(),
                2 * self.out_dim()
            )));
        }
        if features.len() != graph.num_nodes() {
            return Err(NeuralError::DimensionMismatch(format!(
                "{} feature rows for {} nodes",
                features.len(),
                graph.num_nodes()
            )));
        }
        if let Some(bad) = features.iter().find(|f| f.len() != self.in_dim()) {
            return Err(NeuralError::DimensionMismatch(format!(
                "feature width {} != layer input {}",
                bad.len(),
                self.in_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, features: &[Vec<f64>], graph: &DebateGraph) -> Result<(Vec<Vec<f64>>, GatCache), NeuralError> {
        self.check(features, graph)?;
        let out_dim = self.out_dim();
        let (a_dst, a_src) = self.attn.split_at(out_dim);
        let z: Vec<Vec<f64>> = features.iter().map(|h| self.weight.matvec(h)).collect();
        let dst_score: Vec<f64> = z.iter().map(|zi| dot(a_dst, zi)).collect();
        let src_score: Vec<f64> = z.iter().map(|zj| dot(a_src, zj)).collect();

        let n = graph.num_nodes();
        let mut logits = Vec::with_capacity(n);
        let mut alpha = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        for i in 0..n {
            let nbrs = graph.in_neighbors(i);
            let s: Vec<f64> = nbrs.iter().map(|&j| dst_score[i] + src_score[j]).collect();
            let a = softmax(&s.iter().map(|&x| leaky_relu(x)).collect::<Vec<_>>());
            let mut p = vec![0.0; out_dim];
            for (&j, &w) in nbrs.iter().zip(&a) {
                axpy(&mut p, w, &z[j]);
            }
            logits.push(s);
            alpha.push(a);
            pre.push(p);
        }
        let out = pre
            .iter()
            .map(|p| p.iter().map(|&x| self.activation.apply(x)).collect())
            .collect();
        Ok((
            out,
            GatCache {
                input: features.to_vec(),
                z,
                logits,
                alpha,
                pre,
            },
        ))
    }

    /// Accumulates `∂L/∂W` and `∂L/∂a` and returns `∂L/∂input`.
    pub fn backward(
        &self,
        cache: &GatCache,
        graph: &DebateGraph,
        d_out: &[Vec<f64>],
        grad_weight: &mut [f64],
        grad_attn: &mut [f64],
    ) -> Vec<Vec<f64>> {
        let out_dim = self.out_dim();
        let (a_dst, a_src) = self.attn.split_at(out_dim);
        let n = graph.num_nodes();
        let mut dz = vec![vec![0.0; out_dim]; n];
        let mut d_dst_score = vec![0.0; n];
        let mut d_src_score = vec![0.0; n];
        for i in 0..n {
            let nbrs = graph.in_neighbors(i);
            let d_pre: Vec<f64> = d_out[i]
                .iter()
                .zip(&cache.pre[i])
                .map(|(&g, &x)| g * self.activation.derivative(x))
                .collect();
            let alpha = &cache.alpha[i];
            let mut d_alpha = Vec::with_capacity(nbrs.len());
            for (&j, &w) in nbrs.iter().zip(alpha) {
                d_alpha.push(dot(&d_pre, &cache.z[j]));
                axpy(&mut dz[j], w, &d_pre);
            }
            let d_u = softmax_backward(alpha, &d_alpha);
            for ((&j, &du), &s) in nbrs.iter().zip(&d_u).zip(&cache.logits[i]) {
                let ds = du * leaky_relu_grad(s);
                d_dst_score[i] += ds;
                d_src_score[j] += ds;
            }
        }
        let (g_dst, g_src) = grad_attn.split_at_mut(out_dim);
        for j in 0..n {
            axpy(g_dst, d_dst_score[j], &cache.z[j]);
            axpy(g_src, d_src_score[j], &cache.z[j]);
            axpy(&mut dz[j], d_dst_score[j], a_dst);
            axpy(&mut dz[j], d_src_score[j], a_src);
        }
        dz.iter()
            .zip(&cache.input)
            .map(|(dzj, xj)| {
                add_outer(grad_weight, dzj, xj);
                self.weight.matvec_t(dzj)
            })
            .collect()
    }
}

/// Forward pass of one layer over the graph.
pub fn gat_forward(layer: &GatLayer<'_>, features: &[Vec<f64>], graph: &DebateGraph) -> Result<Vec<Vec<f64>>, NeuralError> {
    layer.forward(features, graph).map(|(out, _)| out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeMeta;
    use crate::neural::activation::elu;

    fn graph(features: Vec<Vec<f64>>, pairs: &[(usize, usize)]) -> DebateGraph {
        let n = features.len();
        // Graph rows must be even-width; pad to width 2·d when needed.
        let feats = features.into_iter().map(|mut f| {
            let d = f.len();
            f.resize(2 * d, 0.0);
            f
        });
        DebateGraph::from_undirected(feats.collect(), vec![NodeMeta::News; n], pairs).unwrap()
    }

    #[test]
    fn single_node_attends_to_itself() {
        let w = [1.0, -2.0, 0.5, 3.0];
        let a = [0.3, -0.7, 1.1, 0.2];
        let layer = GatLayer::new(MatRef::new(&w, 2, 2), &a, Activation::Elu);
        let h = vec![vec![0.4, 0.9]];
        let g = graph(h.clone(), &[]);
        let (out, cache) = layer.forward(&h, &g).unwrap();
        assert_eq!(cache.alpha, vec![vec![1.0]]);
        let wh = [0.4 - 1.8, 0.2 + 2.7];
        assert!((out[0][0] - elu(wh[0])).abs() < 1e-15);
        assert!((out[0][1] - elu(wh[1])).abs() < 1e-15);
    }

    #[test]
    fn two_node_chain_with_zero_attention_is_mean() {
        let w = [1.0, 0.0, 0.0, 1.0];
        let a = [0.0; 4];
        let layer = GatLayer::new(MatRef::new(&w, 2, 2), &a, Activation::Elu);
        let h = vec![vec![1.0, -3.0], vec![3.0, 1.0]];
        let g = graph(h.clone(), &[(0, 1)]);
        let (out, cache) = layer.forward(&h, &g).unwrap();
        assert_eq!(cache.alpha, vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let expect = [elu(2.0), elu(-1.0)];
        for row in &out {
            assert!((row[0] - expect[0]).abs() < 1e-15 && (row[1] - expect[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn disconnected_components_do_not_interact() {
        let w: Vec<f64> = (0..6).map(|k| 0.3 * k as f64 - 0.7).collect();
        let a = [0.5, -0.2, 0.9, 0.1];
        let layer = GatLayer::new(MatRef::new(&w, 2, 3), &a, Activation::Elu);
        let mut h = vec![vec![0.1, 0.2, 0.3], vec![-0.4, 0.5, 0.0], vec![1.0, 1.0, -1.0], vec![0.2, -0.3, 0.8]];
        let pairs = [(0, 1), (2, 3)];
        let before = gat_forward(&layer, &h, &graph(h.clone(), &pairs)).unwrap();
        h[2] = vec![9.0, -9.0, 4.0];
        h[3] = vec![-5.0, 2.0, 2.0];
        let after = gat_forward(&layer, &h, &graph(h.clone(), &pairs)).unwrap();
        assert_eq!(before[0], after[0]);
        assert_eq!(before[1], after[1]);
        assert_ne!(before[2], after[2]);
    }

    #[test]
    fn rejects_wrong_width() {
        let w = [1.0; 4];
        let a = [0.0; 4];
        let layer = GatLayer::new(MatRef::new(&w, 2, 2), &a, Activation::Identity);
        let h = vec![vec![1.0, 2.0, 3.0]];
        let g = graph(vec![vec![1.0, 2.0]], &[]);
        assert!(matches!(gat_forward(&layer, &h, &g), Err(NeuralError::DimensionMismatch(_))));
    }
}
