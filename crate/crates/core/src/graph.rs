//! The fixed debate graph: one node per turn, self-loops, edges between
//! consecutive turns, and edges between a turn and each turn it targets.
//! Non-loop edges are stored in both directions.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{DebateLog, DebateRole, DebateStage, Stance};
use crate::encoding::{write_f32_vectors, NodeVector, VectorSidecar};
use crate::error::{DomainError, GraphError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeMeta {
    Turn {
        stance: Stance,
        role: DebateRole,
        stage: DebateStage,
    },
    /// A bare news-content node with no role.
    News,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebateGraph {
    node_features: Vec<Vec<f64>>,
    node_meta: Vec<NodeMeta>,
    /// Directed edge list. Parallel entries are kept, so a reference between
    /// adjacent turns appears alongside the sequential edge.
    edges: Vec<(usize, usize)>,
    in_neighbors: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    num_nodes: usize,
    edges: Vec<[usize; 2]>,
}

impl DebateGraph {
    fn assemble(
        node_features: Vec<Vec<f64>>,
        node_meta: Vec<NodeMeta>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, GraphError> {
        let n = node_features.len();
        if node_meta.len() != n {
            return Err(GraphError::LengthMismatch {
                nodes: n,
                turns: node_meta.len(),
            });
        }
        if let Some(first) = node_features.first() {
            if first.is_empty() || first.len() % 2 != 0 || node_features.iter().any(|f| f.len() != first.len()) {
                return Err(GraphError::RaggedNodes);
            }
        }
        let mut sets = vec![BTreeSet::new(); n];
        for &(src, dst) in &edges {
            for index in [src, dst] {
                if index >= n {
                    return Err(GraphError::IndexOutOfRange { index, len: n });
                }
            }
            sets[dst].insert(src);
        }
        Ok(DebateGraph {
            node_features,
            node_meta,
            edges,
            in_neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    /// Builds a graph from explicit undirected pairs, adding both directions
    /// of each pair and a self-loop per node.
    pub fn from_undirected(
        node_features: Vec<Vec<f64>>,
        node_meta: Vec<NodeMeta>,
        pairs: &[(usize, usize)],
    ) -> Result<Self, GraphError> {
        let n = node_features.len();
        let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        for &(a, b) in pairs {
            edges.push((a, b));
            if a != b {
                edges.push((b, a));
            }
        }
        Self::assemble(node_features, node_meta, edges)
    }

    /// A one-node graph holding only the news content.
    pub fn news_only(node: NodeVector) -> Result<Self, GraphError> {
        Self::from_undirected(vec![node.values], vec![NodeMeta::News], &[])
    }

    pub fn num_nodes(&self) -> usize {
        self.node_features.len()
    }

    /// Width of the text-embedding half of each node vector.
    pub fn embed_dim(&self) -> usize {
        self.node_features.first().map_or(0, |f| f.len() / 2)
    }

    pub fn node_features(&self) -> &[Vec<f64>] {
        &self.node_features
    }

    pub fn node_meta(&self) -> &[NodeMeta] {
        &self.node_meta
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Distinct sources of edges into `i`, ascending. Always includes `i`.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_neighbors[i]
    }

    /// Copy of the graph with node rows reordered: new node `k` is old node
    /// `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GraphError> {
        let n = self.num_nodes();
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n {
                return Err(GraphError::IndexOutOfRange { index: old, len: n });
            }
            inverse[old] = new;
        }
        Self::assemble(
            perm.iter().map(|&o| self.node_features[o].clone()).collect(),
            perm.iter().map(|&o| self.node_meta[o]).collect(),
            self.edges.iter().map(|&(s, d)| (inverse[s], inverse[d])).collect(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphJson {
            num_nodes: self.num_nodes(),
            edges: self.edges.iter().map(|&(s, d)| [s, d]).collect(),
        })
        .expect("graph serializes")
    }

    /// Writes `<stem>.graph.json` and the node features as `<stem>.nodes.f32`
    /// with its `.nodes.json` sidecar.
    pub fn save(&self, dir: &Path, stem: &str, provider_id: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.graph.json")), self.to_json())?;
        let flat: Vec<f64> = self.node_features.iter().flatten().copied().collect();
        write_f32_vectors(
            &dir.join(format!("{stem}.nodes.f32")),
            &flat,
            &VectorSidecar {
                dim: 2 * self.embed_dim(),
                provider_id: provider_id.to_string(),
            },
        )
    }
}

/// Builds the fixed graph for a debate: self-loops, both directions of every
/// consecutive pair, and both directions of every (turn, target) pair.
pub fn build_graph(log: &DebateLog, nodes: &[NodeVector]) -> Result<DebateGraph, GraphError> {
    let n = log.turns.len();
    if nodes.len() != n {
        return Err(GraphError::LengthMismatch {
            nodes: nodes.len(),
            turns: n,
        });
    }
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    for i in 1..n {
        edges.push((i - 1, i));
        edges.push((i, i - 1));
    }
    for (i, turn) in log.turns.iter().enumerate() {
        for &t in &turn.targets {
            if t >= i {
                return Err(DomainError::InvalidLog(vec![format!("forward reference at turn {i}")]).into());
            }
            edges.push((i, t));
            edges.push((t, i));
        }
    }
    let meta = log
        .turns
        .iter()
        .map(|t| NodeMeta::Turn {
            stance: t.stance,
            role: t.role,
            stage: t.stage,
        })
        .collect();
    DebateGraph::assemble(nodes.iter().map(|v| v.values.clone()).collect(), meta, edges)
}

/// `{ j : (j, i) ∈ edges }`.
pub fn neighbors(g: &DebateGraph, i: usize) -> Result<BTreeSet<usize>, GraphError> {
    if i >= g.num_nodes() {
        return Err(GraphError::IndexOutOfRange {
            index: i,
            len: g.num_nodes(),
        });
    }
    Ok(g.in_neighbors(i).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::default_log;

    fn nodes(n: usize) -> Vec<NodeVector> {
        (0..n)
            .map(|i| NodeVector {
                values: vec![i as f64, 1.0],
            })
            .collect()
    }

    #[test]
    fn default_log_edge_count() {
        let log = default_log();
        let g = build_graph(&log, &nodes(8)).unwrap();
        assert_eq!(g.edges().len(), 8 + 14 + 8);
        assert_eq!(g.edges().len(), 8 + 2 * 7 + 2 * log.total_targets());
        assert_eq!(neighbors(&g, 0).unwrap(), BTreeSet::from([0, 1, 3]));
        assert_eq!(neighbors(&g, 2).unwrap(), BTreeSet::from([1, 2, 3, 5]));
        assert_eq!(
            build_graph(&log, &nodes(8)).unwrap().to_json(),
            g.to_json()
        );
    }

    #[test]
    fn single_turn_graph() {
        let mut log = default_log();
        log.turns.truncate(1);
        let g = build_graph(&log, &nodes(1)).unwrap();
        assert_eq!(g.edges(), &[(0, 0)]);
        assert_eq!(neighbors(&g, 0).unwrap(), BTreeSet::from([0]));
        assert!(matches!(
            neighbors(&g, 1),
            Err(GraphError::IndexOutOfRange { index: 1, len: 1 })
        ));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            build_graph(&default_log(), &nodes(7)),
            Err(GraphError::LengthMismatch { nodes: 7, turns: 8 })
        ));
    }

    #[test]
    fn json_and_files() {
        let mut log = default_log();
        log.turns.truncate(2);
        let g = build_graph(&log, &nodes(2)).unwrap();
        assert_eq!(g.to_json(), r#"{"num_nodes":2,"edges":[[0,0],[1,1],[0,1],[1,0]]}"#);
        let dir = tempfile::tempdir().unwrap();
        g.save(dir.path(), "n1", "p").unwrap();
        let (vals, side) = crate::encoding::read_f32_vectors(&dir.path().join("n1.nodes.f32")).unwrap();
        assert_eq!(vals, vec![0.0, 1.0, 1.0, 1.0]);
        assert_eq!(side.dim, 2);
    }

    #[test]
    fn permutation_relabels_edges() {
        let g = build_graph(&default_log(), &nodes(8)).unwrap();
        let perm = [7, 6, 5, 4, 3, 2, 1, 0];
        let p = g.permuted(&perm).unwrap();
        for (new, &old) in perm.iter().enumerate() {
            let mapped: BTreeSet<usize> = g.in_neighbors(old).iter().map(|&j| 7 - j).collect();
            assert_eq!(neighbors(&p, new).unwrap(), mapped);
        }
    }
}
