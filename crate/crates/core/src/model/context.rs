use std::sync::Arc;

use crate::hypercore::{Hypergraph, SparseMatrix};
use crate::kernel::{Csr, Real, Tensor};

/// Index structures derived once from a hypergraph and reused by every forward pass.
///
/// Incidences are enumerated as pairs `p = (edge, node)` ordered by edge, then node.
/// Every pair gets exactly one attention score per layer; `edge_groups` and
/// `node_groups` are the two ways of grouping those same pair slots.
pub struct GraphContext<T> {
    hypergraph: Hypergraph,
    pub(crate) pair_node: Arc<Vec<usize>>,
    pub(crate) pair_edge: Arc<Vec<usize>>,
    pub(crate) edge_groups: Arc<Vec<Vec<usize>>>,
    pub(crate) node_groups: Arc<Vec<Vec<usize>>>,
    pub(crate) member_mean_weights: Tensor<T>,
    theta: SparseMatrix,
    pub(crate) theta_csr: Arc<Csr<T>>,
    pub(crate) theta_row_sums: Tensor<T>,
}

impl<T: Real> GraphContext<T> {
    pub fn new(hypergraph: Hypergraph) -> Self {
        let mut pair_node = Vec::with_capacity(hypergraph.num_incidences());
        let mut pair_edge = Vec::with_capacity(hypergraph.num_incidences());
        let mut edge_groups = Vec::with_capacity(hypergraph.num_edges());
        let mut node_groups = vec![Vec::new(); hypergraph.num_nodes()];
        let mut mean_w = Vec::with_capacity(hypergraph.num_incidences());
        for (e, members) in hypergraph.edge_members().iter().enumerate() {
            let mut group = Vec::with_capacity(members.len());
            let w = 1.0 / members.len() as f64;
            for &n in members {
                let p = pair_node.len();
                pair_node.push(n);
                pair_edge.push(e);
                group.push(p);
                node_groups[n].push(p);
                mean_w.push(T::from_f64(w));
            }
            edge_groups.push(group);
        }
        // Nodes outside every hyperedge have no pairs and take no part in attention.
        let node_groups: Vec<Vec<usize>> =
            node_groups.into_iter().filter(|g| !g.is_empty()).collect();

        let theta = hypergraph.theta();
        let theta_csr = Arc::new(theta.to_csr());
        let theta_row_sums =
            Tensor::column(theta.row_sums().into_iter().map(T::from_f64).collect());
        Self {
            hypergraph,
            pair_node: Arc::new(pair_node),
            pair_edge: Arc::new(pair_edge),
            edge_groups: Arc::new(edge_groups),
            node_groups: Arc::new(node_groups),
            member_mean_weights: Tensor::column(mean_w),
            theta,
            theta_csr,
            theta_row_sums,
        }
    }

    pub fn hypergraph(&self) -> &Hypergraph {
        &self.hypergraph
    }

    pub fn num_nodes(&self) -> usize {
        self.hypergraph.num_nodes()
    }

    pub fn num_edges(&self) -> usize {
        self.hypergraph.num_edges()
    }

    pub fn num_pairs(&self) -> usize {
        self.pair_node.len()
    }

    /// `(edge, node)` of every pair slot.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pair_edge
            .iter()
            .copied()
            .zip(self.pair_node.iter().copied())
    }

    pub fn pair_index(&self, edge: usize, node: usize) -> Option<usize> {
        let start = self.edge_groups[edge].first().copied()?;
        self.hypergraph
            .members(edge)
            .binary_search(&node)
            .ok()
            .map(|offset| start + offset)
    }

    pub fn edge_groups(&self) -> &[Vec<usize>] {
        &self.edge_groups
    }

    pub fn node_groups(&self) -> &[Vec<usize>] {
        &self.node_groups
    }

    pub fn theta(&self) -> &SparseMatrix {
        &self.theta
    }

    /// Lays per-pair values out as a dense `|E| × |N|` matrix.
    pub fn pair_matrix(&self, values: &[T]) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.num_nodes()]; self.num_edges()];
        for (p, (e, n)) in self.pairs().enumerate() {
            out[e][n] = values[p].as_f64();
        }
        out
    }
}
