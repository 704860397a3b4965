//! Hypergraph topology: incidence in both directions, degrees, the normalized
//! adjacency `Θ = D_v^{-1/2} H W D_e^{-1} Hᵀ D_v^{-1/2}` and the dual hypergraph.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{Csr, Real};

#[derive(Debug, Error, PartialEq)]
pub enum HypergraphError {
    #[error("hyperedge {0} has no members")]
    EmptyHyperedge(usize),
    #[error("hyperedge {edge} has invalid weight {weight}")]
    InvalidWeight { edge: usize, weight: f64 },
    #[error("expected {expected} hyperedge weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("node {node} out of range for {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("node {0} belongs to no hyperedge")]
    IsolatedNode(usize),
}

/// Immutable hypergraph. Member and membership lists are sorted and duplicate free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypergraph {
    num_nodes: usize,
    edge_members: Vec<Vec<usize>>,
    node_memberships: Vec<Vec<usize>>,
    edge_weights: Vec<f64>,
}

/// Builds a hypergraph whose node count is one past the largest member index.
pub fn build_hypergraph(
    edge_node_lists: &[Vec<usize>],
    edge_weights: Option<&[f64]>,
) -> Result<Hypergraph, HypergraphError> {
    let num_nodes = edge_node_lists
        .iter()
        .flat_map(|e| e.iter())
        .copied()
        .max()
        .map_or(0, |m| m + 1);
    Hypergraph::new(num_nodes, edge_node_lists, edge_weights)
}

impl Hypergraph {
    /// Builds over an explicit node universe `0..num_nodes`; nodes outside every
    /// hyperedge are allowed.
    pub fn new(
        num_nodes: usize,
        edge_node_lists: &[Vec<usize>],
        edge_weights: Option<&[f64]>,
    ) -> Result<Self, HypergraphError> {
        let weights = match edge_weights {
            Some(w) if w.len() != edge_node_lists.len() => {
                return Err(HypergraphError::WeightCount {
                    expected: edge_node_lists.len(),
                    got: w.len(),
                })
            }
            Some(w) => w.to_vec(),
            None => vec![1.0; edge_node_lists.len()],
        };
        for (edge, &weight) in weights.iter().enumerate() {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(HypergraphError::InvalidWeight { edge, weight });
            }
        }

        let mut edge_members = Vec::with_capacity(edge_node_lists.len());
        let mut node_memberships = vec![Vec::new(); num_nodes];
        for (e, list) in edge_node_lists.iter().enumerate() {
            if list.is_empty() {
                return Err(HypergraphError::EmptyHyperedge(e));
            }
            let mut members = list.clone();
            members.sort_unstable();
            members.dedup();
            for &n in &members {
                if n >= num_nodes {
                    return Err(HypergraphError::NodeOutOfRange { node: n, num_nodes });
                }
                node_memberships[n].push(e);
            }
            edge_members.push(members);
        }
        Ok(Self {
            num_nodes,
            edge_members,
            node_memberships,
            edge_weights: weights,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edge_members.len()
    }

    pub fn edge_members(&self) -> &[Vec<usize>] {
        &self.edge_members
    }

    pub fn members(&self, edge: usize) -> &[usize] {
        &self.edge_members[edge]
    }

    pub fn node_memberships(&self) -> &[Vec<usize>] {
        &self.node_memberships
    }

    pub fn memberships(&self, node: usize) -> &[usize] {
        &self.node_memberships[node]
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    /// Number of `(edge, node)` incidences, i.e. nonzeros of `H`.
    pub fn num_incidences(&self) -> usize {
        self.edge_members.iter().map(Vec::len).sum()
    }

    /// True if both hypergraphs have the same node count and incidence, ignoring weights.
    pub fn same_incidence(&self, other: &Hypergraph) -> bool {
        self.num_nodes == other.num_nodes && self.edge_members == other.edge_members
    }

    /// Checks that the member and membership views describe the same relation.
    pub fn is_consistent(&self) -> bool {
        if self.node_memberships.len() != self.num_nodes {
            return false;
        }
        let mut count = 0;
        for (e, members) in self.edge_members.iter().enumerate() {
            if members.is_empty() || members.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &n in members {
                if n >= self.num_nodes || self.node_memberships[n].binary_search(&e).is_err() {
                    return false;
                }
            }
            count += members.len();
        }
        let back: usize = self.node_memberships.iter().map(Vec::len).sum();
        back == count
            && self
                .node_memberships
                .iter()
                .all(|m| m.windows(2).all(|w| w[0] < w[1]))
    }

    /// Weighted node degrees (sum of incident hyperedge weights) and hyperedge sizes.
    pub fn degrees(&self) -> (Vec<f64>, Vec<usize>) {
        let node = self
            .node_memberships
            .iter()
            .map(|m| m.iter().map(|&e| self.edge_weights[e]).sum())
            .collect();
        let edge = self.edge_members.iter().map(Vec::len).collect();
        (node, edge)
    }

    /// Nodes with no incident hyperedge. Their rows and columns of `Θ` are zero.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes)
            .filter(|&n| self.node_memberships[n].is_empty())
            .collect()
    }

    /// Normalized adjacency `Θ`. Entry `(i, j)` accumulates
    /// `w_e / (|e| · sqrt(d_i d_j))` over every hyperedge `e` containing both.
    pub fn theta(&self) -> SparseMatrix {
        let (dv, _) = self.degrees();
        let inv_sqrt: Vec<f64> = dv
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect();
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for (e, members) in self.edge_members.iter().enumerate() {
            let scale = self.edge_weights[e] / members.len() as f64;
            for &i in members {
                for &j in members {
                    *acc.entry((i, j)).or_insert(0.0) += scale * (inv_sqrt[i] * inv_sqrt[j]);
                }
            }
        }
        let mut entries: Vec<(usize, usize, f64)> =
            acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
        entries.sort_by_key(|&(i, j, _)| (i, j));
        SparseMatrix {
            rows: self.num_nodes,
            cols: self.num_nodes,
            entries,
        }
    }

    /// Dual hypergraph: nodes and hyperedges swap roles. Dual weights are all one.
    pub fn dual(&self) -> Result<Hypergraph, HypergraphError> {
        if let Some(n) = self.node_memberships.iter().position(Vec::is_empty) {
            return Err(HypergraphError::IsolatedNode(n));
        }
        Ok(Hypergraph {
            num_nodes: self.num_edges(),
            edge_members: self.node_memberships.clone(),
            node_memberships: self.edge_members.clone(),
            edge_weights: vec![1.0; self.num_nodes],
        })
    }

    /// Applies a node relabeling `node i -> perm[i]`.
    pub fn relabel_nodes(&self, perm: &[usize]) -> Result<Hypergraph, HypergraphError> {
        let edges: Vec<Vec<usize>> = self
            .edge_members
            .iter()
            .map(|m| m.iter().map(|&n| perm[n]).collect())
            .collect();
        Hypergraph::new(self.num_nodes, &edges, Some(&self.edge_weights))
    }
}

/// Sparse matrix as sorted `(row, col, value)` triplets with unique coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(row, col), |&(r, c, _)| (r, c))
            .map_or(0.0, |i| self.entries[i].2)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for &(r, _, v) in &self.entries {
            out[r] += v;
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for &(r, c, v) in &self.entries {
            out[r][c] = v;
        }
        out
    }

    pub fn to_csr<T: Real>(&self) -> Csr<T> {
        Csr::from_triplets(
            self.rows,
            self.cols,
            self.entries
                .iter()
                .map(|&(r, c, v)| (r, c, T::from_f64(v)))
                .collect(),
        )
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense evaluation of `D_v^{-1/2} H W D_e^{-1} Hᵀ D_v^{-1/2}` by explicit products.
    fn dense_theta(h: &Hypergraph) -> Vec<Vec<f64>> {
        let (n, m) = (h.num_nodes(), h.num_edges());
        let mut inc = vec![vec![0.0; m]; n];
        for (e, mem) in h.edge_members().iter().enumerate() {
            for &i in mem {
                inc[i][e] = 1.0;
            }
        }
        let dv: Vec<f64> = (0..n)
            .map(|i| (0..m).map(|e| inc[i][e] * h.edge_weights()[e]).sum())
            .collect();
        let de: Vec<f64> = (0..m).map(|e| (0..n).map(|i| inc[i][e]).sum()).collect();
        let dvis: Vec<f64> = dv
            .iter()
            .map(|&d| if d > 0.0 { d.powf(-0.5) } else { 0.0 })
            .collect();
        // left = D_v^{-1/2} H W D_e^{-1}
        let mut left = vec![vec![0.0; m]; n];
        for i in 0..n {
            for e in 0..m {
                left[i][e] = dvis[i] * inc[i][e] * h.edge_weights()[e] / de[e];
            }
        }
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for e in 0..m {
                    s += left[i][e] * inc[j][e];
                }
                out[i][j] = s * dvis[j];
            }
        }
        out
    }

    #[test]
    fn build_examples() {
        let h = build_hypergraph(&[vec![0, 1, 2]], None).unwrap();
        assert_eq!((h.num_nodes(), h.num_edges()), (3, 1));
        assert_eq!(h.memberships(1), &[0]);

        let h = build_hypergraph(&[vec![0], vec![0]], None).unwrap();
        assert_eq!(h.memberships(0), &[0, 1]);

        let h = build_hypergraph(&[vec![2, 0, 2, 1]], None).unwrap();
        assert_eq!(h.members(0), &[0, 1, 2]);
        assert!(h.is_consistent());
    }

    #[test]
    fn build_errors() {
        assert_eq!(
            build_hypergraph(&[vec![0], vec![]], None),
            Err(HypergraphError::EmptyHyperedge(1))
        );
        assert_eq!(
            build_hypergraph(&[vec![0]], Some(&[0.0])),
            Err(HypergraphError::InvalidWeight {
                edge: 0,
                weight: 0.0
            })
        );
        assert!(matches!(
            build_hypergraph(&[vec![0]], Some(&[-1.0])),
            Err(HypergraphError::InvalidWeight { .. })
        ));
        assert!(matches!(
            Hypergraph::new(2, &[vec![0, 5]], None),
            Err(HypergraphError::NodeOutOfRange { node: 5, .. })
        ));
    }

    #[test]
    fn degree_examples() {
        let h = build_hypergraph(&[vec![0, 1, 2]], None).unwrap();
        assert_eq!(h.degrees(), (vec![1.0, 1.0, 1.0], vec![3]));

        let h = build_hypergraph(&[vec![0, 1], vec![1, 2]], Some(&[2.0, 3.0])).unwrap();
        assert_eq!(h.degrees().0, vec![2.0, 5.0, 3.0]);

        let h = Hypergraph::new(4, &[vec![0, 1]], None).unwrap();
        assert_eq!(h.degrees().0[3], 0.0);
        assert_eq!(h.isolated_nodes(), vec![2, 3]);
        let t = h.theta();
        assert!(t.entries.iter().all(|&(r, c, _)| r < 2 && c < 2));
    }

    #[test]
    fn theta_single_edge_is_one_third() {
        let h = build_hypergraph(&[vec![0, 1, 2]], None).unwrap();
        let t = h.theta();
        assert_eq!(t.nnz(), 9);
        for &(_, _, v) in &t.entries {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn theta_path_matches_dense_oracle() {
        let h = build_hypergraph(&[vec![0, 1], vec![1, 2]], None).unwrap();
        let t = h.theta();
        let oracle = dense_theta(&h);
        // Frozen from the dense oracle: Θ00 = 1/2, Θ01 = 1/(2√2), Θ11 = 1/2, Θ02 = 0.
        assert!((oracle[0][0] - 0.5).abs() < 1e-15);
        assert!((oracle[0][1] - 0.353_553_390_593_273_8).abs() < 1e-15);
        assert!((oracle[1][1] - 0.5).abs() < 1e-15);
        assert_eq!(oracle[0][2], 0.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!((t.get(i, j) - oracle[i][j]).abs() < 1e-12);
            }
        }
        assert_eq!(t.get(0, 2), 0.0);
    }

    #[test]
    fn dual_examples() {
        let h = build_hypergraph(&[vec![0, 1], vec![1]], None).unwrap();
        let d = h.dual().unwrap();
        assert_eq!((d.num_nodes(), d.num_edges()), (2, 2));
        assert_eq!(d.edge_members(), &[vec![0], vec![0, 1]]);

        let h = build_hypergraph(&[vec![0, 1, 2]], None).unwrap();
        let d = h.dual().unwrap();
        assert_eq!(d.num_nodes(), 1);
        assert_eq!(d.edge_members(), &[vec![0], vec![0], vec![0]]);

        let h = Hypergraph::new(3, &[vec![0, 1]], None).unwrap();
        assert_eq!(h.dual(), Err(HypergraphError::IsolatedNode(2)));
    }

    fn arb_hypergraph() -> impl Strategy<Value = Hypergraph> {
        (2usize..=12).prop_flat_map(|n| {
            let edge = proptest::collection::vec(0..n, 1..=n.min(6));
            (
                proptest::collection::vec(edge, 1..=6),
                proptest::collection::vec(0.1f64..3.0, 6),
            )
                .prop_map(move |(edges, w)| {
                    Hypergraph::new(n, &edges, Some(&w[..edges.len()])).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn theta_sparse_matches_dense(h in arb_hypergraph()) {
            let t = h.theta();
            let oracle = dense_theta(&h);
            prop_assert!(t.max_asymmetry() <= 1e-12);
            for i in 0..h.num_nodes() {
                for j in 0..h.num_nodes() {
                    prop_assert!((t.get(i, j) - oracle[i][j]).abs() <= 1e-10);
                    prop_assert!(t.get(i, j) >= 0.0);
                }
            }
        }

        #[test]
        fn incidence_round_trip_and_dual_involution(h in arb_hypergraph()) {
            prop_assert!(h.is_consistent());
            let rebuilt = Hypergraph::new(h.num_nodes(), h.edge_members(), Some(h.edge_weights())).unwrap();
            prop_assert_eq!(&rebuilt, &h);
            if h.isolated_nodes().is_empty() {
                let dd = h.dual().unwrap().dual().unwrap();
                prop_assert!(dd.same_incidence(&h));
                prop_assert_eq!(dd.node_memberships(), h.node_memberships());
            }
        }
    }
}
