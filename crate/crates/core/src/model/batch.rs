use std::sync::Arc;

use crate::kernel::{Real, Tensor};

use super::ModelError;

/// One subgraph: member node indices with their per-node weights (a row of `M`).
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    members: Vec<usize>,
    weights: Vec<f64>,
}

impl Subgraph {
    /// Validates and deduplicates members (the first occurrence's weight is kept).
    pub fn new(
        members: Vec<usize>,
        weights: Vec<f64>,
        num_nodes: usize,
    ) -> Result<Self, ModelError> {
        if members.len() != weights.len() {
            return Err(ModelError::InvalidSubgraph(format!(
                "{} members but {} weights",
                members.len(),
                weights.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        let mut m = Vec::with_capacity(members.len());
        let mut w = Vec::with_capacity(members.len());
        for (node, weight) in members.into_iter().zip(weights) {
            if node >= num_nodes {
                return Err(ModelError::InvalidSubgraph(format!(
                    "member {node} out of range"
                )));
            }
            if !(weight >= 0.0 && weight.is_finite()) {
                return Err(ModelError::InvalidSubgraph(format!(
                    "weight {weight} for member {node}"
                )));
            }
            if seen.insert(node) {
                m.push(node);
                w.push(weight);
            }
        }
        if m.is_empty() {
            return Err(ModelError::InvalidSubgraph("no members".into()));
        }
        Ok(Self {
            members: m,
            weights: w,
        })
    }

    /// Members with unit weights.
    pub fn unweighted(members: Vec<usize>, num_nodes: usize) -> Result<Self, ModelError> {
        let w = vec![1.0; members.len()];
        Self::new(members, w, num_nodes)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Subgraphs flattened into member slots, ready for the readout ops.
pub struct SubgraphBatch<T> {
    pub(crate) member_node: Arc<Vec<usize>>,
    pub(crate) member_subject: Arc<Vec<usize>>,
    pub(crate) groups: Arc<Vec<Vec<usize>>>,
    pub(crate) weights: Tensor<T>,
    /// Label indicator rows `Y`, present for labeled batches.
    pub(crate) labels: Option<Tensor<T>>,
    len: usize,
}

impl<T: Real> SubgraphBatch<T> {
    pub fn new<'a>(subgraphs: impl IntoIterator<Item = &'a Subgraph>) -> Self {
        let mut member_node = Vec::new();
        let mut member_subject = Vec::new();
        let mut groups = Vec::new();
        let mut weights = Vec::new();
        for (j, s) in subgraphs.into_iter().enumerate() {
            let mut g = Vec::with_capacity(s.members.len());
            for (&n, &w) in s.members.iter().zip(&s.weights) {
                g.push(member_node.len());
                member_node.push(n);
                member_subject.push(j);
                weights.push(T::from_f64(w));
            }
            groups.push(g);
        }
        let len = groups.len();
        Self {
            member_node: Arc::new(member_node),
            member_subject: Arc::new(member_subject),
            groups: Arc::new(groups),
            weights: Tensor::column(weights),
            labels: None,
            len,
        }
    }

    /// Attaches labels as class-index sets, one per subgraph.
    pub fn with_labels(
        mut self,
        labels: &[Vec<usize>],
        num_classes: usize,
    ) -> Result<Self, ModelError> {
        if labels.len() != self.len {
            return Err(ModelError::InvalidLabel(format!(
                "{} label rows for {} subgraphs",
                labels.len(),
                self.len
            )));
        }
        let mut y = vec![T::zero(); self.len * num_classes];
        for (j, ls) in labels.iter().enumerate() {
            for &c in ls {
                if c >= num_classes {
                    return Err(ModelError::InvalidLabel(format!(
                        "class {c} of {num_classes}"
                    )));
                }
                y[j * num_classes + c] = T::one();
            }
        }
        self.labels = Some(Tensor::from_parts(vec![self.len, num_classes], y));
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn labels(&self) -> Option<&Tensor<T>> {
        self.labels.as_ref()
    }

    /// Member slots of subgraph `j`.
    pub fn group(&self, j: usize) -> &[usize] {
        &self.groups[j]
    }

    pub fn member_nodes(&self) -> &[usize] {
        &self.member_node
    }
}
