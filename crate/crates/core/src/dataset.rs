use serde::{Deserialize, Serialize};

use crate::kernel::Real;
use crate::model::{ModelError, Subgraph, SubgraphBatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!(
                "unknown split {other:?} (expected train, val or test)"
            )),
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Labeled subgraphs of one hypergraph plus their split assignment.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub subgraphs: Vec<Subgraph>,
    /// Class indices per subject.
    pub labels: Vec<Vec<usize>>,
    pub classes: Vec<String>,
    /// `None` for subjects outside every split.
    pub splits: Vec<Option<Split>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.subgraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgraphs.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.splits[i] == Some(split))
            .collect()
    }

    /// Labeled batch over the given subjects, in the given order.
    pub fn batch<T: Real>(&self, indices: &[usize]) -> Result<SubgraphBatch<T>, ModelError> {
        let labels: Vec<Vec<usize>> = indices.iter().map(|&i| self.labels[i].clone()).collect();
        SubgraphBatch::new(indices.iter().map(|&i| &self.subgraphs[i]))
            .with_labels(&labels, self.num_classes())
    }

    /// Copy restricted to the given subjects.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            subgraphs: indices.iter().map(|&i| self.subgraphs[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            classes: self.classes.clone(),
            splits: indices.iter().map(|&i| self.splits[i]).collect(),
        }
    }
}
