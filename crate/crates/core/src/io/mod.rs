//! File formats: gene set collections, subgraph tables, variants, splits,
//! model checkpoints and run metrics.

mod checkpoint;
mod gmt;
mod report;
mod split;
mod subgraphs;
mod variants;

pub use checkpoint::{
    checkpoint_bytes, load_checkpoint, parse_checkpoint, save_checkpoint, Checkpoint,
    FORMAT_VERSION, MAGIC,
};
pub use gmt::{parse_gmt, serialize_gmt, GeneSet, GeneSetCatalog};
pub use report::MetricsDocument;
pub use split::{load_split, serialize_split, stratified_split};
pub use subgraphs::{load_subgraphs, serialize_subgraphs, EmptyPolicy, LabelMode, SubgraphTable};
pub use variants::{aggregate_variants, parse_variants, VariantRecord};

use std::collections::HashMap;

use thiserror::Error;

use crate::dataset::{Dataset, Split};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("duplicate gene set {0:?}")]
    DuplicateSet(String),
    #[error("gene set {0:?} has no genes")]
    EmptyGeneSet(String),
    #[error("duplicate subject {0:?}")]
    DuplicateSubject(String),
    #[error("line {line}: unknown class {class:?}")]
    UnknownClass { line: usize, class: String },
    #[error("line {line}: subject {subject:?} has no genes in the catalog")]
    EmptySubgraph { line: usize, subject: String },
    #[error("invalid read depth: {0}")]
    InvalidDepth(String),
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("unsupported checkpoint format version {0}")]
    UnsupportedVersion(u64),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
}

impl SubgraphTable {
    /// Dataset with split assignments looked up by subject id; subjects missing
    /// from `splits` are left unassigned.
    pub fn into_dataset(self, splits: &HashMap<String, Split>) -> Dataset {
        let assigned = self.ids.iter().map(|id| splits.get(id).copied()).collect();
        self.into_dataset_with(assigned)
    }

    pub fn into_dataset_with(self, splits: Vec<Option<Split>>) -> Dataset {
        Dataset {
            ids: self.ids,
            subgraphs: self.subgraphs,
            labels: self.labels,
            classes: self.classes,
            splits,
        }
    }
}
