//! Inductive subgraph classification on hypergraphs with strongly dual
//! attention message passing, hypergraph regularization and weighted subgraph
//! attention.

pub mod dataset;
pub mod hypercore;
pub mod interpret;
pub mod io;
pub mod kernel;
pub mod model;
pub mod synthetic;
pub mod train;

pub use dataset::{Dataset, Split};
pub use hypercore::{build_hypergraph, Hypergraph, HypergraphError, SparseMatrix};
pub use io::{Checkpoint, GeneSetCatalog, IoError};
pub use kernel::{Real, Tape, Tensor, Var};
pub use model::{
    Architecture, GraphContext, Mode, ModelError, ModelParams, Pooling, Subgraph, SubgraphBatch,
};
pub use train::{train, TrainConfig, TrainError, TrainReport};
