//! Optimization: Adam, early stopping, the training loop, micro-F1 and grid search.

mod adam;
mod config;
mod early_stop;
mod grid;
mod metrics;
mod trainer;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use config::{Monitor, TrainConfig};
pub use early_stop::{fit, EarlyStopping, FitSummary, Verdict};
pub use grid::{grid_search, mean_std, Grid, GridPoint, GridResult};
pub use metrics::{binarize, indicator_rows, micro_f1};
pub use trainer::{evaluate, train, SplitEval, SplitMetrics, TrainReport};

use thiserror::Error;

use crate::kernel::KernelError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("split {0} is empty")]
    EmptySplit(String),
    #[error("numerical divergence: {0}")]
    NumericalDivergence(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<KernelError> for TrainError {
    fn from(e: KernelError) -> Self {
        TrainError::Model(ModelError::Kernel(e))
    }
}
