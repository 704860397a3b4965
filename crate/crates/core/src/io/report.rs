use serde::{Deserialize, Serialize};

use crate::train::{SplitMetrics, TrainConfig, TrainReport};

/// Run metrics as written to disk. Wall time is left out so that seeded reruns
/// produce byte-identical documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub seed: u64,
    pub config: TrainConfig,
    pub classes: Vec<String>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    pub metrics: SplitMetrics,
}

impl MetricsDocument {
    pub fn new(report: &TrainReport, config: &TrainConfig, classes: &[String]) -> Self {
        Self {
            seed: report.seed,
            config: config.clone(),
            classes: classes.to_vec(),
            epochs_run: report.epochs_run,
            best_epoch: report.best_epoch,
            stopped_early: report.stopped_early,
            train_losses: report.train_losses.clone(),
            val_losses: report.val_losses.clone(),
            metrics: report.metrics.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }
}
