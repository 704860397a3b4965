use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::hypercore::Hypergraph;

use super::config::TrainConfig;
use super::trainer::train;
use super::TrainError;

/// Candidate values per hyperparameter; an empty list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub learning_rate: Vec<f64>,
    pub weight_decay: Vec<f64>,
    pub dropout_rate: Vec<f64>,
    pub hidden_dim: Vec<usize>,
    pub reg_weight: Vec<f64>,
}

impl Grid {
    /// Cartesian product over the listed values, learning rate varying slowest.
    pub fn points(&self, base: &TrainConfig) -> Vec<TrainConfig> {
        fn or_base<T: Clone>(v: &[T], b: T) -> Vec<T> {
            if v.is_empty() {
                vec![b]
            } else {
                v.to_vec()
            }
        }
        let mut out = Vec::new();
        for &lr in &or_base(&self.learning_rate, base.learning_rate) {
            for &wd in &or_base(&self.weight_decay, base.weight_decay) {
                for &dr in &or_base(&self.dropout_rate, base.dropout_rate) {
                    for &d in &or_base(&self.hidden_dim, base.hidden_dim) {
                        for &rw in &or_base(&self.reg_weight, base.reg_weight) {
                            out.push(TrainConfig {
                                learning_rate: lr,
                                weight_decay: wd,
                                dropout_rate: dr,
                                hidden_dim: d,
                                reg_weight: rw,
                                ..base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub config: TrainConfig,
    /// Validation micro-F1 per seed, in seed order.
    pub val_micro_f1: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over seeds (0 for a single seed).
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub points: Vec<GridPoint>,
    pub best: usize,
}

impl GridResult {
    pub fn best_point(&self) -> &GridPoint {
        &self.points[self.best]
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.windows(2).all(|w| w[0] == w[1]) {
        return (xs.first().copied().unwrap_or(f64::NAN), 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Trains every grid point under every seed and selects the point with the
/// highest mean validation micro-F1; ties go to the lower learning rate, then
/// to the earlier point. Runs on up to `jobs` worker threads; results do not
/// depend on `jobs`.
pub fn grid_search(
    dataset: &Dataset,
    hypergraph: &Hypergraph,
    base: &TrainConfig,
    grid: &Grid,
    seeds: &[u64],
    jobs: usize,
) -> Result<GridResult, TrainError> {
    let points = grid.points(base);
    if seeds.is_empty() {
        return Err(TrainError::InvalidConfig(
            "grid search needs at least one seed".into(),
        ));
    }
    let runs: Vec<(usize, TrainConfig)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            seeds.iter().map(move |&s| {
                (
                    i,
                    TrainConfig {
                        seed: s,
                        ..p.clone()
                    },
                )
            })
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
    let scores: Vec<Result<f64, TrainError>> = pool.install(|| {
        runs.par_iter()
            .map(|(_, cfg)| train(dataset, hypergraph, cfg).map(|(_, r)| r.metrics.val.micro_f1))
            .collect()
    });
    let mut per_point = vec![Vec::with_capacity(seeds.len()); points.len()];
    for ((i, _), s) in runs.iter().zip(scores) {
        per_point[*i].push(s?);
    }
    let points: Vec<GridPoint> = points
        .into_iter()
        .zip(per_point)
        .map(|(config, val_micro_f1)| {
            let (mean, std) = mean_std(&val_micro_f1);
            GridPoint {
                config,
                val_micro_f1,
                mean,
                std,
            }
        })
        .collect();
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        let b = &points[best];
        if p.mean > b.mean || (p.mean == b.mean && p.config.learning_rate < b.config.learning_rate)
        {
            best = i;
        }
    }
    Ok(GridResult { points, best })
}
