use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::hypercore::Hypergraph;
use crate::kernel::{Real, Tape, Tensor};
use crate::model::{
    classify, forward_backbone, loss, objective, regularizer, subgraph_repr, GraphContext,
    ModelParams, ParamVars, Phase,
};

use super::adam::{adam_step, AdamState};
use super::config::{Monitor, TrainConfig};
use super::early_stop::fit;
use super::metrics::{binarize, indicator_rows, micro_f1};
use super::TrainError;

/// Loss and micro-F1 of one labeled subject set under evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitEval {
    pub objective: f64,
    pub classification: f64,
    pub micro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub train: SplitEval,
    pub val: SplitEval,
    pub test: Option<SplitEval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    /// Evaluation-mode objective on the training split after each epoch.
    pub train_losses: Vec<f64>,
    /// Monitored validation loss after each epoch.
    pub val_losses: Vec<f64>,
    pub epochs_run: usize,
    /// 1-based epoch of the returned parameters.
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// Metrics of the returned parameters.
    pub metrics: SplitMetrics,
    pub wall_time_secs: f64,
}

/// Evaluation-mode losses and micro-F1 for several subject sets, sharing one
/// backbone pass.
pub fn evaluate<T: Real>(
    params: &ModelParams<T>,
    ctx: &GraphContext<T>,
    dataset: &Dataset,
    sets: &[&[usize]],
    reg_weight: f64,
    threshold: f64,
) -> Result<Vec<SplitEval>, TrainError> {
    let arch = &params.arch;
    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, params, false);
    let backbone = forward_backbone(&mut tape, ctx, &vars, arch, &mut Phase::Eval)?;
    let reg = regularizer(&mut tape, ctx, backbone.node_states)?;
    let mut out = Vec::with_capacity(sets.len());
    for idx in sets {
        if idx.is_empty() {
            return Err(TrainError::EmptySplit("evaluation set".into()));
        }
        let batch = dataset.batch::<T>(idx)?;
        let r = subgraph_repr(
            &mut tape,
            &batch,
            backbone.node_states,
            vars.subgraph_context,
            arch.pooling,
        )?;
        let z = classify(
            &mut tape,
            r.representations,
            &vars.head,
            arch.mode,
            0.0,
            &mut Phase::Eval,
        )?;
        let terms = loss(
            &mut tape,
            z,
            batch.labels().expect("labeled"),
            Some(reg),
            reg_weight,
            arch.mode,
        )?;
        let labels: Vec<Vec<usize>> = idx.iter().map(|&i| dataset.labels[i].clone()).collect();
        let f1 = micro_f1(
            &binarize(tape.value(z), arch.mode, threshold),
            &indicator_rows(&labels, dataset.num_classes()),
        )?;
        out.push(SplitEval {
            objective: tape.value(terms.total).item().as_f64(),
            classification: tape.value(terms.classification).item().as_f64(),
            micro_f1: f1,
        });
    }
    Ok(out)
}

#[derive(Clone)]
struct TrainState {
    params: ModelParams<f32>,
    adam: AdamState,
    rng: ChaCha8Rng,
}

fn nonempty(dataset: &Dataset, split: Split) -> Result<Vec<usize>, TrainError> {
    let idx = dataset.indices(split);
    if idx.is_empty() {
        return Err(TrainError::EmptySplit(split.to_string()));
    }
    Ok(idx)
}

fn finite(x: f64, what: &str, epoch: usize) -> Result<f64, TrainError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(TrainError::NumericalDivergence(format!(
            "{what} is {x} at epoch {epoch}"
        )))
    }
}

/// Fits a model on the training split, early-stopping on the validation split.
///
/// Single-threaded and deterministic given `config.seed`: the same seed drives
/// parameter initialization, minibatch order and dropout masks.
pub fn train(
    dataset: &Dataset,
    hypergraph: &Hypergraph,
    config: &TrainConfig,
) -> Result<(ModelParams<f32>, TrainReport), TrainError> {
    config.validate()?;
    let start = Instant::now();
    let train_idx = nonempty(dataset, Split::Train)?;
    let val_idx = nonempty(dataset, Split::Val)?;
    let test_idx = dataset.indices(Split::Test);
    if let Some((i, _)) = dataset
        .subgraphs
        .iter()
        .enumerate()
        .find(|(_, s)| s.members().iter().any(|&m| m >= hypergraph.num_nodes()))
    {
        return Err(TrainError::Data(format!(
            "subject {} references a node outside the hypergraph",
            dataset.ids[i]
        )));
    }

    let ctx = GraphContext::<f32>::new(hypergraph.clone());
    let arch = config.architecture(hypergraph.num_nodes(), dataset.num_classes());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = ModelParams::<f32>::init(arch.clone(), &mut rng);
    let mut state = TrainState {
        params,
        adam: AdamState::new(),
        rng,
    };
    let full_batch = match config.batch_size {
        Some(b) if b < train_idx.len() => None,
        _ => Some(dataset.batch::<f32>(&train_idx)?),
    };

    let mut train_losses = Vec::new();
    let mut val_losses = Vec::new();
    let mut order = train_idx.clone();
    let (best, summary) = fit(
        &mut state,
        config.max_epochs,
        config.patience,
        |st, epoch| {
            let step = |st: &mut TrainState,
                        batch: &crate::model::SubgraphBatch<f32>|
             -> Result<(), TrainError> {
                let mut tape = Tape::new();
                let vars = ParamVars::register(&mut tape, &st.params, true);
                let obj = objective(
                    &mut tape,
                    &ctx,
                    &vars,
                    &arch,
                    batch,
                    config.reg_weight,
                    &mut Phase::Train(&mut st.rng),
                )?;
                finite(
                    tape.value(obj.loss.total).item().as_f64(),
                    "training loss",
                    epoch,
                )?;
                let grads = tape.backward(obj.loss.total)?;
                let g: Vec<Tensor<f32>> = vars.vars().into_iter().map(|v| grads.get(v)).collect();
                adam_step(
                    &mut st.params.tensors_mut(),
                    &g,
                    &mut st.adam,
                    config.learning_rate,
                    config.weight_decay,
                )
            };
            match (&full_batch, config.batch_size) {
                (Some(batch), _) => step(st, batch)?,
                (None, Some(b)) => {
                    order.shuffle(&mut st.rng);
                    for chunk in order.chunks(b) {
                        step(st, &dataset.batch::<f32>(chunk)?)?;
                    }
                }
                (None, None) => unreachable!(),
            }
            let ev = evaluate(
                &st.params,
                &ctx,
                dataset,
                &[&train_idx, &val_idx],
                config.reg_weight,
                config.threshold,
            )?;
            train_losses.push(finite(ev[0].objective, "training loss", epoch)?);
            let monitored = match config.monitor {
                Monitor::Objective => ev[1].objective,
                Monitor::Classification => ev[1].classification,
            };
            val_losses.push(finite(monitored, "validation loss", epoch)?);
            log::debug!(
                "epoch {epoch}: train {:.6} val {:.6} val-f1 {:.4}",
                ev[0].objective,
                monitored,
                ev[1].micro_f1
            );
            Ok::<_, TrainError>(monitored)
        },
    )?;

    let params = best.params;
    let mut sets: Vec<&[usize]> = vec![&train_idx, &val_idx];
    if !test_idx.is_empty() {
        sets.push(&test_idx);
    }
    let ev = evaluate(
        &params,
        &ctx,
        dataset,
        &sets,
        config.reg_weight,
        config.threshold,
    )?;
    let report = TrainReport {
        seed: config.seed,
        train_losses,
        val_losses,
        epochs_run: summary.epochs_run,
        best_epoch: summary.best_epoch,
        stopped_early: summary.stopped_early,
        metrics: SplitMetrics {
            train: ev[0],
            val: ev[1],
            test: ev.get(2).copied(),
        },
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((params, report))
}
