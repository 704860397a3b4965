//! The forward model: dual attention backbone, hypergraph regularizer,
//! weighted subgraph attention readout, classifier head and joint loss.

mod backbone;
mod batch;
mod context;
mod params;
mod readout;

#[cfg(test)]
mod tests;

pub use backbone::{
    aggregate_to_edges, aggregate_to_nodes, dropout, dual_attention_scores, edge_attention,
    edge_update, forward_backbone, init_edge_states, node_attention, node_update, BackboneOutput,
    HeadVars, LayerTrace, LayerVars, PairScores, ParamVars, Phase,
};
pub use batch::{Subgraph, SubgraphBatch};
pub use context::GraphContext;
pub use params::{Architecture, DenseLayer, HeadParams, LayerParams, Mode, ModelParams, Pooling};
pub use readout::{
    classify, loss, regularizer, subgraph_attention, subgraph_repr, LossTerms, Readout, LOG_FLOOR,
};

use thiserror::Error;

use crate::kernel::{KernelError, Real, Tape, Tensor, Var};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("invalid subgraph: {0}")]
    InvalidSubgraph(String),
    #[error("model does not match data: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub backbone: BackboneOutput,
    pub readout: Readout,
    /// Class scores `Z` (`n × F`).
    pub predictions: Var,
}

/// Backbone over the whole hypergraph, then readout and head for `batch`.
pub fn forward<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    vars: &ParamVars,
    arch: &Architecture,
    batch: &SubgraphBatch<T>,
    phase: &mut Phase<'_>,
) -> Result<ForwardOutput, ModelError> {
    check_arch(arch, ctx)?;
    let backbone = forward_backbone(tape, ctx, vars, arch, phase)?;
    let readout = subgraph_repr(
        tape,
        batch,
        backbone.node_states,
        vars.subgraph_context,
        arch.pooling,
    )?;
    let predictions = classify(
        tape,
        readout.representations,
        &vars.head,
        arch.mode,
        arch.dropout_rate,
        phase,
    )?;
    Ok(ForwardOutput {
        backbone,
        readout,
        predictions,
    })
}

#[derive(Debug, Clone)]
pub struct Objective {
    pub forward: ForwardOutput,
    pub regularizer: Var,
    pub loss: LossTerms,
}

/// Joint training objective on a labeled batch.
pub fn objective<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    vars: &ParamVars,
    arch: &Architecture,
    batch: &SubgraphBatch<T>,
    reg_weight: f64,
    phase: &mut Phase<'_>,
) -> Result<Objective, ModelError> {
    let labels = batch
        .labels()
        .ok_or_else(|| ModelError::InvalidLabel("batch has no labels".into()))?;
    let fwd = forward(tape, ctx, vars, arch, batch, phase)?;
    let reg = regularizer(tape, ctx, fwd.backbone.node_states)?;
    let terms = loss(
        tape,
        fwd.predictions,
        labels,
        Some(reg),
        reg_weight,
        arch.mode,
    )?;
    Ok(Objective {
        forward: fwd,
        regularizer: reg,
        loss: terms,
    })
}

fn check_arch<T: Real>(arch: &Architecture, ctx: &GraphContext<T>) -> Result<(), ModelError> {
    if arch.num_nodes != ctx.num_nodes() {
        return Err(ModelError::Mismatch(format!(
            "model has {} nodes, hypergraph has {}",
            arch.num_nodes,
            ctx.num_nodes()
        )));
    }
    Ok(())
}

impl<T: Real> ModelParams<T> {
    /// Evaluation-mode class scores for `batch`.
    pub fn predict(
        &self,
        ctx: &GraphContext<T>,
        batch: &SubgraphBatch<T>,
    ) -> Result<Tensor<T>, ModelError> {
        let mut tape = Tape::new();
        let vars = ParamVars::register(&mut tape, self, false);
        let out = forward(&mut tape, ctx, &vars, &self.arch, batch, &mut Phase::Eval)?;
        Ok(tape.value(out.predictions).clone())
    }

    /// Evaluation-mode final node representations `X`.
    pub fn node_representations(&self, ctx: &GraphContext<T>) -> Result<Tensor<T>, ModelError> {
        check_arch(&self.arch, ctx)?;
        let mut tape = Tape::new();
        let vars = ParamVars::register(&mut tape, self, false);
        let out = forward_backbone(&mut tape, ctx, &vars, &self.arch, &mut Phase::Eval)?;
        Ok(tape.value(out.node_states).clone())
    }
}
