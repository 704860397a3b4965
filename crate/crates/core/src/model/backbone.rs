//! Strongly dual attention message passing.
//!
//! Each layer computes one score per incidence pair,
//! `e(p, g) = cᵀ LeakyReLU((h_N(g) W_N + b_N) ∘ (h_E(p) W_E + b_E))`,
//! and normalizes that single score set twice: per hyperedge over its members
//! (hyperedge attention over nodes) and per node over its hyperedges (node
//! attention over hyperedges).

use rand::{Rng, RngCore};

use crate::kernel::{Real, Tape, Tensor, Var};

use super::context::GraphContext;
use super::params::{Architecture, ModelParams};
use super::ModelError;

#[derive(Debug, Clone, Copy)]
pub struct LayerVars {
    pub w_node: Var,
    pub b_node: Var,
    pub w_edge: Var,
    pub b_edge: Var,
    pub context: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct HeadVars {
    pub hidden: [(Var, Var); 2],
    pub output: (Var, Var),
}

/// Model parameters recorded on a tape.
#[derive(Debug, Clone)]
pub struct ParamVars {
    pub node_embeddings: Var,
    pub layers: Vec<LayerVars>,
    pub subgraph_context: Var,
    pub head: HeadVars,
}

impl ParamVars {
    /// Records every parameter as a leaf; `trainable` selects param vs constant leaves.
    pub fn register<T: Real>(tape: &mut Tape<T>, params: &ModelParams<T>, trainable: bool) -> Self {
        let vars: Vec<Var> = params
            .tensors()
            .into_iter()
            .map(|t| {
                if trainable {
                    tape.param(t.clone())
                } else {
                    tape.constant(t.clone())
                }
            })
            .collect();
        Self::from_vars(&vars, params.layers.len())
    }

    /// Interprets vars given in canonical parameter order.
    pub fn from_vars(vars: &[Var], num_layers: usize) -> Self {
        assert_eq!(
            vars.len(),
            1 + 5 * num_layers + 7,
            "canonical parameter count"
        );
        let layers = (0..num_layers)
            .map(|k| {
                let o = 1 + 5 * k;
                LayerVars {
                    w_node: vars[o],
                    b_node: vars[o + 1],
                    w_edge: vars[o + 2],
                    b_edge: vars[o + 3],
                    context: vars[o + 4],
                }
            })
            .collect();
        let o = 1 + 5 * num_layers;
        Self {
            node_embeddings: vars[0],
            layers,
            subgraph_context: vars[o],
            head: HeadVars {
                hidden: [(vars[o + 1], vars[o + 2]), (vars[o + 3], vars[o + 4])],
                output: (vars[o + 5], vars[o + 6]),
            },
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = vec![self.node_embeddings];
        for l in &self.layers {
            out.extend([l.w_node, l.b_node, l.w_edge, l.b_edge, l.context]);
        }
        out.push(self.subgraph_context);
        let [(w0, b0), (w1, b1)] = self.head.hidden;
        out.extend([w0, b0, w1, b1, self.head.output.0, self.head.output.1]);
        out
    }
}

/// Whether stochastic layers are active.
pub enum Phase<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

impl Phase<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Phase::Train(_))
    }
}

/// Inverted dropout: zeroes entries with probability `rate` and rescales the
/// survivors by `1/(1 − rate)`. Identity outside training or when `rate == 0`.
pub fn dropout<T: Real>(
    tape: &mut Tape<T>,
    x: Var,
    rate: f64,
    phase: &mut Phase<'_>,
) -> Result<Var, ModelError> {
    let rng = match phase {
        Phase::Train(rng) if rate > 0.0 => rng,
        _ => return Ok(x),
    };
    let keep = T::from_f64(1.0 / (1.0 - rate));
    let shape = tape.value(x).shape().to_vec();
    let n = tape.value(x).len();
    let mask: Vec<T> = (0..n)
        .map(|_| {
            if rng.gen::<f64>() < rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect();
    let m = tape.constant(Tensor::new(&shape, mask)?);
    Ok(tape.mul(x, m)?)
}

/// Initial hyperedge states: the mean of member node embeddings.
pub fn init_edge_states<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    h_nodes: Var,
) -> Result<Var, ModelError> {
    let w = tape.constant(ctx.member_mean_weights.clone());
    Ok(tape.segment_sum(
        w,
        h_nodes,
        ctx.pair_node.clone(),
        ctx.pair_edge.clone(),
        ctx.num_edges(),
    )?)
}

/// Pair scores for one layer, shared by both attention directions.
#[derive(Debug, Clone, Copy)]
pub struct PairScores {
    /// `P × 1` column, one entry per incidence pair in context order.
    pub scores: Var,
    /// Number of pair scores evaluated to produce `scores`.
    pub evaluations: usize,
}

pub fn dual_attention_scores<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    h_nodes: Var,
    h_edges: Var,
    layer: &LayerVars,
    leaky_slope: T,
) -> Result<PairScores, ModelError> {
    let tn = tape.matmul(h_nodes, layer.w_node)?;
    let tn = tape.add_bias(tn, layer.b_node)?;
    let te = tape.matmul(h_edges, layer.w_edge)?;
    let te = tape.add_bias(te, layer.b_edge)?;
    let per_node = tape.gather_rows(tn, ctx.pair_node.clone())?;
    let per_edge = tape.gather_rows(te, ctx.pair_edge.clone())?;
    let ready = tape.mul(per_node, per_edge)?;
    let ready = tape.leaky_relu(ready, leaky_slope);
    let c = tape.transpose(layer.context);
    let scores = tape.matmul(ready, c)?;
    let evaluations = tape.value(scores).len();
    Ok(PairScores {
        scores,
        evaluations,
    })
}

/// Hyperedge attention over member nodes.
pub fn edge_attention<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    scores: Var,
) -> Result<Var, ModelError> {
    Ok(tape.masked_softmax(scores, ctx.edge_groups.clone())?)
}

/// Node attention over incident hyperedges.
pub fn node_attention<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    scores: Var,
) -> Result<Var, ModelError> {
    Ok(tape.masked_softmax(scores, ctx.node_groups.clone())?)
}

/// `h_E(p) = ReLU(Σ_g a_E(p, g) h_N(g))`.
pub fn aggregate_to_edges<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    attention: Var,
    h_nodes: Var,
) -> Result<Var, ModelError> {
    let s = tape.segment_sum(
        attention,
        h_nodes,
        ctx.pair_node.clone(),
        ctx.pair_edge.clone(),
        ctx.num_edges(),
    )?;
    Ok(tape.relu(s))
}

/// `h_N(g) = ReLU(Σ_p a_N(g, p) h_E(p))`; nodes without hyperedges get zeros.
pub fn aggregate_to_nodes<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    attention: Var,
    h_edges: Var,
) -> Result<Var, ModelError> {
    let s = tape.segment_sum(
        attention,
        h_edges,
        ctx.pair_edge.clone(),
        ctx.pair_node.clone(),
        ctx.num_nodes(),
    )?;
    Ok(tape.relu(s))
}

/// One hyperedge update from layer `k−1` states.
pub fn edge_update<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    h_nodes: Var,
    h_edges: Var,
    layer: &LayerVars,
    leaky_slope: T,
) -> Result<Var, ModelError> {
    let s = dual_attention_scores(tape, ctx, h_nodes, h_edges, layer, leaky_slope)?;
    let a = edge_attention(tape, ctx, s.scores)?;
    aggregate_to_edges(tape, ctx, a, h_nodes)
}

/// One node update from layer `k−1` states.
pub fn node_update<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    h_nodes: Var,
    h_edges: Var,
    layer: &LayerVars,
    leaky_slope: T,
) -> Result<Var, ModelError> {
    let s = dual_attention_scores(tape, ctx, h_nodes, h_edges, layer, leaky_slope)?;
    let a = node_attention(tape, ctx, s.scores)?;
    aggregate_to_nodes(tape, ctx, a, h_edges)
}

/// What one layer computed, kept for inspection and interpretation.
#[derive(Debug, Clone, Copy)]
pub struct LayerTrace {
    pub scores: PairScores,
    pub edge_attention: Var,
    pub node_attention: Var,
}

#[derive(Debug, Clone)]
pub struct BackboneOutput {
    /// Final node representations `X` (`|N| × d`).
    pub node_states: Var,
    /// Final hyperedge representations (`|E| × d`).
    pub edge_states: Var,
    pub layers: Vec<LayerTrace>,
}

/// Runs all message passing layers over the full hypergraph.
pub fn forward_backbone<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    vars: &ParamVars,
    arch: &Architecture,
    phase: &mut Phase<'_>,
) -> Result<BackboneOutput, ModelError> {
    let slope = T::from_f64(arch.leaky_slope);
    let mut h_nodes = vars.node_embeddings;
    let mut h_edges = init_edge_states(tape, ctx, h_nodes)?;
    let mut layers = Vec::with_capacity(vars.layers.len());
    for layer in &vars.layers {
        let scores = dual_attention_scores(tape, ctx, h_nodes, h_edges, layer, slope)?;
        let a_e = edge_attention(tape, ctx, scores.scores)?;
        let a_n = node_attention(tape, ctx, scores.scores)?;
        let new_edges = aggregate_to_edges(tape, ctx, a_e, h_nodes)?;
        let new_nodes = aggregate_to_nodes(tape, ctx, a_n, h_edges)?;
        h_edges = dropout(tape, new_edges, arch.dropout_rate, phase)?;
        h_nodes = dropout(tape, new_nodes, arch.dropout_rate, phase)?;
        layers.push(LayerTrace {
            scores,
            edge_attention: a_e,
            node_attention: a_n,
        });
    }
    Ok(BackboneOutput {
        node_states: h_nodes,
        edge_states: h_edges,
        layers,
    })
}
