use std::sync::Arc;

use crate::kernel::{Real, Tape, Var};

use super::backbone::{dropout, HeadVars, Phase};
use super::batch::SubgraphBatch;
use super::context::GraphContext;
use super::params::{Mode, Pooling};
use super::ModelError;

/// Clamp applied inside every logarithm of the loss.
pub const LOG_FLOOR: f64 = 1e-12;

/// `Σ_{i,j} ‖X_i − X_j‖² Θ_ij`, evaluated as `2(Σ_i r_i ‖X_i‖² − tr(Xᵀ Θ X))`
/// with `r` the row sums of the symmetric `Θ`.
pub fn regularizer<T: Real>(
    tape: &mut Tape<T>,
    ctx: &GraphContext<T>,
    x: Var,
) -> Result<Var, ModelError> {
    let sq = tape.mul(x, x)?;
    let r = tape.constant(ctx.theta_row_sums.clone());
    let weighted = tape.mul_column(sq, r)?;
    let diag = tape.sum(weighted);
    let tx = tape.spmm(ctx.theta_csr.clone(), x)?;
    let cross = tape.mul(x, tx)?;
    let cross = tape.sum(cross);
    let diff = tape.sub(diag, cross)?;
    Ok(tape.scale(diff, T::from_f64(2.0)))
}

/// Weighted subgraph attention: within subgraph `j`, softmax over members `i`
/// of `M_ji · bᵀ X_i`. Returns one weight per member slot.
pub fn subgraph_attention<T: Real>(
    tape: &mut Tape<T>,
    batch: &SubgraphBatch<T>,
    x: Var,
    context: Var,
) -> Result<Var, ModelError> {
    let bt = tape.transpose(context);
    let u = tape.matmul(x, bt)?;
    let per_member = tape.gather_rows(u, batch.member_node.clone())?;
    let m = tape.constant(batch.weights.clone());
    let logits = tape.mul(per_member, m)?;
    Ok(tape.masked_softmax(logits, batch.groups.clone())?)
}

#[derive(Debug, Clone, Copy)]
pub struct Readout {
    /// Stacked subgraph representations `S` (`n × d`).
    pub representations: Var,
    /// Member attention; `None` under sum pooling.
    pub attention: Option<Var>,
}

/// `h(G_j) = ReLU(Σ_i a(G_j, i) X_i)`; sum pooling replaces `a` by ones.
pub fn subgraph_repr<T: Real>(
    tape: &mut Tape<T>,
    batch: &SubgraphBatch<T>,
    x: Var,
    context: Var,
    pooling: Pooling,
) -> Result<Readout, ModelError> {
    let (weights, attention) = match pooling {
        Pooling::Attention => {
            let a = subgraph_attention(tape, batch, x, context)?;
            (a, Some(a))
        }
        Pooling::Sum => {
            let ones = crate::kernel::Tensor::full(&[batch.member_node.len(), 1], T::one());
            (tape.constant(ones), None)
        }
    };
    let s = tape.segment_sum(
        weights,
        x,
        batch.member_node.clone(),
        batch.member_subject.clone(),
        batch.len(),
    )?;
    Ok(Readout {
        representations: tape.relu(s),
        attention,
    })
}

/// Classifier head: two ReLU layers, output projection, then row softmax
/// (multiclass) or element-wise sigmoid (multilabel).
pub fn classify<T: Real>(
    tape: &mut Tape<T>,
    s: Var,
    head: &HeadVars,
    mode: Mode,
    dropout_rate: f64,
    phase: &mut Phase<'_>,
) -> Result<Var, ModelError> {
    let mut h = s;
    for (w, b) in head.hidden {
        let z = tape.matmul(h, w)?;
        let z = tape.add_bias(z, b)?;
        let z = tape.relu(z);
        h = dropout(tape, z, dropout_rate, phase)?;
    }
    let logits = tape.matmul(h, head.output.0)?;
    let logits = tape.add_bias(logits, head.output.1)?;
    match mode {
        Mode::Multiclass => {
            let (n, f) = (tape.value(logits).rows(), tape.value(logits).cols());
            let rows: Vec<Vec<usize>> = (0..n).map(|r| (r * f..(r + 1) * f).collect()).collect();
            Ok(tape.masked_softmax(logits, Arc::new(rows))?)
        }
        Mode::Multilabel => Ok(tape.sigmoid(logits)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LossTerms {
    pub classification: Var,
    pub total: Var,
}

/// Cross-entropy summed over subjects, plus `reg_weight · l_reg` when given.
pub fn loss<T: Real>(
    tape: &mut Tape<T>,
    z: Var,
    labels: &crate::kernel::Tensor<T>,
    l_reg: Option<Var>,
    reg_weight: f64,
    mode: Mode,
) -> Result<LossTerms, ModelError> {
    if tape.value(z).shape() != labels.shape() {
        return Err(ModelError::InvalidLabel(format!(
            "predictions {:?} vs labels {:?}",
            tape.value(z).shape(),
            labels.shape()
        )));
    }
    let floor = T::from_f64(LOG_FLOOR);
    let y = tape.constant(labels.clone());
    let nll = match mode {
        Mode::Multiclass => {
            let f = labels.cols();
            if let Some(row) = labels
                .data()
                .chunks(f.max(1))
                .position(|r| r.iter().all(|&v| v == T::zero()))
            {
                return Err(ModelError::InvalidLabel(format!(
                    "label row {row} has no class"
                )));
            }
            let lz = tape.ln_clamped(z, floor);
            let t = tape.mul(y, lz)?;
            tape.sum(t)
        }
        Mode::Multilabel => {
            let lz = tape.ln_clamped(z, floor);
            let pos = tape.mul(y, lz)?;
            let neg_z = tape.scale(z, T::from_f64(-1.0));
            let one_minus_z = tape.add_scalar(neg_z, T::one());
            let l1z = tape.ln_clamped(one_minus_z, floor);
            let neg_y = tape.scale(y, T::from_f64(-1.0));
            let one_minus_y = tape.add_scalar(neg_y, T::one());
            let neg = tape.mul(one_minus_y, l1z)?;
            let both = tape.add(pos, neg)?;
            tape.sum(both)
        }
    };
    let classification = tape.scale(nll, T::from_f64(-1.0));
    let total = match l_reg {
        Some(r) if reg_weight != 0.0 => {
            let scaled = tape.scale(r, T::from_f64(reg_weight));
            tape.add(classification, scaled)?
        }
        _ => classification,
    };
    Ok(LossTerms {
        classification,
        total,
    })
}
