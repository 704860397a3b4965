use crate::kernel::{Real, Tensor};
use crate::model::Mode;

use super::TrainError;

/// Binary decision matrix from class scores: argmax one-hot for multiclass
/// (lowest index wins ties), `z ≥ threshold` for multilabel.
pub fn binarize<T: Real>(z: &Tensor<T>, mode: Mode, threshold: f64) -> Vec<Vec<bool>> {
    (0..z.rows())
        .map(|r| {
            let row = z.row_slice(r);
            match mode {
                Mode::Multiclass => {
                    let mut best = 0;
                    for (c, v) in row.iter().enumerate() {
                        if *v > row[best] {
                            best = c;
                        }
                    }
                    (0..row.len()).map(|c| c == best).collect()
                }
                Mode::Multilabel => row.iter().map(|v| v.as_f64() >= threshold).collect(),
            }
        })
        .collect()
}

pub fn indicator_rows(labels: &[Vec<usize>], num_classes: usize) -> Vec<Vec<bool>> {
    labels
        .iter()
        .map(|ls| (0..num_classes).map(|c| ls.contains(&c)).collect())
        .collect()
}

/// `2TP / (2TP + FP + FN)` pooled over every (subject, class) cell; 0 when the
/// denominator is 0.
pub fn micro_f1(predictions: &[Vec<bool>], labels: &[Vec<bool>]) -> Result<f64, TrainError> {
    if predictions.len() != labels.len() {
        return Err(TrainError::Shape(format!(
            "{} prediction rows, {} label rows",
            predictions.len(),
            labels.len()
        )));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (r, (p, l)) in predictions.iter().zip(labels).enumerate() {
        if p.len() != l.len() {
            return Err(TrainError::Shape(format!(
                "row {r}: {} predictions, {} labels",
                p.len(),
                l.len()
            )));
        }
        for (&a, &b) in p.iter().zip(l) {
            match (a, b) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
    }
    let denom = 2 * tp + fp + fn_;
    Ok(if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    })
}
