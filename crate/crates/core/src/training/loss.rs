//! Softmax cross-entropy over a row of candidate scores.

use crate::error::{Error, Result};

/// Cross-entropy of `softmax(row)` against `gold`, computed with
/// max-subtraction. On return `row` holds `softmax(row) - onehot(gold)`.
pub fn softmax_xent_in_place(row: &mut [f64], gold: usize) -> f64 {
    let (argmax, max) =
        row.iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, x)| if x > acc.1 { (i, x) } else { acc },
            );
    // The max term contributes exactly exp(0) = 1; summing the rest separately
    // keeps ln(1 + tiny) accurate for saturated rows.
    let gold_score = row[gold];
    let mut rest = 0.0;
    for (i, x) in row.iter_mut().enumerate() {
        *x = (*x - max).exp();
        if i != argmax {
            rest += *x;
        }
    }
    let loss = (max - gold_score) + rest.ln_1p();
    let inv_total = 1.0 / (1.0 + rest);
    for x in row.iter_mut() {
        *x *= inv_total;
    }
    row[gold] -= 1.0;
    loss
}

/// Full softmax over all entities: `-score[gold] + logsumexp(scores)`.
pub fn loss_full_softmax(scores: &[f64], gold: usize) -> Result<(f64, Vec<f64>)> {
    if gold >= scores.len() {
        return Err(Error::IdOutOfRange {
            what: "gold entity",
            id: gold,
            size: scores.len(),
        });
    }
    let mut grad = scores.to_vec();
    let loss = softmax_xent_in_place(&mut grad, gold);
    Ok((loss, grad))
}

/// Approximate softmax over `[pos; negs]`. The returned gradient row has the
/// positive at index 0 followed by the negatives in order.
pub fn loss_sampled(pos: f64, negs: &[f64]) -> (f64, Vec<f64>) {
    let mut row = Vec::with_capacity(negs.len() + 1);
    row.push(pos);
    row.extend_from_slice(negs);
    let loss = softmax_xent_in_place(&mut row, 0);
    (loss, row)
}
