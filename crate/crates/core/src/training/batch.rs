//! One optimizer step over a logical batch under each negative regime.

use rand::seq::index;
use rand::Rng;

use super::adagrad::{AdaGrad, OptState};
use super::loss::softmax_xent_in_place;
use super::regularize::{regularize, TouchedRows};
use super::{AccumSplit, AllEntitiesPath, NegativeRegime, Sampler, TrainConfig};
use crate::error::{Error, Result};
use crate::kb::Triple;
use crate::models::{Candidates, Gradients, ModelParams, Query};

/// Both query directions for every triple, tail first, with their gold answers.
pub fn batch_queries(params: &ModelParams, batch: &[Triple]) -> (Vec<Query>, Vec<usize>) {
    let mut queries = Vec::with_capacity(2 * batch.len());
    let mut golds = Vec::with_capacity(2 * batch.len());
    for t in batch {
        queries.push(params.tail_query(t.s, t.r));
        golds.push(t.o);
        queries.push(params.head_query(t.r, t.o));
        golds.push(t.s);
    }
    (queries, golds)
}

/// Entity and relation rows the batch's queries read.
pub fn touched_rows(params: &ModelParams, batch: &[Triple]) -> TouchedRows {
    let mut entities = Vec::with_capacity(2 * batch.len());
    let mut relations = Vec::with_capacity(2 * batch.len());
    for t in batch {
        entities.push(t.s);
        entities.push(t.o);
        relations.push(t.r);
        if params.reciprocal {
            relations.push(t.r + params.num_relations);
        }
    }
    TouchedRows::new(entities, relations)
}

/// Computes the batch objective and writes its gradient into `grads`
/// (which must start cleared). The objective is the mean loss over the
/// `2 * batch.len()` queries plus the regularization penalty.
pub fn batch_gradients(
    params: &ModelParams,
    batch: &[Triple],
    config: &TrainConfig,
    rng: &mut impl Rng,
    grads: &mut Gradients,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let (queries, golds) = batch_queries(params, batch);
    let scale = 1.0 / queries.len() as f64;
    let chunk = config.chunk;
    let loss_sum = match config.regime {
        NegativeRegime::AllEntities(AllEntitiesPath::OneN) => {
            full_softmax(params, &queries, &golds, chunk, scale, grads)?
        }
        NegativeRegime::AllEntities(AllEntitiesPath::Accumulated {
            micro_batches,
            split: AccumSplit::Batch,
        }) => {
            let size = queries.len().div_ceil(micro_batches.max(1));
            let mut total = 0.0;
            for (q, g) in queries.chunks(size).zip(golds.chunks(size)) {
                total += full_softmax(params, q, g, chunk, scale, grads)?;
            }
            total
        }
        NegativeRegime::AllEntities(AllEntitiesPath::Accumulated {
            micro_batches,
            split: AccumSplit::Candidates,
        }) => candidate_accumulated(params, &queries, &golds, micro_batches, chunk, scale, grads)?,
        NegativeRegime::Sampled {
            sampler: Sampler::Exhaustive,
            ..
        } => exhaustive(params, &queries, &golds, chunk, scale, grads)?,
        NegativeRegime::Sampled {
            k,
            sampler: Sampler::Uniform,
        } => {
            let n = params.num_entities();
            if k > n {
                return Err(Error::Config(format!(
                    "{k} negatives requested but only {n} entities exist"
                )));
            }
            let negatives = index::sample(rng, n, k).into_vec();
            uniform_shared(
                params,
                &queries,
                &golds,
                &negatives,
                config.exclude_gold,
                chunk,
                scale,
                grads,
            )?
        }
    };
    let rows = touched_rows(params, batch);
    let penalty = regularize(params, &rows, config.reg_kind, config.reg_coeff, grads);
    Ok(loss_sum * scale + penalty)
}

/// One AdaGrad step on the batch objective; returns the objective before the step.
pub fn train_batch(
    params: &mut ModelParams,
    opt: &mut OptState,
    batch: &[Triple],
    config: &TrainConfig,
    rng: &mut impl Rng,
    grads: &mut Gradients,
) -> Result<f64> {
    grads.clear();
    let loss = batch_gradients(params, batch, config, rng, grads)?;
    AdaGrad::new(config.learning_rate).step(params, opt, grads);
    Ok(loss)
}

fn full_softmax(
    params: &ModelParams,
    queries: &[Query],
    golds: &[usize],
    chunk: usize,
    scale: f64,
    grads: &mut Gradients,
) -> Result<f64> {
    let n = params.num_entities();
    let all = Candidates::Range(0..n);
    let enc = params.encode(queries)?;
    let mut scores = vec![0.0; queries.len() * n];
    params.score_encoded(&enc, &all, chunk, &mut scores);
    let mut loss = 0.0;
    for (row, &gold) in scores.chunks_mut(n).zip(golds) {
        loss += softmax_xent_in_place(row, gold);
        row.iter_mut().for_each(|x| *x *= scale);
    }
    let mut dq = enc.zeros_like();
    params.backward_candidates(&enc, &all, chunk, &scores, &mut dq, grads);
    params.backward_encode(&enc, &dq, grads);
    Ok(loss)
}

/// Full softmax with the candidate set split into `pieces` micro-batches.
/// Only one `B x |piece|` score block is alive at a time.
fn candidate_accumulated(
    params: &ModelParams,
    queries: &[Query],
    golds: &[usize],
    pieces: usize,
    chunk: usize,
    scale: f64,
    grads: &mut Gradients,
) -> Result<f64> {
    let n = params.num_entities();
    let batch = queries.len();
    let size = n.div_ceil(pieces.max(1)).max(1);
    let ranges: Vec<_> = (0..n).step_by(size).map(|a| a..(a + size).min(n)).collect();
    let enc = params.encode(queries)?;

    // Pass 1: streaming log-sum-exp per query.
    let mut run_max = vec![f64::NEG_INFINITY; batch];
    let mut run_sum = vec![0.0; batch];
    let mut gold_score = vec![0.0; batch];
    let mut block = Vec::new();
    for range in &ranges {
        let width = range.len();
        block.resize(batch * width, 0.0);
        params.score_encoded(&enc, &Candidates::Range(range.clone()), chunk, &mut block);
        for b in 0..batch {
            let row = &block[b * width..(b + 1) * width];
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let new_max = run_max[b].max(m);
            run_sum[b] = run_sum[b] * (run_max[b] - new_max).exp()
                + row.iter().map(|x| (x - new_max).exp()).sum::<f64>();
            run_max[b] = new_max;
            if range.contains(&golds[b]) {
                gold_score[b] = row[golds[b] - range.start];
            }
        }
    }
    let log_z: Vec<f64> = (0..batch).map(|b| run_max[b] + run_sum[b].ln()).collect();

    // Pass 2: softmax gradients piece by piece.
    let mut dq = enc.zeros_like();
    for range in &ranges {
        let width = range.len();
        let cands = Candidates::Range(range.clone());
        block.resize(batch * width, 0.0);
        params.score_encoded(&enc, &cands, chunk, &mut block);
        for b in 0..batch {
            let row = &mut block[b * width..(b + 1) * width];
            for x in row.iter_mut() {
                *x = (*x - log_z[b]).exp();
            }
            if range.contains(&golds[b]) {
                row[golds[b] - range.start] -= 1.0;
            }
            row.iter_mut().for_each(|x| *x *= scale);
        }
        params.backward_candidates(&enc, &cands, chunk, &block, &mut dq, grads);
    }
    params.backward_encode(&enc, &dq, grads);
    Ok((0..batch).map(|b| log_z[b] - gold_score[b]).sum())
}

/// Approximate softmax over the gold entity plus every other entity.
fn exhaustive(
    params: &ModelParams,
    queries: &[Query],
    golds: &[usize],
    chunk: usize,
    scale: f64,
    grads: &mut Gradients,
) -> Result<f64> {
    let n = params.num_entities();
    let all = Candidates::Range(0..n);
    let enc = params.encode(queries)?;
    let mut scores = vec![0.0; queries.len() * n];
    params.score_encoded(&enc, &all, chunk, &mut scores);
    let mut loss = 0.0;
    let mut sampled_row = Vec::with_capacity(n);
    for (row, &gold) in scores.chunks_mut(n).zip(golds) {
        sampled_row.clear();
        sampled_row.push(row[gold]);
        sampled_row.extend(
            row.iter()
                .enumerate()
                .filter(|&(c, _)| c != gold)
                .map(|(_, &x)| x),
        );
        loss += softmax_xent_in_place(&mut sampled_row, 0);
        row[gold] = sampled_row[0] * scale;
        let mut negs = sampled_row[1..].iter();
        for (c, x) in row.iter_mut().enumerate() {
            if c != gold {
                *x = negs.next().unwrap() * scale;
            }
        }
    }
    let mut dq = enc.zeros_like();
    params.backward_candidates(&enc, &all, chunk, &scores, &mut dq, grads);
    params.backward_encode(&enc, &dq, grads);
    Ok(loss)
}

/// Approximate softmax over the gold entity plus a negative set shared by
/// the whole batch.
#[allow(clippy::too_many_arguments)]
fn uniform_shared(
    params: &ModelParams,
    queries: &[Query],
    golds: &[usize],
    negatives: &[usize],
    exclude_gold: bool,
    chunk: usize,
    scale: f64,
    grads: &mut Gradients,
) -> Result<f64> {
    let k = negatives.len();
    let batch = queries.len();
    let cands = Candidates::List(negatives);
    let enc = params.encode(queries)?;
    let mut neg_scores = vec![0.0; batch * k];
    params.score_encoded(&enc, &cands, chunk, &mut neg_scores);
    let mut pos_scores = vec![0.0; batch];
    params.score_diagonal(&enc, golds, &mut pos_scores);

    let mut loss = 0.0;
    let mut row = Vec::with_capacity(k + 1);
    for b in 0..batch {
        row.clear();
        row.push(pos_scores[b]);
        for (j, &c) in negatives.iter().enumerate() {
            let masked = exclude_gold && c == golds[b];
            row.push(if masked {
                f64::NEG_INFINITY
            } else {
                neg_scores[b * k + j]
            });
        }
        loss += softmax_xent_in_place(&mut row, 0);
        pos_scores[b] = row[0] * scale;
        for j in 0..k {
            neg_scores[b * k + j] = row[j + 1] * scale;
        }
    }
    let mut dq = enc.zeros_like();
    params.backward_candidates(&enc, &cands, chunk, &neg_scores, &mut dq, grads);
    params.backward_diagonal(&enc, golds, &pos_scores, &mut dq, grads);
    params.backward_encode(&enc, &dq, grads);
    Ok(loss)
}
