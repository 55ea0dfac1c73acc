//! Filtered link-prediction metrics: MRR, HITS@1 and HITS@10.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{FilterIndex, KnowledgeBase, Split, Triple};
use crate::models::{ModelParams, Query, DEFAULT_CHUNK};

/// Queries scored per 1-N call during evaluation.
const EVAL_BATCH: usize = 128;

/// Expected rank of `gold` under random tie-breaking, after removing every
/// candidate in `filter` other than `gold` itself.
///
/// `filter` must be sorted ascending (as [`FilterIndex`] sets are).
pub fn filtered_rank(scores: &[f64], gold: usize, filter: &[usize]) -> Result<f64> {
    if gold >= scores.len() {
        return Err(Error::IdOutOfRange {
            what: "gold entity",
            id: gold,
            size: scores.len(),
        });
    }
    let target = scores[gold];
    let mut greater = 0usize;
    let mut ties = 0usize;
    for &x in scores {
        if x > target {
            greater += 1;
        } else if x == target {
            ties += 1;
        }
    }
    ties -= 1; // gold itself
    for &c in filter {
        if c == gold || c >= scores.len() {
            continue;
        }
        if scores[c] > target {
            greater -= 1;
        } else if scores[c] == target {
            ties -= 1;
        }
    }
    Ok(1.0 + greater as f64 + ties as f64 / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DirectionReport {
    pub mrr: f64,
    pub hits1: f64,
    pub hits10: f64,
    pub query_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub mrr: f64,
    pub hits1: f64,
    pub hits10: f64,
    pub head: DirectionReport,
    pub tail: DirectionReport,
    pub query_count: usize,
}

impl EvalReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[derive(Default)]
struct Tally {
    rr: f64,
    hits1: usize,
    hits10: usize,
    count: usize,
}

impl Tally {
    fn add(&mut self, rank: f64) {
        self.rr += 1.0 / rank;
        self.hits1 += (rank <= 1.0) as usize;
        self.hits10 += (rank <= 10.0) as usize;
        self.count += 1;
    }

    fn merge(&self, other: &Tally) -> Tally {
        Tally {
            rr: self.rr + other.rr,
            hits1: self.hits1 + other.hits1,
            hits10: self.hits10 + other.hits10,
            count: self.count + other.count,
        }
    }

    fn report(&self) -> DirectionReport {
        if self.count == 0 {
            return DirectionReport::default();
        }
        let n = self.count as f64;
        DirectionReport {
            mrr: self.rr / n,
            hits1: self.hits1 as f64 / n,
            hits10: self.hits10 as f64 / n,
            query_count: self.count,
        }
    }
}

/// Filtered ranks of the first `limit` queries, interleaved as
/// `(tail of triple 0, head of triple 0, tail of triple 1, ...)`.
/// The flag is `true` for head queries.
fn ranks(
    params: &ModelParams,
    triples: &[Triple],
    filter: &FilterIndex,
    limit: usize,
) -> Result<Vec<(bool, f64)>> {
    let mut out = Vec::with_capacity(limit);
    let mut queries: Vec<Query> = Vec::with_capacity(EVAL_BATCH);
    let mut meta: Vec<(bool, usize, &[usize])> = Vec::with_capacity(EVAL_BATCH);
    let flush = |queries: &mut Vec<Query>,
                 meta: &mut Vec<(bool, usize, &[usize])>,
                 out: &mut Vec<(bool, f64)>|
     -> Result<()> {
        if queries.is_empty() {
            return Ok(());
        }
        let scores = params.score_queries(queries, DEFAULT_CHUNK)?;
        for (b, &(is_head, gold, set)) in meta.iter().enumerate() {
            out.push((is_head, filtered_rank(scores.row(b), gold, set)?));
        }
        queries.clear();
        meta.clear();
        Ok(())
    };
    'outer: for t in triples {
        for is_head in [false, true] {
            if out.len() + queries.len() >= limit {
                break 'outer;
            }
            if is_head {
                queries.push(params.head_query(t.r, t.o));
                meta.push((true, t.s, filter.heads(t.r, t.o)));
            } else {
                queries.push(params.tail_query(t.s, t.r));
                meta.push((false, t.o, filter.tails(t.s, t.r)));
            }
            if queries.len() == EVAL_BATCH {
                flush(&mut queries, &mut meta, &mut out)?;
            }
        }
    }
    flush(&mut queries, &mut meta, &mut out)?;
    Ok(out)
}

/// Ranks both query directions of every triple in `split`.
pub fn evaluate(
    params: &ModelParams,
    kb: &KnowledgeBase,
    filter: &FilterIndex,
    split: Split,
) -> Result<EvalReport> {
    let triples = kb.split(split);
    let ranked = ranks(params, triples, filter, 2 * triples.len())?;
    let (mut head, mut tail) = (Tally::default(), Tally::default());
    for (is_head, rank) in ranked {
        if is_head {
            head.add(rank)
        } else {
            tail.add(rank)
        }
    }
    let both = tail.merge(&head).report();
    Ok(EvalReport {
        split: split.name().to_owned(),
        mrr: both.mrr,
        hits1: both.hits1,
        hits10: both.hits10,
        head: head.report(),
        tail: tail.report(),
        query_count: both.query_count,
    })
}

/// MRR over the first `sample` queries (all queries when `None`), in the
/// same interleaved order as [`evaluate`].
pub fn mrr_only(
    params: &ModelParams,
    kb: &KnowledgeBase,
    filter: &FilterIndex,
    split: Split,
    sample: Option<usize>,
) -> Result<f64> {
    let triples = kb.split(split);
    let total = 2 * triples.len();
    let limit = sample.unwrap_or(total);
    if limit > total {
        return Err(Error::Config(format!(
            "sample of {limit} queries exceeds the {total} available"
        )));
    }
    if limit == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let ranked = ranks(params, triples, filter, limit)?;
    Ok(ranked.iter().map(|(_, r)| 1.0 / r).sum::<f64>() / ranked.len() as f64)
}
