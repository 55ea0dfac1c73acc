//! Losses, regularizers, AdaGrad and the training loop.

mod adagrad;
mod batch;
mod loss;
mod regularize;
mod trainer;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::DEFAULT_CHUNK;

pub use adagrad::{AdaGrad, OptState, DEFAULT_EPSILON};
pub use batch::{batch_gradients, batch_queries, touched_rows, train_batch};
pub use loss::{loss_full_softmax, loss_sampled, softmax_xent_in_place};
pub use regularize::{regularize, RegKind, TouchedRows};
pub use trainer::{LogRecord, RngState, TrainOutcome, Trainer, TrainerSnapshot};

/// How negatives are drawn in the sampled regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// `k` distinct entities drawn uniformly per batch and shared by every
    /// query in it. The gold entity is not excluded unless
    /// [`TrainConfig::exclude_gold`] is set.
    Uniform,
    /// Every entity except the gold one, per query. `k` is ignored.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccumSplit {
    /// Split the candidate entities into micro-batches (two passes: one for
    /// the log-partition, one for gradients).
    Candidates,
    /// Split the queries of the logical batch into micro-batches.
    Batch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllEntitiesPath {
    /// Score every query against every entity in one pass.
    OneN,
    /// Accumulate raw gradients over `micro_batches` pieces, then take a
    /// single optimizer step.
    Accumulated {
        micro_batches: usize,
        split: AccumSplit,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeRegime {
    Sampled { k: usize, sampler: Sampler },
    AllEntities(AllEntitiesPath),
}

impl NegativeRegime {
    pub fn sampled(k: usize) -> Self {
        NegativeRegime::Sampled {
            k,
            sampler: Sampler::Uniform,
        }
    }

    pub fn exhaustive() -> Self {
        NegativeRegime::Sampled {
            k: usize::MAX,
            sampler: Sampler::Exhaustive,
        }
    }

    pub fn one_n() -> Self {
        NegativeRegime::AllEntities(AllEntitiesPath::OneN)
    }

    pub fn accumulated(micro_batches: usize) -> Self {
        NegativeRegime::AllEntities(AllEntitiesPath::Accumulated {
            micro_batches,
            split: AccumSplit::Candidates,
        })
    }

    pub fn is_all_entities(&self) -> bool {
        matches!(self, NegativeRegime::AllEntities(_))
    }

    fn validate(&self) -> Result<()> {
        match *self {
            NegativeRegime::Sampled { k: 0, .. } => {
                Err(Error::Config("negative count must be at least 1".into()))
            }
            NegativeRegime::AllEntities(AllEntitiesPath::Accumulated {
                micro_batches: 0, ..
            }) => Err(Error::Config("micro-batch count must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for NegativeRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegativeRegime::Sampled {
                sampler: Sampler::Exhaustive,
                ..
            } => f.write_str("exhaustive"),
            NegativeRegime::Sampled { k, .. } => write!(f, "{k}"),
            NegativeRegime::AllEntities(AllEntitiesPath::OneN) => f.write_str("all-1n"),
            NegativeRegime::AllEntities(AllEntitiesPath::Accumulated {
                micro_batches,
                split: AccumSplit::Candidates,
            }) => write!(f, "all-accum:{micro_batches}"),
            NegativeRegime::AllEntities(AllEntitiesPath::Accumulated {
                micro_batches,
                split: AccumSplit::Batch,
            }) => write!(f, "all-accum-batch:{micro_batches}"),
        }
    }
}

impl FromStr for NegativeRegime {
    type Err = Error;

    /// Accepts `<k>`, `exhaustive`, `all-1n`, `all-accum:<m>` and
    /// `all-accum-batch:<m>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid negatives `{s}`"));
        let parse_count = |v: &str| v.parse::<usize>().map_err(|_| bad());
        let regime = match s {
            "all-1n" => NegativeRegime::one_n(),
            "exhaustive" => NegativeRegime::exhaustive(),
            _ => {
                if let Some(m) = s.strip_prefix("all-accum-batch:") {
                    NegativeRegime::AllEntities(AllEntitiesPath::Accumulated {
                        micro_batches: parse_count(m)?,
                        split: AccumSplit::Batch,
                    })
                } else if let Some(m) = s.strip_prefix("all-accum:") {
                    NegativeRegime::accumulated(parse_count(m)?)
                } else {
                    NegativeRegime::sampled(parse_count(s)?)
                }
            }
        };
        regime.validate()?;
        Ok(regime)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub reg_kind: RegKind,
    pub reg_coeff: f64,
    pub batch_size: usize,
    pub regime: NegativeRegime,
    pub max_epochs: usize,
    /// Consecutive non-improving dev evaluations before stopping.
    pub patience: usize,
    pub eval_every: usize,
    /// `None` enables reciprocal relations for all-entity and N3 runs.
    pub reciprocal: Option<bool>,
    pub seed: u64,
    /// Candidate chunk for translation-model scoring.
    pub chunk: usize,
    /// Mask the gold entity when it shows up among uniform negatives.
    pub exclude_gold: bool,
    /// Record wall-clock seconds in the training log.
    pub record_timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            reg_kind: RegKind::L2,
            reg_coeff: 0.0,
            batch_size: 1000,
            regime: NegativeRegime::one_n(),
            max_epochs: 1000,
            patience: 10,
            eval_every: 5,
            reciprocal: None,
            seed: 0,
            chunk: DEFAULT_CHUNK,
            exclude_gold: false,
            record_timing: false,
        }
    }
}

impl TrainConfig {
    pub fn use_reciprocal(&self) -> bool {
        self.reciprocal
            .unwrap_or(self.regime.is_all_entities() || self.reg_kind == RegKind::N3)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::Config(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.reg_coeff.is_finite() && self.reg_coeff >= 0.0) {
            return Err(Error::Config(
                "regularization coefficient must be >= 0".into(),
            ));
        }
        positive("batch size", self.batch_size)?;
        positive("max epochs", self.max_epochs)?;
        positive("patience", self.patience)?;
        positive("eval interval", self.eval_every)?;
        positive("chunk", self.chunk)?;
        if self.reg_kind == RegKind::N3 && self.reciprocal == Some(false) {
            return Err(Error::Config(
                "N3 regularization requires reciprocal relations".into(),
            ));
        }
        self.regime.validate()
    }
}
