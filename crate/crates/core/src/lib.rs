//! Knowledge base completion with translation (TransE, RotatE) and
//! multiplicative (ComplEx, SimplE) embedding models.
//!
//! Models can be trained against a handful of sampled negatives or against
//! every entity in the vocabulary. Multiplicative models score all candidates
//! with one fused product; translation models use a candidate-chunked path so
//! the `batch x dim x entities` intermediate never has to be materialized at
//! once, and gradients can be accumulated over several micro-batches before a
//! single optimizer step.
//!
//! Evaluation follows the filtered link-prediction protocol: every known-true
//! answer other than the gold one is removed before ranking.

pub mod error;
pub mod eval;
pub mod exp;
pub mod kb;
pub mod models;
pub mod training;

pub use error::{Error, Result};
pub use eval::{evaluate, filtered_rank, mrr_only, DirectionReport, EvalReport};

pub use kb::{
    build_filter_index, build_kb, load_dataset, load_split, FilterIndex, KnowledgeBase, Split,
    Triple,
};
pub use models::{Candidates, ModelKind, ModelParams, Query, ScoreMatrix, SimplEVariant};
pub use training::{
    AccumSplit, AdaGrad, AllEntitiesPath, NegativeRegime, OptState, RegKind, Sampler, TrainConfig,
    Trainer,
};
