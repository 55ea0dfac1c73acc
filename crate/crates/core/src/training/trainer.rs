//! Epoch loop with dev-fold early stopping.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adagrad::OptState;
use super::batch::train_batch;
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::kb::{KnowledgeBase, Triple};
use crate::models::{Gradients, ModelParams};

/// One line of the training log, written after every dev evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_mrr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_secs: Option<f64>,
}

impl LogRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("log record serializes")
    }
}

/// Exact position of the training generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// Everything needed to resume training exactly where it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerSnapshot {
    pub params: ModelParams,
    pub opt: OptState,
    pub epoch: usize,
    pub rng: RngState,
    pub best: Option<ModelParams>,
    pub best_mrr: f64,
    pub best_epoch: usize,
    pub stale: usize,
    pub finished: bool,
    pub log: Vec<LogRecord>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the best dev evaluation, never simply the last ones.
    pub best: ModelParams,
    pub best_epoch: usize,
    pub best_dev_mrr: f64,
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub log: Vec<LogRecord>,
    pub last: TrainerSnapshot,
}

pub struct Trainer {
    config: TrainConfig,
    params: ModelParams,
    opt: OptState,
    rng: ChaCha8Rng,
    epoch: usize,
    best: Option<ModelParams>,
    best_mrr: f64,
    best_epoch: usize,
    stale: usize,
    finished: bool,
    log: Vec<LogRecord>,
    grads: Gradients,
    started: Instant,
}

/// Training generator: the configured seed on stream 1 (stream 0 is used for
/// initialization).
pub(crate) fn training_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

impl Trainer {
    pub fn new(params: ModelParams, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let opt = OptState::new(&params);
        let rng = training_rng(config.seed);
        Ok(Self::assemble(config, params, opt, rng))
    }

    pub fn from_snapshot(snapshot: TrainerSnapshot, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let rng = snapshot.rng.restore();
        let mut trainer = Self::assemble(config, snapshot.params, snapshot.opt, rng);
        trainer.epoch = snapshot.epoch;
        trainer.best = snapshot.best;
        trainer.best_mrr = snapshot.best_mrr;
        trainer.best_epoch = snapshot.best_epoch;
        trainer.stale = snapshot.stale;
        trainer.finished = snapshot.finished;
        trainer.log = snapshot.log;
        Ok(trainer)
    }

    fn assemble(config: TrainConfig, params: ModelParams, opt: OptState, rng: ChaCha8Rng) -> Self {
        let grads = params.zero_gradients();
        Trainer {
            config,
            params,
            opt,
            rng,
            epoch: 0,
            best: None,
            best_mrr: f64::NEG_INFINITY,
            best_epoch: 0,
            stale: 0,
            finished: false,
            log: Vec::new(),
            grads,
            started: Instant::now(),
        }
    }

    pub fn snapshot(&self) -> TrainerSnapshot {
        TrainerSnapshot {
            params: self.params.clone(),
            opt: self.opt.clone(),
            epoch: self.epoch,
            rng: RngState::capture(&self.rng),
            best: self.best.clone(),
            best_mrr: self.best_mrr,
            best_epoch: self.best_epoch,
            stale: self.stale,
            finished: self.finished,
            log: self.log.clone(),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn opt_state(&self) -> &OptState {
        &self.opt
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// One pass over `train` in a freshly shuffled order. Returns the mean
    /// batch objective.
    pub fn run_epoch(&mut self, train: &[Triple]) -> Result<f64> {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut self.rng);
        let mut batch = Vec::with_capacity(self.config.batch_size);
        let mut total = 0.0;
        let mut batches = 0usize;
        for ids in order.chunks(self.config.batch_size) {
            batch.clear();
            batch.extend(ids.iter().map(|&i| train[i]));
            let loss = train_batch(
                &mut self.params,
                &mut self.opt,
                &batch,
                &self.config,
                &mut self.rng,
                &mut self.grads,
            )?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch: self.epoch + 1,
                });
            }
            total += loss;
            batches += 1;
        }
        self.epoch += 1;
        Ok(if batches == 0 {
            0.0
        } else {
            total / batches as f64
        })
    }

    /// Trains until early stopping or `max_epochs`, or until `epoch_limit`
    /// more epochs have run. `dev_mrr` scores a parameter snapshot.
    pub fn run_for(
        &mut self,
        kb: &KnowledgeBase,
        dev_mrr: &mut dyn FnMut(&ModelParams) -> Result<f64>,
        epoch_limit: Option<usize>,
    ) -> Result<()> {
        let mut ran = 0;
        while !self.finished && epoch_limit.is_none_or(|limit| ran < limit) {
            let train_loss = self.run_epoch(kb.train())?;
            ran += 1;
            let last = self.epoch >= self.config.max_epochs;
            if self.epoch % self.config.eval_every == 0 || last {
                let mrr = dev_mrr(&self.params)?;
                self.log.push(LogRecord {
                    epoch: self.epoch,
                    train_loss,
                    dev_mrr: mrr,
                    wall_secs: self
                        .config
                        .record_timing
                        .then(|| self.started.elapsed().as_secs_f64()),
                });
                if mrr > self.best_mrr {
                    self.best_mrr = mrr;
                    self.best_epoch = self.epoch;
                    self.best = Some(self.params.clone());
                    self.stale = 0;
                } else {
                    self.stale += 1;
                    if self.stale >= self.config.patience {
                        self.finished = true;
                    }
                }
            }
            if last {
                self.finished = true;
            }
        }
        Ok(())
    }

    pub fn run(
        mut self,
        kb: &KnowledgeBase,
        dev_mrr: &mut dyn FnMut(&ModelParams) -> Result<f64>,
    ) -> Result<TrainOutcome> {
        self.run_for(kb, dev_mrr, None)?;
        Ok(self.into_outcome())
    }

    pub fn into_outcome(self) -> TrainOutcome {
        let last = self.snapshot();
        let stopped_early = self.epoch < self.config.max_epochs;
        TrainOutcome {
            best: self.best.unwrap_or(self.params),
            best_epoch: self.best_epoch,
            best_dev_mrr: self.best_mrr,
            epochs_run: self.epoch,
            stopped_early,
            log: self.log,
            last,
        }
    }
}
