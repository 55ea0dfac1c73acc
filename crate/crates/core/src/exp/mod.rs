//! Experiment orchestration: single runs, grid search, the negative-count
//! ablation, configuration files and checkpoints.

mod ablation;
pub mod checkpoint;
mod config;
mod grid;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{evaluate, mrr_only, EvalReport};
use crate::kb::{build_filter_index, load_dataset, FilterIndex, KnowledgeBase, Split};
use crate::models::{ModelKind, ModelParams, SimplEVariant};
use crate::training::{TrainConfig, TrainOutcome, Trainer};

pub use ablation::{run_ablation, run_ablation_on, write_csv, AblationPoint, AblationSpec};
pub use checkpoint::Checkpoint;
pub use config::{parse_config, Settings};
pub use grid::{run_grid, run_grid_on, search_grid, GridCell, GridResult, GridSearch, GridSpec};

pub const SPLIT_FILES: [&str; 3] = ["train.txt", "valid.txt", "test.txt"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dataset_dir: PathBuf,
    pub model: ModelKind,
    pub dim: usize,
    pub simple_variant: SimplEVariant,
    pub train: TrainConfig,
    pub output_dir: PathBuf,
    pub tag: String,
    /// Number of dev queries scored at each evaluation; all of them if `None`.
    pub dev_sample: Option<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            dataset_dir: PathBuf::from("data"),
            model: ModelKind::ComplEx,
            dim: 2000,
            simple_variant: SimplEVariant::default(),
            train: TrainConfig::default(),
            output_dir: PathBuf::from("runs"),
            tag: "run".into(),
            dev_sample: None,
        }
    }
}

impl ExperimentSpec {
    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.tag)
    }

    /// Seeded initial parameters (stream 0 of the configured seed).
    pub fn init_params(&self, kb: &KnowledgeBase) -> Result<ModelParams> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.train.seed);
        Ok(ModelParams::random(
            self.model,
            self.dim,
            kb.num_entities(),
            kb.num_relations(),
            self.train.use_reciprocal(),
            &mut rng,
        )?
        .with_simple_variant(self.simple_variant))
    }

    fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.tag.is_empty() || self.tag.contains(['/', '\\']) {
            return Err(Error::Config(format!("invalid tag `{}`", self.tag)));
        }
        // Surfaces odd/zero dimensions before any data is read.
        ModelParams::zeros(self.model, self.dim, 0, 0, false)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub report: EvalReport,
    pub outcome: TrainOutcome,
    pub run_dir: PathBuf,
}

/// Fails unless all three split files are present and readable.
pub fn check_dataset(dir: &Path) -> Result<()> {
    for name in SPLIT_FILES {
        let path = dir.join(name);
        fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Creates the run directory and makes sure files can be written in it.
pub fn prepare_run_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Trains on `kb` with dev-fold early stopping. Never touches the test split.
pub fn train_model(
    spec: &ExperimentSpec,
    kb: &KnowledgeBase,
    filter: &FilterIndex,
) -> Result<TrainOutcome> {
    spec.validate()?;
    if kb.split_len(Split::Valid) == 0 {
        return Err(Error::Config("dev split is empty".into()));
    }
    let sample = spec
        .dev_sample
        .map(|n| n.min(2 * kb.split_len(Split::Valid)));
    let params = spec.init_params(kb)?;
    let trainer = Trainer::new(params, spec.train.clone())?;
    let mut dev = |p: &ModelParams| mrr_only(p, kb, filter, Split::Valid, sample);
    trainer.run(kb, &mut dev)
}

/// Test-evaluates the selected parameters and writes the run artifacts.
pub fn finalize(
    spec: &ExperimentSpec,
    kb: &KnowledgeBase,
    filter: &FilterIndex,
    outcome: &TrainOutcome,
) -> Result<EvalReport> {
    let report = evaluate(&outcome.best, kb, filter, Split::Test)?;
    write_artifacts(&spec.run_dir(), &report, outcome)?;
    Ok(report)
}

/// Writes `report.json`, `log.jsonl`, `best.ckpt` and `last.ckpt`.
pub fn write_artifacts(dir: &Path, report: &EvalReport, outcome: &TrainOutcome) -> Result<()> {
    write_text(
        &dir.join("report.json"),
        &format!("{}\n", report.to_json_line()),
    )?;
    write_log(&dir.join("log.jsonl"), outcome)?;
    checkpoint::save(
        dir.join("best.ckpt"),
        &Checkpoint::params_only(outcome.best.clone(), outcome.best_epoch),
    )?;
    checkpoint::save(
        dir.join("last.ckpt"),
        &Checkpoint::from_snapshot(outcome.last.clone()),
    )
}

fn write_log(path: &Path, outcome: &TrainOutcome) -> Result<()> {
    let mut text = String::new();
    for rec in &outcome.log {
        text.push_str(&rec.to_json_line());
        text.push('\n');
    }
    write_text(path, &text)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Runs one experiment on an already loaded knowledge base.
pub fn run_experiment_on(spec: &ExperimentSpec, kb: &KnowledgeBase) -> Result<ExperimentResult> {
    spec.validate()?;
    let run_dir = spec.run_dir();
    prepare_run_dir(&run_dir)?;
    let filter = build_filter_index(kb);
    let outcome = train_model(spec, kb, &filter)?;
    let report = finalize(spec, kb, &filter, &outcome)?;
    Ok(ExperimentResult {
        report,
        outcome,
        run_dir,
    })
}

/// Loads `spec.dataset_dir`, trains, and evaluates the best dev checkpoint
/// on the test split.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    check_dataset(&spec.dataset_dir)?;
    prepare_run_dir(&spec.run_dir())?;
    let kb = load_dataset(&spec.dataset_dir)?;
    run_experiment_on(spec, &kb)
}
