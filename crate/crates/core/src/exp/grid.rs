//! Exhaustive hyperparameter search with dev-fold model selection.

use serde::Serialize;

use super::{finalize, prepare_run_dir, train_model, write_text, ExperimentSpec};
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::kb::{build_filter_index, load_dataset, FilterIndex, KnowledgeBase};
use crate::training::TrainOutcome;

pub const DEFAULT_REG_COEFFS: [f64; 6] = [1.0, 0.1, 0.01, 0.001, 0.0001, 0.00001];
pub const DEFAULT_LEARNING_RATES: [f64; 5] = [0.5, 0.1, 0.01, 0.001, 0.0001];
pub const DEFAULT_BATCH_SIZES: [usize; 5] = [100, 200, 500, 1000, 2000];

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub base: ExperimentSpec,
    pub reg_coeffs: Vec<f64>,
    pub learning_rates: Vec<f64>,
    pub batch_sizes: Vec<usize>,
}

impl GridSpec {
    pub fn new(base: ExperimentSpec) -> Self {
        GridSpec {
            base,
            reg_coeffs: DEFAULT_REG_COEFFS.to_vec(),
            learning_rates: DEFAULT_LEARNING_RATES.to_vec(),
            batch_sizes: DEFAULT_BATCH_SIZES.to_vec(),
        }
    }

    /// Cell settings `(reg_coeff, learning_rate, batch_size)` in search
    /// order, with the batch size varying fastest.
    pub fn cells(&self) -> Vec<(f64, f64, usize)> {
        let mut out = Vec::new();
        for &reg in &self.reg_coeffs {
            for &lr in &self.learning_rates {
                for &bs in &self.batch_sizes {
                    out.push((reg, lr, bs));
                }
            }
        }
        out
    }

    pub fn cell_spec(&self, (reg, lr, bs): (f64, f64, usize)) -> ExperimentSpec {
        let mut spec = self.base.clone();
        spec.train.reg_coeff = reg;
        spec.train.learning_rate = lr;
        spec.train.batch_size = bs;
        spec
    }

    fn validate(&self) -> Result<()> {
        if self.reg_coeffs.is_empty()
            || self.learning_rates.is_empty()
            || self.batch_sizes.is_empty()
        {
            return Err(Error::Config("grid axes must be nonempty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub index: usize,
    pub reg_coeff: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dev_mrr: Option<f64>,
    pub best_epoch: Option<usize>,
    /// Set when the cell failed (for example, diverged).
    pub error: Option<String>,
}

/// Outcome of the selection phase, before any test access.
#[derive(Debug, Clone)]
pub struct GridSearch {
    pub cells: Vec<GridCell>,
    pub winner: usize,
    pub outcome: TrainOutcome,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    pub winner: usize,
    pub report: EvalReport,
}

/// Trains every cell and picks the highest dev MRR; earlier cells win ties.
/// Failed cells are recorded rather than aborting the search.
pub fn search_grid(
    grid: &GridSpec,
    kb: &KnowledgeBase,
    filter: &FilterIndex,
) -> Result<GridSearch> {
    grid.validate()?;
    let mut cells = Vec::new();
    let mut best: Option<(usize, TrainOutcome)> = None;
    for (index, setting) in grid.cells().into_iter().enumerate() {
        let mut cell = GridCell {
            index,
            reg_coeff: setting.0,
            learning_rate: setting.1,
            batch_size: setting.2,
            dev_mrr: None,
            best_epoch: None,
            error: None,
        };
        match train_model(&grid.cell_spec(setting), kb, filter) {
            Ok(outcome) if outcome.best_dev_mrr.is_finite() => {
                cell.dev_mrr = Some(outcome.best_dev_mrr);
                cell.best_epoch = Some(outcome.best_epoch);
                let better = best
                    .as_ref()
                    .is_none_or(|(_, b)| outcome.best_dev_mrr > b.best_dev_mrr);
                if better {
                    best = Some((index, outcome));
                }
            }
            Ok(outcome) => {
                cell.error = Some(format!("non-finite dev MRR {}", outcome.best_dev_mrr))
            }
            Err(e) => cell.error = Some(e.to_string()),
        }
        cells.push(cell);
    }
    let (winner, outcome) = best.ok_or(Error::NoViableCell)?;
    Ok(GridSearch {
        cells,
        winner,
        outcome,
    })
}

/// Searches the grid on `kb`, then test-evaluates only the winner. Writes
/// `grid.jsonl` plus the winner's artifacts under `base.output_dir/base.tag`.
pub fn run_grid_on(grid: &GridSpec, kb: &KnowledgeBase) -> Result<GridResult> {
    grid.validate()?;
    let dir = grid.base.run_dir();
    prepare_run_dir(&dir)?;
    let filter = build_filter_index(kb);
    let search = search_grid(grid, kb, &filter)?;
    let winner_spec = grid.cell_spec(grid.cells()[search.winner]);
    let report = finalize(&winner_spec, kb, &filter, &search.outcome)?;
    let mut text = String::new();
    for cell in &search.cells {
        text.push_str(&serde_json::to_string(cell)?);
        text.push('\n');
    }
    write_text(&dir.join("grid.jsonl"), &text)?;
    Ok(GridResult {
        cells: search.cells,
        winner: search.winner,
        report,
    })
}

pub fn run_grid(grid: &GridSpec) -> Result<GridResult> {
    grid.validate()?;
    super::check_dataset(&grid.base.dataset_dir)?;
    prepare_run_dir(&grid.base.run_dir())?;
    let kb = load_dataset(&grid.base.dataset_dir)?;
    run_grid_on(grid, &kb)
}
