//! Test MRR as a function of the number of sampled negatives.

use std::path::Path;

use super::{check_dataset, prepare_run_dir, train_model, write_text, ExperimentSpec};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::kb::{build_filter_index, load_dataset, KnowledgeBase, Split};
use crate::training::NegativeRegime;

pub const DEFAULT_COUNTS: [usize; 13] = [
    100, 200, 400, 600, 800, 1000, 2000, 4000, 6000, 8000, 10000, 12000, 14000,
];

#[derive(Debug, Clone, PartialEq)]
pub struct AblationSpec {
    pub base: ExperimentSpec,
    pub negative_counts: Vec<usize>,
    /// At `k == |E|`, train against every non-gold entity instead of a
    /// uniform draw of `k` (which may include the gold entity).
    pub exhaustive_at_full: bool,
}

impl AblationSpec {
    pub fn new(base: ExperimentSpec) -> Self {
        AblationSpec {
            base,
            negative_counts: DEFAULT_COUNTS.to_vec(),
            exhaustive_at_full: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationPoint {
    pub k: usize,
    pub mrr: f64,
}

/// One full train and test evaluation per negative count.
pub fn run_ablation_on(spec: &AblationSpec, kb: &KnowledgeBase) -> Result<Vec<AblationPoint>> {
    if spec.negative_counts.is_empty() {
        return Err(Error::Config("no negative counts given".into()));
    }
    let ne = kb.num_entities();
    if let Some(&k) = spec.negative_counts.iter().find(|&&k| k == 0 || k > ne) {
        return Err(Error::Config(format!(
            "negative count {k} outside 1..={ne} (number of entities)"
        )));
    }
    let filter = build_filter_index(kb);
    let mut points = Vec::with_capacity(spec.negative_counts.len());
    for &k in &spec.negative_counts {
        let mut run = spec.base.clone();
        run.train.regime = if spec.exhaustive_at_full && k == ne {
            NegativeRegime::exhaustive()
        } else {
            NegativeRegime::sampled(k)
        };
        let outcome = train_model(&run, kb, &filter)?;
        let report = evaluate(&outcome.best, kb, &filter, Split::Test)?;
        points.push(AblationPoint { k, mrr: report.mrr });
    }
    Ok(points)
}

pub fn write_csv(path: &Path, points: &[AblationPoint]) -> Result<()> {
    let mut text = String::from("k,mrr\n");
    for p in points {
        text.push_str(&format!("{},{}\n", p.k, p.mrr));
    }
    write_text(path, &text)
}

/// Runs the ablation on `base.dataset_dir` and writes `ablation.csv` under
/// `base.output_dir/base.tag`.
pub fn run_ablation(spec: &AblationSpec) -> Result<Vec<AblationPoint>> {
    check_dataset(&spec.base.dataset_dir)?;
    let dir = spec.base.run_dir();
    prepare_run_dir(&dir)?;
    let kb = load_dataset(&spec.base.dataset_dir)?;
    let points = run_ablation_on(spec, &kb)?;
    write_csv(&dir.join("ablation.csv"), &points)?;
    Ok(points)
}
