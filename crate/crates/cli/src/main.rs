use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kbc_core::exp::{self, checkpoint, Settings};
use kbc_core::{build_filter_index, evaluate, load_dataset, Split};

/// Train and evaluate knowledge base completion models.
#[derive(Parser)]
#[command(name = "kbc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and evaluate its best dev checkpoint on test.
    Train(Common),
    /// Evaluate a saved checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Grid search over regularization, learning rate and batch size.
    Grid(GridArgs),
    /// Test MRR as a function of the number of sampled negatives.
    Ablate(AblateArgs),
    /// Print a checkpoint's header and trainer state.
    InspectCheckpoint { path: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset_dir: Option<PathBuf>,
    /// transe, rotate, complex or simple.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// l2 or n3.
    #[arg(long)]
    reg: Option<String>,
    #[arg(long)]
    reg_coeff: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// `<k>`, `exhaustive`, `all-1n`, `all-accum:<m>` or `all-accum-batch:<m>`.
    #[arg(long)]
    negatives: Option<String>,
    /// Add inverse-relation rows and answer head queries through them.
    #[arg(long, conflicts_with = "no_reciprocal")]
    reciprocal: bool,
    #[arg(long)]
    no_reciprocal: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; artifacts go to `<out>/<tag>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tag: Option<String>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    /// Dev queries scored per evaluation (default: all).
    #[arg(long)]
    dev_sample: Option<usize>,
    /// printed or original.
    #[arg(long)]
    simple_variant: Option<String>,
    /// Record wall-clock seconds in the training log.
    #[arg(long)]
    record_timing: bool,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset_dir: PathBuf,
    /// valid or test.
    #[arg(long, default_value = "test")]
    split: String,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated regularization strengths.
    #[arg(long)]
    grid_reg_coeff: Option<String>,
    #[arg(long)]
    grid_lr: Option<String>,
    #[arg(long)]
    grid_batch_size: Option<String>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated negative counts.
    #[arg(long)]
    counts: Option<String>,
    /// Use every non-gold entity when a count equals the number of entities.
    #[arg(long)]
    exhaustive_at_full: bool,
}

impl Common {
    fn settings(&self, extra: Vec<(&str, String)>) -> Result<Settings> {
        let mut settings = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        let mut pairs: Vec<(&str, String)> = Vec::new();
        let path = |p: &PathBuf| p.display().to_string();
        let mut push = |key, value: Option<String>| {
            if let Some(v) = value {
                pairs.push((key, v));
            }
        };
        push("dataset_dir", self.dataset_dir.as_ref().map(path));
        push("model", self.model.clone());
        push("dim", self.dim.map(|v| v.to_string()));
        push("lr", self.lr.map(|v| v.to_string()));
        push("reg", self.reg.clone());
        push("reg_coeff", self.reg_coeff.map(|v| v.to_string()));
        push("batch_size", self.batch_size.map(|v| v.to_string()));
        push("negatives", self.negatives.clone());
        push("seed", self.seed.map(|v| v.to_string()));
        push("output_dir", self.out.as_ref().map(path));
        push("tag", self.tag.clone());
        push("max_epochs", self.max_epochs.map(|v| v.to_string()));
        push("patience", self.patience.map(|v| v.to_string()));
        push("eval_every", self.eval_every.map(|v| v.to_string()));
        push("dev_sample", self.dev_sample.map(|v| v.to_string()));
        push("simple_variant", self.simple_variant.clone());
        push("reciprocal", self.reciprocal.then(|| "true".into()));
        push("reciprocal", self.no_reciprocal.then(|| "false".into()));
        push("record_timing", self.record_timing.then(|| "true".into()));
        settings.apply_all(pairs)?;
        settings.apply_all(extra)?;
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            settings.set(k.trim(), v.trim())?;
        }
        Ok(settings)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train(common) => {
            let spec = common.settings(vec![])?.experiment;
            let result = exp::run_experiment(&spec)?;
            eprintln!(
                "best dev MRR {:.4} at epoch {}; artifacts in {}",
                result.outcome.best_dev_mrr,
                result.outcome.best_epoch,
                result.run_dir.display()
            );
            println!("{}", result.report.to_json_line());
        }
        Command::Eval(args) => {
            let split = match args.split.as_str() {
                "valid" | "dev" => Split::Valid,
                "test" => Split::Test,
                "train" => Split::Train,
                other => bail!("unknown split `{other}`"),
            };
            let ckpt = checkpoint::load(&args.checkpoint)?;
            let kb = load_dataset(&args.dataset_dir)?;
            if ckpt.params.num_entities() != kb.num_entities()
                || ckpt.params.num_relations != kb.num_relations()
            {
                bail!(
                    "checkpoint has {} entities and {} relations, dataset has {} and {}",
                    ckpt.params.num_entities(),
                    ckpt.params.num_relations,
                    kb.num_entities(),
                    kb.num_relations()
                );
            }
            let filter = build_filter_index(&kb);
            let report = evaluate(&ckpt.params, &kb, &filter, split)?;
            println!("{}", report.to_json_line());
        }
        Command::Grid(args) => {
            let mut extra = Vec::new();
            if let Some(v) = args.grid_reg_coeff {
                extra.push(("grid.reg_coeff", v));
            }
            if let Some(v) = args.grid_lr {
                extra.push(("grid.lr", v));
            }
            if let Some(v) = args.grid_batch_size {
                extra.push(("grid.batch_size", v));
            }
            let grid = args.common.settings(extra)?.grid_spec();
            let result = exp::run_grid(&grid)?;
            for cell in &result.cells {
                match (&cell.dev_mrr, &cell.error) {
                    (Some(mrr), _) => eprintln!(
                        "cell {:3}: reg={} lr={} batch={} dev_mrr={mrr:.4}",
                        cell.index, cell.reg_coeff, cell.learning_rate, cell.batch_size
                    ),
                    (None, err) => eprintln!(
                        "cell {:3}: reg={} lr={} batch={} FAILED: {}",
                        cell.index,
                        cell.reg_coeff,
                        cell.learning_rate,
                        cell.batch_size,
                        err.as_deref().unwrap_or("unknown")
                    ),
                }
            }
            eprintln!("winner: cell {}", result.winner);
            println!("{}", result.report.to_json_line());
        }
        Command::Ablate(args) => {
            let mut extra = Vec::new();
            if let Some(v) = args.counts {
                extra.push(("ablation.counts", v));
            }
            if args.exhaustive_at_full {
                extra.push(("ablation.exhaustive", "true".into()));
            }
            let spec = args.common.settings(extra)?.ablation_spec();
            let points = exp::run_ablation(&spec)?;
            println!("k,mrr");
            for p in points {
                println!("{},{}", p.k, p.mrr);
            }
        }
        Command::InspectCheckpoint { path } => {
            let ckpt = checkpoint::load(&path)?;
            let p = &ckpt.params;
            println!("model: {}", p.kind);
            println!("dim: {}", p.dim);
            println!("entities: {}", p.num_entities());
            println!("relations: {}", p.num_relations);
            println!("reciprocal: {}", p.reciprocal);
            if p.kind == kbc_core::ModelKind::SimplE {
                println!("simple_variant: {:?}", p.simple_variant);
            }
            for (i, t) in p.tables().enumerate() {
                println!("table {i}: {}x{}", t.rows, t.cols);
            }
            println!("epoch: {}", ckpt.epoch);
            println!("optimizer state: {}", ckpt.opt.is_some());
            if let Some(r) = &ckpt.resume {
                println!("best dev MRR: {} (epoch {})", r.best_mrr, r.best_epoch);
                println!("finished: {}", r.finished);
                println!("log records: {}", r.log.len());
            }
        }
    }
    Ok(())
}
