//! Acceptance suite. Prints one `criterion N: PASS|FAIL|...` line per
//! criterion and exits non-zero if any criterion fails.
//!
//! Positional arguments select criteria by number or by a substring of their
//! name. Criterion 7 needs the FB15k-237 files: point `KBC_FB15K237_DIR` at
//! a directory holding `train.txt`, `valid.txt` and `test.txt`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use common::{oracle_penalty, oracle_score, rel_err, sort_rank, Planted};
use kbc_core::exp::{
    checkpoint, run_ablation_on, run_experiment_on, train_model, AblationSpec, Checkpoint,
    ExperimentSpec,
};
use kbc_core::training::{
    batch_gradients, loss_full_softmax, loss_sampled, regularize, train_batch, TouchedRows,
};
use kbc_core::{
    build_filter_index, evaluate, AccumSplit, AllEntitiesPath, KnowledgeBase, ModelKind,
    ModelParams, NegativeRegime, OptState, Query, RegKind, SimplEVariant, Split, TrainConfig,
    Trainer, Triple,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `Ok` carries a pass summary, `Err` a failure summary.
type Outcome = Result<String, String>;

enum Verdict {
    Run(Outcome),
    NotRun(String),
    NotApplicable(String),
}

const FD_STEP: f64 = 1e-6;
const PLANTED_SEED: u64 = 1;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_dim(kind: ModelKind, rng: &mut impl Rng, max_half: usize) -> usize {
    if kind == ModelKind::TransE {
        rng.random_range(1..=2 * max_half)
    } else {
        2 * rng.random_range(1..=max_half)
    }
}

fn random_params(
    kind: ModelKind,
    dim: usize,
    ne: usize,
    nr: usize,
    reciprocal: bool,
    std: f64,
    rng: &mut impl Rng,
) -> ModelParams {
    let mut p = ModelParams::zeros(kind, dim, ne, nr, reciprocal).unwrap();
    p.fill_random(rng, std);
    if rng.random_bool(0.5) {
        p.simple_variant = SimplEVariant::Original;
    }
    p
}

/// Central difference of `f` with respect to entry `idx` of table `ti`
/// (entity tables first, then relations).
fn fd_param(p: &ModelParams, ti: usize, idx: usize, f: impl Fn(&ModelParams) -> f64) -> f64 {
    let mut q = p.clone();
    let orig = q.tables().nth(ti).unwrap().data[idx];
    q.tables_mut().nth(ti).unwrap().data[idx] = orig + FD_STEP;
    let up = f(&q);
    q.tables_mut().nth(ti).unwrap().data[idx] = orig - FD_STEP;
    let down = f(&q);
    (up - down) / (2.0 * FD_STEP)
}

/// Worst relative error between `grads` and finite differences of `f` over
/// every parameter.
fn check_param_grads(
    p: &ModelParams,
    grads: &kbc_core::models::Gradients,
    f: impl Fn(&ModelParams) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let analytic: Vec<Vec<f64>> = grads.tables().map(|g| g.table.data.clone()).collect();
    for (ti, table) in analytic.iter().enumerate() {
        for (idx, &a) in table.iter().enumerate() {
            worst = worst.max(rel_err(a, fd_param(p, ti, idx, &f)));
        }
    }
    worst
}

fn criterion_1() -> Outcome {
    const DRAWS: usize = 200;
    let mut r = rng(101);
    let mut worst_loop: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for kind in ModelKind::ALL {
        for _ in 0..DRAWS {
            let dim = random_dim(kind, &mut r, 8);
            let ne = r.random_range(1..=50);
            let nr = r.random_range(1..=5);
            let reciprocal = r.random_bool(0.5);
            let p = random_params(kind, dim, ne, nr, reciprocal, 1.0, &mut r);
            let batch = r.random_range(1..=6);
            let mut queries = Vec::new();
            for _ in 0..batch {
                let (e, rel) = (r.random_range(0..ne), r.random_range(0..nr));
                queries.push(if r.random_bool(0.5) {
                    p.tail_query(e, rel)
                } else {
                    p.head_query(rel, e)
                });
            }
            let chunk = r.random_range(1..=ne + 3);
            let scores = p
                .score_queries(&queries, chunk)
                .map_err(|e| e.to_string())?;
            for (b, q) in queries.iter().enumerate() {
                for c in 0..ne {
                    let (s, rel, o) = match *q {
                        Query::Tail { s, r } => (s, r, c),
                        Query::Head { r, o } => (c, r, o),
                    };
                    let got = scores.get(b, c);
                    let looped = p.score_one(s, rel, o).map_err(|e| e.to_string())?;
                    worst_loop = worst_loop.max((got - looped).abs());
                    worst_oracle = worst_oracle.max((got - oracle_score(&p, s, rel, o)).abs());
                }
            }
        }
    }
    let msg = format!(
        "max |1-N - looped score_one| = {worst_loop:.2e}, vs oracle {worst_oracle:.2e} ({DRAWS} draws x 4 kinds)"
    );
    if worst_loop < 1e-10 && worst_oracle < 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn naive_xent(row: &[f64], gold: usize) -> f64 {
    -row[gold] + row.iter().map(|x| x.exp()).sum::<f64>().ln()
}

fn criterion_2() -> Outcome {
    let mut r = rng(202);
    let mut worst_score: f64 = 0.0;
    let mut worst_loss: f64 = 0.0;
    let mut worst_reg: f64 = 0.0;
    let mut worst_batch: f64 = 0.0;
    for kind in ModelKind::ALL {
        for dim in [2, 4, 8] {
            for trial in 0..4 {
                let reciprocal = trial % 2 == 0;
                let p = random_params(kind, dim, 4, 2, reciprocal, 1.0, &mut r);

                // Scoring function.
                let (s, o) = (r.random_range(0..4), r.random_range(0..4));
                let rel = r.random_range(0..p.num_relation_rows());
                let mut g = p.zero_gradients();
                p.grad_one(s, rel, o, 1.0, &mut g)
                    .map_err(|e| e.to_string())?;
                worst_score =
                    worst_score.max(check_param_grads(&p, &g, |q| oracle_score(q, s, rel, o)));

                // Regularizers.
                for (reg, n3) in [(RegKind::L2, false), (RegKind::N3, true)] {
                    let ents: Vec<usize> = (0..4).filter(|_| r.random_bool(0.6)).collect();
                    let rels: Vec<usize> = (0..p.num_relation_rows())
                        .filter(|_| r.random_bool(0.6))
                        .collect();
                    let coeff = 0.7;
                    let mut g = p.zero_gradients();
                    let pen = regularize(
                        &p,
                        &TouchedRows::new(ents.clone(), rels.clone()),
                        reg,
                        coeff,
                        &mut g,
                    );
                    let want = oracle_penalty(&p, &ents, &rels, n3, coeff);
                    worst_reg = worst_reg.max(rel_err(pen, want));
                    worst_reg = worst_reg.max(check_param_grads(&p, &g, |q| {
                        oracle_penalty(q, &ents, &rels, n3, coeff)
                    }));
                }

                // Whole batch objective through the 1-N and sampled paths.
                if dim == 4 {
                    let batch: Vec<Triple> = (0..3)
                        .map(|_| {
                            Triple::new(
                                r.random_range(0..4),
                                r.random_range(0..2),
                                r.random_range(0..4),
                            )
                        })
                        .collect();
                    for regime in [NegativeRegime::one_n(), NegativeRegime::sampled(3)] {
                        let config = TrainConfig {
                            regime,
                            reciprocal: Some(reciprocal),
                            reg_kind: RegKind::N3,
                            reg_coeff: if reciprocal { 0.05 } else { 0.0 },
                            chunk: 3,
                            ..TrainConfig::default()
                        };
                        let objective = |q: &ModelParams| {
                            let mut scratch = q.zero_gradients();
                            batch_gradients(q, &batch, &config, &mut rng(9), &mut scratch).unwrap()
                        };
                        let mut g = p.zero_gradients();
                        batch_gradients(&p, &batch, &config, &mut rng(9), &mut g)
                            .map_err(|e| e.to_string())?;
                        worst_batch = worst_batch.max(check_param_grads(&p, &g, objective));
                    }
                }
            }
        }
    }
    for _ in 0..200 {
        let n = r.random_range(2..12);
        let row: Vec<f64> = (0..n).map(|_| r.random_range(-4.0..4.0)).collect();
        let gold = r.random_range(0..n);
        let (loss, grad) = loss_full_softmax(&row, gold).map_err(|e| e.to_string())?;
        worst_loss = worst_loss.max(rel_err(loss, naive_xent(&row, gold)));
        let mut x = row.clone();
        for i in 0..n {
            let num = common::central_diff(&mut x, i, FD_STEP, |v| naive_xent(v, gold));
            worst_loss = worst_loss.max(rel_err(grad[i], num));
        }
        let (sloss, sgrad) = loss_sampled(row[0], &row[1..]);
        worst_loss = worst_loss.max(rel_err(sloss, naive_xent(&row, 0)));
        for i in 0..n {
            let num = common::central_diff(&mut x, i, FD_STEP, |v| naive_xent(v, 0));
            worst_loss = worst_loss.max(rel_err(sgrad[i], num));
        }
    }
    let worst = worst_score.max(worst_loss).max(worst_reg).max(worst_batch);
    let msg = format!(
        "max rel. error: scores {worst_score:.1e}, losses {worst_loss:.1e}, regularizers {worst_reg:.1e}, batch objective {worst_batch:.1e} (dims 2/4/8)"
    );
    if worst < 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_3() -> Outcome {
    let mut r = rng(303);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for kind in ModelKind::ALL {
        for m in [2, 4, 8] {
            for split in [AccumSplit::Candidates, AccumSplit::Batch] {
                let (ne, nr) = (37, 4);
                let dim = if kind == ModelKind::TransE { 7 } else { 8 };
                let start = random_params(kind, dim, ne, nr, true, 0.5, &mut r);
                let (reg_kind, reg_coeff) = if m == 4 {
                    (RegKind::L2, 0.01)
                } else {
                    (RegKind::N3, 0.01)
                };
                let base = TrainConfig {
                    learning_rate: 0.1,
                    reg_kind,
                    reg_coeff,
                    reciprocal: Some(true),
                    chunk: 5,
                    ..TrainConfig::default()
                };
                let one_n = TrainConfig {
                    regime: NegativeRegime::one_n(),
                    ..base.clone()
                };
                let accum = TrainConfig {
                    regime: NegativeRegime::AllEntities(AllEntitiesPath::Accumulated {
                        micro_batches: m,
                        split,
                    }),
                    ..base
                };
                let (mut p1, mut p2) = (start.clone(), start.clone());
                let (mut o1, mut o2) = (OptState::new(&start), OptState::new(&start));
                let (mut g1, mut g2) = (start.zero_gradients(), start.zero_gradients());
                for _ in 0..3 {
                    let batch: Vec<Triple> = (0..16)
                        .map(|_| {
                            Triple::new(
                                r.random_range(0..ne),
                                r.random_range(0..nr),
                                r.random_range(0..ne),
                            )
                        })
                        .collect();
                    train_batch(&mut p1, &mut o1, &batch, &one_n, &mut rng(0), &mut g1)
                        .map_err(|e| e.to_string())?;
                    train_batch(&mut p2, &mut o2, &batch, &accum, &mut rng(0), &mut g2)
                        .map_err(|e| e.to_string())?;
                    worst = worst.max(common::max_param_diff(&p1, &p2));
                }
                cases += 1;
            }
        }
    }
    let msg = format!(
        "max |accumulated - 1-N| after each of 3 steps = {worst:.2e} ({cases} cases, m in 2/4/8, both splits)"
    );
    if worst < 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

struct Tally {
    rr: f64,
    h1: f64,
    h10: f64,
    n: usize,
}

impl Tally {
    fn new() -> Self {
        Tally {
            rr: 0.0,
            h1: 0.0,
            h10: 0.0,
            n: 0,
        }
    }
    fn add(&mut self, rank: f64) {
        self.rr += 1.0 / rank;
        self.h1 += (rank <= 1.0) as u8 as f64;
        self.h10 += (rank <= 10.0) as u8 as f64;
        self.n += 1;
    }
    fn means(&self) -> [f64; 3] {
        let n = self.n as f64;
        [self.rr / n, self.h1 / n, self.h10 / n]
    }
}

fn criterion_4() -> Outcome {
    let mut r = rng(404);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let ne = r.random_range(3..=20);
        let nr = r.random_range(1..=3);
        let n = r.random_range(6..=40).min(ne * ne * nr / 2).max(3);
        let kb = common::random_kb(&mut r, ne, nr, n);
        let kind = ModelKind::ALL[r.random_range(0..4)];
        let dim = random_dim(kind, &mut r, 4);
        let mut p = random_params(kind, dim, ne, nr, r.random_bool(0.5), 1.0, &mut r);
        if kind != ModelKind::RotatE {
            // Half-integer weights make tied scores common.
            for t in p.tables_mut() {
                t.data
                    .iter_mut()
                    .for_each(|x| *x = (*x * 2.0).round() / 2.0);
            }
        }
        let filter = build_filter_index(&kb);
        let report = evaluate(&p, &kb, &filter, Split::Test).map_err(|e| e.to_string())?;

        let facts: Vec<Triple> = [Split::Train, Split::Valid, Split::Test]
            .iter()
            .flat_map(|&s| kb.split(s).to_vec())
            .collect();
        let (mut head, mut tail, mut both) = (Tally::new(), Tally::new(), Tally::new());
        for t in kb.split(Split::Test) {
            let row = p.score_queries(&[p.tail_query(t.s, t.r)], 7).unwrap();
            let known: Vec<usize> = facts
                .iter()
                .filter(|f| f.s == t.s && f.r == t.r)
                .map(|f| f.o)
                .collect();
            let rank = sort_rank(row.row(0), t.o, &known);
            tail.add(rank);
            both.add(rank);
            let row = p.score_queries(&[p.head_query(t.r, t.o)], 7).unwrap();
            let known: Vec<usize> = facts
                .iter()
                .filter(|f| f.r == t.r && f.o == t.o)
                .map(|f| f.s)
                .collect();
            let rank = sort_rank(row.row(0), t.s, &known);
            head.add(rank);
            both.add(rank);
        }
        let pairs = [
            ([report.mrr, report.hits1, report.hits10], both.means()),
            (
                [report.tail.mrr, report.tail.hits1, report.tail.hits10],
                tail.means(),
            ),
            (
                [report.head.mrr, report.head.hits1, report.head.hits10],
                head.means(),
            ),
        ];
        for (got, want) in pairs {
            for i in 0..3 {
                worst = worst.max((got[i] - want[i]).abs());
            }
        }
        if report.query_count != both.n {
            return Err(format!("query count {} != {}", report.query_count, both.n));
        }
    }
    let msg =
        format!("max |evaluate - brute force| over MRR/HITS@1/HITS@10 = {worst:.2e} (50 KBs)");
    if worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Desk-scale training recipe shared by criteria 5 and 6.
fn planted_spec(model: ModelKind, seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        model,
        dim: 16,
        train: TrainConfig {
            learning_rate: 1.0,
            batch_size: 100,
            max_epochs: 100,
            eval_every: 5,
            patience: 4,
            seed,
            ..TrainConfig::default()
        },
        ..ExperimentSpec::default()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

fn fmt(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.3}"))
        .collect::<Vec<_>>()
        .join("/")
}

fn criterion_5() -> Outcome {
    let kb = Planted::default().generate(PLANTED_SEED);
    let ne = kb.num_entities();
    let counts = [5, 50, ne];
    let mut per_k = vec![Vec::new(); counts.len()];
    for seed in 0..3 {
        let mut base = planted_spec(ModelKind::ComplEx, seed);
        base.train.reciprocal = Some(true);
        let spec = AblationSpec {
            base,
            negative_counts: counts.to_vec(),
            exhaustive_at_full: true,
        };
        let points = run_ablation_on(&spec, &kb).map_err(|e| e.to_string())?;
        for (i, p) in points.iter().enumerate() {
            per_k[i].push(p.mrr);
        }
    }
    let means: Vec<f64> = per_k.iter().map(|v| mean(v)).collect();
    let eps = 0.01;
    let monotone = means.windows(2).all(|w| w[1] >= w[0] - eps);
    let gain = means[2] - means[0];
    let msg = format!(
        "mean test MRR k=5 {:.3} [{}], k=50 {:.3} [{}], k={ne} {:.3} [{}]; all - k5 = {gain:.3}",
        means[0],
        fmt(&per_k[0]),
        means[1],
        fmt(&per_k[1]),
        means[2],
        fmt(&per_k[2]),
    );
    if monotone && gain >= 0.05 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn test_mrr(spec: &ExperimentSpec, kb: &KnowledgeBase) -> Result<f64, String> {
    let filter = build_filter_index(kb);
    let outcome = train_model(spec, kb, &filter).map_err(|e| e.to_string())?;
    Ok(evaluate(&outcome.best, kb, &filter, Split::Test)
        .map_err(|e| e.to_string())?
        .mrr)
}

fn criterion_6() -> Outcome {
    let kb = Planted::default().generate(PLANTED_SEED);
    let mut lines = Vec::new();
    let mut ok = true;
    for model in [ModelKind::ComplEx, ModelKind::SimplE] {
        let (mut all, mut sampled) = (Vec::new(), Vec::new());
        for seed in 0..3 {
            let mut spec = planted_spec(model, seed);
            spec.train.regime = NegativeRegime::one_n();
            all.push(test_mrr(&spec, &kb)?);
            spec.train.regime = NegativeRegime::sampled(16);
            sampled.push(test_mrr(&spec, &kb)?);
        }
        let margin = median(&all) - median(&sampled);
        ok &= margin >= 0.02;
        lines.push(format!(
            "{model}: all-entities median {:.3} [{}] vs sampled(16) {:.3} [{}], margin {margin:.3}",
            median(&all),
            fmt(&all),
            median(&sampled),
            fmt(&sampled)
        ));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7() -> Verdict {
    let Some(dir) = std::env::var_os("KBC_FB15K237_DIR").map(PathBuf::from) else {
        return Verdict::NotRun(
            "extended tier (hours); set KBC_FB15K237_DIR to the FB15k-237 split files, see scripts/fb15k237.sh"
                .into(),
        );
    };
    Verdict::Run(run_fb15k237(dir))
}

fn run_fb15k237(dir: PathBuf) -> Outcome {
    let kb = kbc_core::load_dataset(&dir).map_err(|e| e.to_string())?;
    let mut settings = kbc_core::exp::Settings::default();
    settings
        .apply_all([
            ("model", "rotate"),
            ("dim", "100"),
            ("lr", "0.1"),
            ("batch_size", "1000"),
            ("max_epochs", "200"),
            ("eval_every", "5"),
            ("patience", "3"),
            ("dev_sample", "4000"),
        ])
        .map_err(|e| e.to_string())?;
    if let Some(cfg) = std::env::var_os("KBC_EXTENDED_CONFIG") {
        let text = std::fs::read_to_string(&cfg).map_err(|e| e.to_string())?;
        settings
            .apply_all(kbc_core::exp::parse_config(&text).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    }
    let micro = std::env::var("KBC_ACCUM_MICRO_BATCHES").unwrap_or_else(|_| "8".into());
    let mut results = Vec::new();
    for (label, negatives, target) in [
        ("sampled(256)", "256".to_string(), 0.29),
        (
            "all-entities (accumulated)",
            format!("all-accum:{micro}"),
            0.32,
        ),
    ] {
        let mut spec = settings.experiment.clone();
        spec.train.regime = negatives
            .parse()
            .map_err(|e: kbc_core::Error| e.to_string())?;
        let mrr = test_mrr(&spec, &kb)?;
        eprintln!("  FB15k-237 RotatE {label}: test MRR {mrr:.4}");
        results.push((label, mrr, target));
    }
    let ok = results
        .iter()
        .all(|(_, mrr, target)| (mrr - target).abs() <= 0.02);
    let msg = results
        .iter()
        .map(|(l, m, t)| format!("{l} {m:.3} (target {t:.2} +/- 0.02)"))
        .collect::<Vec<_>>()
        .join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_9() -> Outcome {
    let kb = Planted {
        target_triples: 1500,
        num_entities: 150,
        ..Planted::default()
    }
    .generate(9);
    let mut spec = planted_spec(ModelKind::RotatE, 5);
    spec.dim = 8;
    spec.train.max_epochs = 20;
    spec.train.regime = NegativeRegime::sampled(16);
    let files = ["report.json", "log.jsonl", "best.ckpt", "last.ckpt"];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        spec.output_dir = dir.path().to_path_buf();
        let result = run_experiment_on(&spec, &kb).map_err(|e| e.to_string())?;
        let bytes: Vec<Vec<u8>> = files
            .iter()
            .map(|f| std::fs::read(result.run_dir.join(f)).unwrap())
            .collect();
        runs.push(bytes);
    }
    for (i, f) in files.iter().enumerate() {
        if runs[0][i] != runs[1][i] {
            return Err(format!("{f} differs between identical runs"));
        }
    }

    // Interrupt after 10 epochs, round-trip through a checkpoint file, resume.
    let filter = build_filter_index(&kb);
    let mut dev = |p: &ModelParams| kbc_core::mrr_only(p, &kb, &filter, Split::Valid, None);
    let params = spec.init_params(&kb).map_err(|e| e.to_string())?;
    let straight = Trainer::new(params.clone(), spec.train.clone())
        .and_then(|t| t.run(&kb, &mut dev))
        .map_err(|e| e.to_string())?;
    let mut first = Trainer::new(params, spec.train.clone()).map_err(|e| e.to_string())?;
    first
        .run_for(&kb, &mut dev, Some(10))
        .map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("mid.ckpt");
    checkpoint::save(&path, &Checkpoint::from_snapshot(first.snapshot()))
        .map_err(|e| e.to_string())?;
    let snapshot = checkpoint::load_expecting(&path, spec.model)
        .and_then(Checkpoint::into_snapshot)
        .map_err(|e| e.to_string())?;
    let resumed = Trainer::from_snapshot(snapshot, spec.train.clone())
        .and_then(|t| t.run(&kb, &mut dev))
        .map_err(|e| e.to_string())?;
    let same_log = resumed.log == straight.log;
    let same_params = resumed.best == straight.best && resumed.last == straight.last;
    if !(same_log && same_params) {
        return Err(format!(
            "resumed run diverged from uninterrupted run (log equal: {same_log}, params equal: {same_params})"
        ));
    }
    Ok(format!(
        "{} byte-identical across two runs; checkpoint resume reproduces the {}-record log and parameters",
        files.join(", "),
        straight.log.len()
    ))
}

fn main() {
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    type Check = fn() -> Verdict;
    let criteria: [(u32, &str, Check); 9] = [
        (1, "one_n_equivalence", || Verdict::Run(criterion_1())),
        (2, "gradient_checks", || Verdict::Run(criterion_2())),
        (
            3,
            "accumulation_equivalence",
            || Verdict::Run(criterion_3()),
        ),
        (4, "filtered_evaluation_oracle", || {
            Verdict::Run(criterion_4())
        }),
        (5, "negative_count_trend", || Verdict::Run(criterion_5())),
        (6, "all_entities_beats_sampled", || {
            Verdict::Run(criterion_6())
        }),
        (7, "fb15k237_rotate", criterion_7),
        (8, "full_scale_tables", || {
            Verdict::NotApplicable(
                "dim-2000 runs on FB15k/WN18/YAGO3-10 are out of desk scale; covered by criteria 5-7"
                    .into(),
            )
        }),
        (9, "determinism", || Verdict::Run(criterion_9())),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let selected = args.is_empty()
            || args.iter().any(|a| match a.parse::<u32>() {
                Ok(k) => k == n,
                Err(_) => name.contains(a.as_str()),
            });
        if !selected {
            continue;
        }
        let started = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Verdict::Run(Err("panicked".into())));
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Verdict::Run(Ok(msg)) => println!("criterion {n}: PASS [{name}] {msg} ({secs:.1}s)"),
            Verdict::Run(Err(msg)) => {
                failed += 1;
                println!("criterion {n}: FAIL [{name}] {msg} ({secs:.1}s)");
            }
            Verdict::NotRun(msg) => println!("criterion {n}: NOT RUN [{name}] {msg}"),
            Verdict::NotApplicable(msg) => {
                println!("criterion {n}: NOT APPLICABLE [{name}] {msg}")
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
