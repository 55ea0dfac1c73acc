//! Test-side oracles and synthetic data, written without reference to the
//! library's scoring and ranking code.

#![allow(dead_code)]

use kbc_core::{KnowledgeBase, ModelKind, ModelParams, SimplEVariant, Triple};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Clone, Copy, Debug)]
struct C(f64, f64);

impl C {
    fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn conj(self) -> C {
        C(self.0, -self.1)
    }
    fn sub(self, o: C) -> C {
        C(self.0 - o.0, self.1 - o.1)
    }
    fn norm_sqr(self) -> f64 {
        self.0 * self.0 + self.1 * self.1
    }
}

fn complex(row: &[f64]) -> Vec<C> {
    row.chunks_exact(2).map(|p| C(p[0], p[1])).collect()
}

/// Direct transcription of the four scoring functions. `r` indexes a
/// relation row (so reciprocal rows are addressed as `r + |R|`).
pub fn oracle_score(p: &ModelParams, s: usize, r: usize, o: usize) -> f64 {
    let rel = p.relations.row(r);
    match p.kind {
        ModelKind::TransE => {
            let (es, eo) = (p.entities[0].row(s), p.entities[0].row(o));
            -es.iter()
                .zip(rel)
                .zip(eo)
                .map(|((a, b), c)| (a + b - c).powi(2))
                .sum::<f64>()
                .sqrt()
        }
        ModelKind::RotatE => {
            let (es, eo) = (complex(p.entities[0].row(s)), complex(p.entities[0].row(o)));
            -rel.iter()
                .enumerate()
                .map(|(j, th)| es[j].mul(C(th.cos(), th.sin())).sub(eo[j]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        }
        ModelKind::ComplEx => {
            let (es, w, eo) = (
                complex(p.entities[0].row(s)),
                complex(rel),
                complex(p.entities[0].row(o)),
            );
            (0..es.len())
                .map(|j| es[j].mul(w[j]).mul(eo[j].conj()).0)
                .sum()
        }
        ModelKind::SimplE => {
            let (h, t) = (&p.entities[0], &p.entities[1]);
            let (fwd, inv) = rel.split_at(p.dim);
            let tri = |a: &[f64], b: &[f64], c: &[f64]| -> f64 {
                (0..a.len()).map(|i| a[i] * b[i] * c[i]).sum()
            };
            let first = tri(h.row(s), fwd, t.row(o));
            let second = match p.simple_variant {
                SimplEVariant::Printed => tri(t.row(o), inv, h.row(s)),
                SimplEVariant::Original => tri(h.row(o), inv, t.row(s)),
            };
            (first + second) / 2.0
        }
    }
}

/// Penalty over the given entity and relation rows: `sum x^2` for L2;
/// `sum |c|^3` over complex components (ComplEx, RotatE entities) or real
/// entries otherwise for N3. RotatE phases are not penalized.
pub fn oracle_penalty(
    p: &ModelParams,
    ents: &[usize],
    rels: &[usize],
    n3: bool,
    coeff: f64,
) -> f64 {
    let complex_ents = matches!(p.kind, ModelKind::ComplEx | ModelKind::RotatE);
    let row_pen = |row: &[f64], complex: bool| -> f64 {
        if !n3 {
            row.iter().map(|x| x * x).sum()
        } else if complex {
            row.chunks(2)
                .map(|c| (c[0] * c[0] + c[1] * c[1]).powf(1.5))
                .sum()
        } else {
            row.iter().map(|x| x.abs().powi(3)).sum()
        }
    };
    let mut total = 0.0;
    for t in &p.entities {
        total += ents
            .iter()
            .map(|&e| row_pen(t.row(e), complex_ents))
            .sum::<f64>();
    }
    if p.kind != ModelKind::RotatE {
        let complex = p.kind == ModelKind::ComplEx;
        total += rels
            .iter()
            .map(|&r| row_pen(p.relations.row(r), complex))
            .sum::<f64>();
    }
    coeff * total
}

/// Expected 1-based rank of `gold` under uniformly random tie-breaking, by
/// sorting the surviving candidates.
pub fn sort_rank(scores: &[f64], gold: usize, known: &[usize]) -> f64 {
    let mut kept: Vec<f64> = scores
        .iter()
        .enumerate()
        .filter(|&(c, _)| c == gold || !known.contains(&c))
        .map(|(_, &x)| x)
        .collect();
    kept.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let g = scores[gold];
    let first = kept.iter().position(|&x| x == g).unwrap();
    let last = kept.iter().rposition(|&x| x == g).unwrap();
    1.0 + (first + last) as f64 / 2.0
}

/// Central finite difference of `f` with respect to `x[i]`.
pub fn central_diff(x: &mut [f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + h;
    let up = f(x);
    x[i] = orig - h;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * h)
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

pub fn max_param_diff(a: &ModelParams, b: &ModelParams) -> f64 {
    a.tables()
        .zip(b.tables())
        .flat_map(|(x, y)| x.data.iter().zip(&y.data).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

pub struct Planted {
    pub num_entities: usize,
    pub num_relations: usize,
    pub rank: usize,
    pub target_triples: usize,
    /// Inverse temperature applied to standardized planted scores.
    pub sharpness: f64,
}

impl Default for Planted {
    fn default() -> Self {
        Planted {
            num_entities: 500,
            num_relations: 10,
            rank: 4,
            target_triples: 5000,
            sharpness: 8.0,
        }
    }
}

impl Planted {
    /// Samples `(s, r)` uniformly and `o` from a softmax over a random
    /// low-rank complex trilinear model, then splits 80/10/10.
    pub fn generate(&self, seed: u64) -> KnowledgeBase {
        self.generate_with_truth(seed).0
    }

    /// Also returns the planted model as ComplEx parameters.
    pub fn generate_with_truth(&self, seed: u64) -> (KnowledgeBase, ModelParams) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut draw = |n: usize| -> Vec<Vec<C>> {
            (0..n)
                .map(|_| {
                    (0..self.rank)
                        .map(|_| C(normal.sample(&mut rng), normal.sample(&mut rng)))
                        .collect()
                })
                .collect()
        };
        let ents = draw(self.num_entities);
        let rels = draw(self.num_relations);
        let mut seen = std::collections::HashSet::new();
        let mut triples = Vec::new();
        let mut weights = vec![0.0; self.num_entities];
        let mut attempts = 0;
        while triples.len() < self.target_triples && attempts < 20 * self.target_triples {
            attempts += 1;
            let s = rng.random_range(0..self.num_entities);
            let r = rng.random_range(0..self.num_relations);
            let q: Vec<C> = (0..self.rank).map(|j| ents[s][j].mul(rels[r][j])).collect();
            for (o, w) in weights.iter_mut().enumerate() {
                *w = (0..self.rank).map(|j| q[j].mul(ents[o][j].conj()).0).sum();
            }
            let n = weights.len() as f64;
            let mean = weights.iter().sum::<f64>() / n;
            let sd = (weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n).sqrt();
            let top = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for w in weights.iter_mut() {
                *w = (self.sharpness * (*w - top) / sd).exp();
            }
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut o = self.num_entities - 1;
            for (c, &w) in weights.iter().enumerate() {
                if u < w {
                    o = c;
                    break;
                }
                u -= w;
            }
            if seen.insert((s, r, o)) {
                triples.push(Triple::new(s, r, o));
            }
        }
        triples.shuffle(&mut rng);
        let n_test = triples.len() / 10;
        let test = triples.split_off(triples.len() - n_test);
        let valid = triples.split_off(triples.len() - n_test);
        let kb =
            KnowledgeBase::from_ids(self.num_entities, self.num_relations, triples, valid, test)
                .unwrap();
        let mut truth = ModelParams::zeros(
            ModelKind::ComplEx,
            2 * self.rank,
            self.num_entities,
            self.num_relations,
            false,
        )
        .unwrap();
        let flat = |rows: &[Vec<C>]| rows.iter().flatten().flat_map(|c| [c.0, c.1]).collect();
        truth.entities[0].data = flat(&ents);
        truth.relations.data = flat(&rels);
        (kb, truth)
    }
}

/// Random KB over `ne` entities with every fact in exactly one split.
pub fn random_kb(rng: &mut impl Rng, ne: usize, nr: usize, n: usize) -> KnowledgeBase {
    let mut seen = std::collections::HashSet::new();
    let mut all = Vec::new();
    while all.len() < n {
        let t = (
            rng.random_range(0..ne),
            rng.random_range(0..nr),
            rng.random_range(0..ne),
        );
        if seen.insert(t) {
            all.push(Triple::new(t.0, t.1, t.2));
        }
    }
    let test = all.split_off(2 * n / 3);
    let valid = all.split_off(all.len() / 2);
    KnowledgeBase::from_ids(ne, nr, all, valid, test).unwrap()
}
