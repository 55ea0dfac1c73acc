//! Parameter layouts and scoring functions.
//!
//! Complex-valued models (ComplEx, RotatE entities) store a complex vector of
//! `dim / 2` components as `dim` interleaved reals: `(re_0, im_0, re_1, im_1, ...)`.
//! RotatE relations are stored as `dim / 2` raw phase angles, so the implied
//! rotation `exp(i * theta)` always has unit modulus.
//!
//! Two scoring routes exist. [`ModelParams::score_one`] and
//! [`ModelParams::grad_one`] evaluate the closed-form score of a single triple.
//! The 1-N route ([`ModelParams::score_queries`] and friends) first encodes
//! each partial triple into a query vector and then scores it against many
//! candidates with either a dot product (multiplicative models) or a negative
//! Euclidean distance (translation models).

mod formulas;
mod grad;
mod one_n;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};

pub use grad::{GradTable, Gradients};
pub use one_n::{EncodedBatch, DEFAULT_CHUNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    TransE,
    RotatE,
    ComplEx,
    SimplE,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::TransE,
        ModelKind::RotatE,
        ModelKind::ComplEx,
        ModelKind::SimplE,
    ];

    pub fn is_translation(self) -> bool {
        matches!(self, ModelKind::TransE | ModelKind::RotatE)
    }

    pub fn needs_even_dim(self) -> bool {
        !matches!(self, ModelKind::TransE)
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            ModelKind::TransE => 0,
            ModelKind::RotatE => 1,
            ModelKind::ComplEx => 2,
            ModelKind::SimplE => 3,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        ModelKind::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::TransE => "TransE",
            ModelKind::RotatE => "RotatE",
            ModelKind::ComplEx => "ComplEx",
            ModelKind::SimplE => "SimplE",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "transe" => Ok(ModelKind::TransE),
            "rotate" => Ok(ModelKind::RotatE),
            "complex" | "cx" => Ok(ModelKind::ComplEx),
            "simple" => Ok(ModelKind::SimplE),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Which second term the SimplE score uses.
///
/// `Printed` is `<t_o, r_inv, h_s>`; `Original` is `<h_o, r_inv, t_s>`, the
/// form that couples head and tail tables of both entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimplEVariant {
    #[default]
    Printed,
    Original,
}

impl FromStr for SimplEVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "printed" => Ok(SimplEVariant::Printed),
            "original" => Ok(SimplEVariant::Original),
            other => Err(Error::Config(format!("unknown SimplE variant `{other}`"))),
        }
    }
}

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Table {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Table {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// A partial triple with one open entity slot.
///
/// `r` is a row of the (possibly reciprocal-augmented) relation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    /// `(s, r, ?)`
    Tail { s: usize, r: usize },
    /// `(?, r, o)`
    Head { r: usize, o: usize },
}

/// The candidate entities a batch of queries is scored against.
#[derive(Debug, Clone)]
pub enum Candidates<'a> {
    Range(Range<usize>),
    List(&'a [usize]),
}

impl Candidates<'_> {
    pub fn len(&self) -> usize {
        match self {
            Candidates::Range(r) => r.len(),
            Candidates::List(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, j: usize) -> usize {
        match self {
            Candidates::Range(r) => r.start + j,
            Candidates::List(l) => l[j],
        }
    }
}

/// `B x C` scores; row `b` holds query `b` against every candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn row(&self, b: usize) -> &[f64] {
        &self.data[b * self.cols..(b + 1) * self.cols]
    }

    pub fn get(&self, b: usize, c: usize) -> f64 {
        self.data[b * self.cols + c]
    }
}

/// Embedding tables of one model.
///
/// `entities` holds one `|E| x dim` table, or two (head table then tail
/// table) for SimplE. `relations` has `|R|` rows, or `2|R|` when reciprocal
/// relations are enabled; row `r + |R|` is the reciprocal of row `r`. Its width
/// is `dim` (TransE, ComplEx), `dim / 2` phases (RotatE) or `2 * dim` for
/// SimplE, whose rows are `[r | r_inv]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub dim: usize,
    pub num_relations: usize,
    pub reciprocal: bool,
    pub simple_variant: SimplEVariant,
    pub entities: Vec<Table>,
    pub relations: Table,
}

impl ModelParams {
    /// Zero-initialized parameters.
    pub fn zeros(
        kind: ModelKind,
        dim: usize,
        num_entities: usize,
        num_relations: usize,
        reciprocal: bool,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if kind.needs_even_dim() && dim % 2 != 0 {
            return Err(Error::OddDimension { kind, dim });
        }
        let entity_tables = if kind == ModelKind::SimplE { 2 } else { 1 };
        let rel_rows = if reciprocal {
            2 * num_relations
        } else {
            num_relations
        };
        let rel_cols = match kind {
            ModelKind::TransE | ModelKind::ComplEx => dim,
            ModelKind::RotatE => dim / 2,
            ModelKind::SimplE => 2 * dim,
        };
        Ok(ModelParams {
            kind,
            dim,
            num_relations,
            reciprocal,
            simple_variant: SimplEVariant::default(),
            entities: (0..entity_tables)
                .map(|_| Table::zeros(num_entities, dim))
                .collect(),
            relations: Table::zeros(rel_rows, rel_cols),
        })
    }

    /// Gaussian(0, 0.01) embeddings; RotatE phases uniform in `[-pi, pi)`.
    pub fn random(
        kind: ModelKind,
        dim: usize,
        num_entities: usize,
        num_relations: usize,
        reciprocal: bool,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut params = Self::zeros(kind, dim, num_entities, num_relations, reciprocal)?;
        params.fill_random(rng, 1e-2);
        Ok(params)
    }

    pub fn with_simple_variant(mut self, variant: SimplEVariant) -> Self {
        self.simple_variant = variant;
        self
    }

    pub fn fill_random(&mut self, rng: &mut impl Rng, std: f64) {
        let normal = Normal::new(0.0, std).expect("finite std");
        for table in &mut self.entities {
            table.data.iter_mut().for_each(|x| *x = normal.sample(rng));
        }
        if self.kind == ModelKind::RotatE {
            let phase = Uniform::new(-std::f64::consts::PI, std::f64::consts::PI)
                .expect("valid phase range");
            self.relations
                .data
                .iter_mut()
                .for_each(|x| *x = phase.sample(rng));
        } else {
            self.relations
                .data
                .iter_mut()
                .for_each(|x| *x = normal.sample(rng));
        }
    }

    pub fn num_entities(&self) -> usize {
        self.entities[0].rows
    }

    pub fn num_relation_rows(&self) -> usize {
        self.relations.rows
    }

    /// Tail query `(s, r, ?)` for a base relation id.
    pub fn tail_query(&self, s: usize, r: usize) -> Query {
        Query::Tail { s, r }
    }

    /// Head query `(?, r, o)` for a base relation id. With reciprocal
    /// relations this becomes the tail query `(o, r_inv, ?)`.
    pub fn head_query(&self, r: usize, o: usize) -> Query {
        if self.reciprocal {
            Query::Tail {
                s: o,
                r: r + self.num_relations,
            }
        } else {
            Query::Head { r, o }
        }
    }

    /// All tables in a fixed order: entity tables, then relations.
    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.entities.iter().chain(std::iter::once(&self.relations))
    }

    pub fn tables_mut(&mut self) -> impl Iterator<Item = &mut Table> {
        self.entities
            .iter_mut()
            .chain(std::iter::once(&mut self.relations))
    }

    /// Zeroed gradient buffers with the same shapes as the parameters.
    pub fn zero_gradients(&self) -> Gradients {
        Gradients::new(self)
    }

    pub(crate) fn check_entity(&self, id: usize) -> Result<()> {
        let size = self.num_entities();
        if id >= size {
            return Err(Error::IdOutOfRange {
                what: "entity",
                id,
                size,
            });
        }
        Ok(())
    }

    pub(crate) fn check_relation(&self, id: usize) -> Result<()> {
        let size = self.num_relation_rows();
        if id >= size {
            return Err(Error::IdOutOfRange {
                what: "relation row",
                id,
                size,
            });
        }
        Ok(())
    }

    pub(crate) fn check_query(&self, q: &Query) -> Result<()> {
        match *q {
            Query::Tail { s, r } => {
                self.check_entity(s)?;
                self.check_relation(r)
            }
            Query::Head { r, o } => {
                self.check_relation(r)?;
                self.check_entity(o)
            }
        }
    }

    /// Scores every entity as the object of `(s, r, ?)`.
    pub fn score_1n_tail(&self, batch: &[(usize, usize)]) -> Result<ScoreMatrix> {
        let queries: Vec<Query> = batch.iter().map(|&(s, r)| Query::Tail { s, r }).collect();
        self.score_queries(&queries, DEFAULT_CHUNK)
    }

    /// Scores every entity as the subject of `(?, r, o)`. `r` is a base
    /// relation id; with reciprocal relations the query runs as a tail query
    /// over row `r + |R|`.
    pub fn score_1n_head(&self, batch: &[(usize, usize)]) -> Result<ScoreMatrix> {
        let mut queries = Vec::with_capacity(batch.len());
        for &(r, o) in batch {
            if self.reciprocal && r >= self.num_relations {
                return Err(Error::IdOutOfRange {
                    what: "relation",
                    id: r,
                    size: self.num_relations,
                });
            }
            queries.push(self.head_query(r, o));
        }
        self.score_queries(&queries, DEFAULT_CHUNK)
    }

    /// Scores each query against all entities. Translation models process
    /// candidates `chunk` at a time.
    pub fn score_queries(&self, queries: &[Query], chunk: usize) -> Result<ScoreMatrix> {
        let enc = self.encode(queries)?;
        let n = self.num_entities();
        let mut data = vec![0.0; queries.len() * n];
        self.score_encoded(&enc, &Candidates::Range(0..n), chunk, &mut data);
        Ok(ScoreMatrix {
            rows: queries.len(),
            cols: n,
            data,
        })
    }
}
