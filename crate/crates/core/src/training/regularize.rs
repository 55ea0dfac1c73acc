//! L2 and N3 penalties on the embedding rows a batch touches.

use std::str::FromStr;

use crate::error::Error;
use crate::models::{Gradients, ModelKind, ModelParams, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegKind {
    /// `coeff * sum ||row||^2`
    #[default]
    L2,
    /// `coeff * sum_j |c_j|^3` over complex-component moduli (absolute values
    /// for real-layout rows).
    N3,
}

impl FromStr for RegKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(RegKind::L2),
            "n3" | "l3" => Ok(RegKind::N3),
            other => Err(Error::Config(format!("unknown regularizer `{other}`"))),
        }
    }
}

impl std::fmt::Display for RegKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegKind::L2 => "l2",
            RegKind::N3 => "n3",
        })
    }
}

/// Distinct entity and relation rows referenced by a batch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TouchedRows {
    pub entities: Vec<usize>,
    pub relations: Vec<usize>,
}

impl TouchedRows {
    pub fn new(mut entities: Vec<usize>, mut relations: Vec<usize>) -> Self {
        entities.sort_unstable();
        entities.dedup();
        relations.sort_unstable();
        relations.dedup();
        TouchedRows {
            entities,
            relations,
        }
    }
}

/// Adds the penalty gradient into `grads` and returns the penalty.
///
/// Every entity table is regularized at the touched entity ids. RotatE phase
/// angles are not regularized.
pub fn regularize(
    params: &ModelParams,
    rows: &TouchedRows,
    kind: RegKind,
    coeff: f64,
    grads: &mut Gradients,
) -> f64 {
    if coeff == 0.0 {
        return 0.0;
    }
    let complex_entities = matches!(params.kind, ModelKind::ComplEx | ModelKind::RotatE);
    let mut penalty = 0.0;
    for (table, grad) in params.entities.iter().zip(grads.entities.iter_mut()) {
        for &e in &rows.entities {
            penalty += row_penalty(table, e, kind, coeff, complex_entities, grad.row_mut(e));
        }
    }
    if params.kind != ModelKind::RotatE {
        let complex = params.kind == ModelKind::ComplEx;
        for &r in &rows.relations {
            penalty += row_penalty(
                &params.relations,
                r,
                kind,
                coeff,
                complex,
                grads.relations.row_mut(r),
            );
        }
    }
    penalty
}

fn row_penalty(
    table: &Table,
    i: usize,
    kind: RegKind,
    coeff: f64,
    complex: bool,
    grad: &mut [f64],
) -> f64 {
    let row = table.row(i);
    match (kind, complex) {
        (RegKind::L2, _) => {
            let mut sq = 0.0;
            for (g, &x) in grad.iter_mut().zip(row) {
                sq += x * x;
                *g += 2.0 * coeff * x;
            }
            coeff * sq
        }
        (RegKind::N3, true) => {
            let mut cubes = 0.0;
            for (g, c) in grad.chunks_mut(2).zip(row.chunks(2)) {
                let m = (c[0] * c[0] + c[1] * c[1]).sqrt();
                cubes += m * m * m;
                // d|c|^3 / d re = 3 |c| re
                g[0] += 3.0 * coeff * m * c[0];
                g[1] += 3.0 * coeff * m * c[1];
            }
            coeff * cubes
        }
        (RegKind::N3, false) => {
            let mut cubes = 0.0;
            for (g, &x) in grad.iter_mut().zip(row) {
                cubes += x.abs().powi(3);
                *g += 3.0 * coeff * x.abs() * x;
            }
            coeff * cubes
        }
    }
}
