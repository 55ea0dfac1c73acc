//! Row-sparse AdaGrad.

use crate::models::{Gradients, ModelParams, Table};

pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Accumulated squared gradients, one table per parameter table.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub accumulators: Vec<Table>,
    pub epsilon: f64,
}

impl OptState {
    pub fn new(params: &ModelParams) -> Self {
        OptState {
            accumulators: params
                .tables()
                .map(|t| Table::zeros(t.rows, t.cols))
                .collect(),
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// AdaGrad with a fixed learning rate.
#[derive(Debug, Clone, Copy)]
pub struct AdaGrad {
    pub learning_rate: f64,
}

impl AdaGrad {
    pub fn new(learning_rate: f64) -> Self {
        AdaGrad { learning_rate }
    }

    /// Per coordinate: `acc += g^2; param -= lr * g / (sqrt(acc) + eps)`.
    /// Only rows with a recorded gradient are visited.
    pub fn step(&self, params: &mut ModelParams, opt: &mut OptState, grads: &Gradients) {
        let lr = self.learning_rate;
        let eps = opt.epsilon;
        for ((table, acc), grad) in params
            .tables_mut()
            .zip(opt.accumulators.iter_mut())
            .zip(grads.tables())
        {
            for &i in grad.touched_rows() {
                let g_row = grad.row(i);
                let acc_row = acc.row_mut(i);
                let p_row = table.row_mut(i);
                for ((p, a), &g) in p_row.iter_mut().zip(acc_row.iter_mut()).zip(g_row) {
                    *a += g * g;
                    *p -= lr * g / (a.sqrt() + eps);
                }
            }
        }
    }
}
