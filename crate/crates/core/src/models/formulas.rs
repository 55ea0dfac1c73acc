//! Closed-form single-triple scores and their analytic gradients.

use super::{Gradients, ModelKind, ModelParams, SimplEVariant};
use crate::error::Result;

impl ModelParams {
    /// Score of the triple `(s, r, o)`; larger means more plausible.
    ///
    /// * TransE: `-||e_s + r - e_o||`
    /// * RotatE: `-||e_s * exp(i theta) - e_o||`
    /// * ComplEx: `Re(sum_j s_j r_j conj(o_j))`
    /// * SimplE: `(<h_s, r, t_o> + <t_o, r_inv, h_s>) / 2`, or with
    ///   [`SimplEVariant::Original`] the second term is `<h_o, r_inv, t_s>`.
    pub fn score_one(&self, s: usize, r: usize, o: usize) -> Result<f64> {
        self.check_entity(s)?;
        self.check_relation(r)?;
        self.check_entity(o)?;
        let rel = self.relations.row(r);
        Ok(match self.kind {
            ModelKind::TransE => {
                let (es, eo) = (self.entities[0].row(s), self.entities[0].row(o));
                let sq: f64 = (0..self.dim)
                    .map(|d| {
                        let x = es[d] + rel[d] - eo[d];
                        x * x
                    })
                    .sum();
                -sq.sqrt()
            }
            ModelKind::RotatE => {
                let (es, eo) = (self.entities[0].row(s), self.entities[0].row(o));
                let mut sq = 0.0;
                for (j, &theta) in rel.iter().enumerate() {
                    let (a, b) = (es[2 * j], es[2 * j + 1]);
                    let (sin, cos) = theta.sin_cos();
                    let dre = a * cos - b * sin - eo[2 * j];
                    let dim = a * sin + b * cos - eo[2 * j + 1];
                    sq += dre * dre + dim * dim;
                }
                -sq.sqrt()
            }
            ModelKind::ComplEx => {
                let (es, eo) = (self.entities[0].row(s), self.entities[0].row(o));
                let mut acc = 0.0;
                for j in 0..self.dim / 2 {
                    let (a, b) = (es[2 * j], es[2 * j + 1]);
                    let (c, d) = (rel[2 * j], rel[2 * j + 1]);
                    let (x, y) = (eo[2 * j], eo[2 * j + 1]);
                    acc += a * c * x - b * d * x + a * d * y + b * c * y;
                }
                acc
            }
            ModelKind::SimplE => {
                let (h, t) = (&self.entities[0], &self.entities[1]);
                let (fwd, inv) = rel.split_at(self.dim);
                let first = trilinear(h.row(s), fwd, t.row(o));
                let second = match self.simple_variant {
                    SimplEVariant::Printed => trilinear(t.row(o), inv, h.row(s)),
                    SimplEVariant::Original => trilinear(h.row(o), inv, t.row(s)),
                };
                0.5 * (first + second)
            }
        })
    }

    /// Adds `upstream * d score_one(s, r, o) / d theta` into `grads` for every
    /// row the triple touches. RotatE relation gradients are with respect to
    /// the phase angles. A zero translation residual has zero gradient.
    pub fn grad_one(
        &self,
        s: usize,
        r: usize,
        o: usize,
        upstream: f64,
        grads: &mut Gradients,
    ) -> Result<()> {
        self.check_entity(s)?;
        self.check_relation(r)?;
        self.check_entity(o)?;
        let rel = self.relations.row(r);
        match self.kind {
            ModelKind::TransE => {
                let (es, eo) = (self.entities[0].row(s), self.entities[0].row(o));
                let diff: Vec<f64> = (0..self.dim).map(|d| es[d] + rel[d] - eo[d]).collect();
                let norm = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Ok(());
                }
                let k = -upstream / norm;
                axpy(grads.entities[0].row_mut(s), k, &diff);
                axpy(grads.relations.row_mut(r), k, &diff);
                axpy(grads.entities[0].row_mut(o), -k, &diff);
            }
            ModelKind::RotatE => {
                let (es, eo) = (self.entities[0].row(s), self.entities[0].row(o));
                let half = self.dim / 2;
                let mut rot = vec![0.0; self.dim];
                let mut diff = vec![0.0; self.dim];
                for (j, &theta) in rel.iter().enumerate() {
                    let (a, b) = (es[2 * j], es[2 * j + 1]);
                    let (sin, cos) = theta.sin_cos();
                    rot[2 * j] = a * cos - b * sin;
                    rot[2 * j + 1] = a * sin + b * cos;
                    diff[2 * j] = rot[2 * j] - eo[2 * j];
                    diff[2 * j + 1] = rot[2 * j + 1] - eo[2 * j + 1];
                }
                let norm = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Ok(());
                }
                let k = -upstream / norm;
                let mut gs = vec![0.0; self.dim];
                let mut gtheta = vec![0.0; half];
                for j in 0..half {
                    let (sin, cos) = rel[j].sin_cos();
                    let (gre, gim) = (k * diff[2 * j], k * diff[2 * j + 1]);
                    gs[2 * j] = gre * cos + gim * sin;
                    gs[2 * j + 1] = -gre * sin + gim * cos;
                    gtheta[j] = -gre * rot[2 * j + 1] + gim * rot[2 * j];
                }
                axpy(grads.entities[0].row_mut(s), 1.0, &gs);
                axpy(grads.relations.row_mut(r), 1.0, &gtheta);
                axpy(grads.entities[0].row_mut(o), -k, &diff);
            }
            ModelKind::ComplEx => {
                let (es, eo) = (self.entities[0].row(s), self.entities[0].row(o));
                let mut gs = vec![0.0; self.dim];
                let mut gr = vec![0.0; self.dim];
                let mut go = vec![0.0; self.dim];
                for j in 0..self.dim / 2 {
                    let (a, b) = (es[2 * j], es[2 * j + 1]);
                    let (c, d) = (rel[2 * j], rel[2 * j + 1]);
                    let (x, y) = (eo[2 * j], eo[2 * j + 1]);
                    gs[2 * j] = c * x + d * y;
                    gs[2 * j + 1] = c * y - d * x;
                    gr[2 * j] = a * x + b * y;
                    gr[2 * j + 1] = a * y - b * x;
                    go[2 * j] = a * c - b * d;
                    go[2 * j + 1] = a * d + b * c;
                }
                axpy(grads.entities[0].row_mut(s), upstream, &gs);
                axpy(grads.relations.row_mut(r), upstream, &gr);
                axpy(grads.entities[0].row_mut(o), upstream, &go);
            }
            ModelKind::SimplE => {
                let dim = self.dim;
                let (h, t) = (&self.entities[0], &self.entities[1]);
                let (fwd, inv) = rel.split_at(dim);
                let k = 0.5 * upstream;
                let mut grel = vec![0.0; 2 * dim];
                match self.simple_variant {
                    SimplEVariant::Printed => {
                        let (hs, to) = (h.row(s), t.row(o));
                        let sum: Vec<f64> = (0..dim).map(|d| fwd[d] + inv[d]).collect();
                        let gh: Vec<f64> = (0..dim).map(|d| sum[d] * to[d]).collect();
                        let gt: Vec<f64> = (0..dim).map(|d| sum[d] * hs[d]).collect();
                        for d in 0..dim {
                            grel[d] = hs[d] * to[d];
                            grel[dim + d] = hs[d] * to[d];
                        }
                        axpy(grads.entities[0].row_mut(s), k, &gh);
                        axpy(grads.entities[1].row_mut(o), k, &gt);
                    }
                    SimplEVariant::Original => {
                        let (hs, to, ho, ts) = (h.row(s), t.row(o), h.row(o), t.row(s));
                        let ghs: Vec<f64> = (0..dim).map(|d| fwd[d] * to[d]).collect();
                        let gto: Vec<f64> = (0..dim).map(|d| fwd[d] * hs[d]).collect();
                        let gho: Vec<f64> = (0..dim).map(|d| inv[d] * ts[d]).collect();
                        let gts: Vec<f64> = (0..dim).map(|d| inv[d] * ho[d]).collect();
                        for d in 0..dim {
                            grel[d] = hs[d] * to[d];
                            grel[dim + d] = ho[d] * ts[d];
                        }
                        axpy(grads.entities[0].row_mut(s), k, &ghs);
                        axpy(grads.entities[1].row_mut(o), k, &gto);
                        axpy(grads.entities[0].row_mut(o), k, &gho);
                        axpy(grads.entities[1].row_mut(s), k, &gts);
                    }
                }
                axpy(grads.relations.row_mut(r), k, &grel);
            }
        }
        Ok(())
    }
}

fn trilinear(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a.iter().zip(b).zip(c).map(|((x, y), z)| x * y * z).sum()
}

#[inline]
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
