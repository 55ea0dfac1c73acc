//! 1-N scoring: encode each partial triple once, then score it against many
//! candidate entities.
//!
//! Multiplicative models reduce to `score = <q, e_c>` summed over entity
//! tables, i.e. a plain matrix product with `O(B*D + D*E)` memory. Translation
//! models need `score = -||q - e_c||`, whose `B x D x C` difference tensor is
//! materialized one candidate chunk at a time.

use super::formulas::axpy;
use super::{Candidates, Gradients, ModelKind, ModelParams, Query, SimplEVariant};
use crate::error::Result;

/// Candidates per chunk on the translation-model path.
pub const DEFAULT_CHUNK: usize = 1024;

/// Query vectors for a batch, one optional `B x dim` block per entity table.
#[derive(Debug, Clone)]
pub struct EncodedBatch {
    pub(crate) queries: Vec<Query>,
    pub(crate) width: usize,
    pub(crate) blocks: Vec<Option<Vec<f64>>>,
}

impl EncodedBatch {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    /// Zeroed buffer of the same shape, for accumulating query gradients.
    pub fn zeros_like(&self) -> EncodedBatch {
        EncodedBatch {
            queries: self.queries.clone(),
            width: self.width,
            blocks: self
                .blocks
                .iter()
                .map(|b| b.as_ref().map(|v| vec![0.0; v.len()]))
                .collect(),
        }
    }

    #[inline]
    fn vec(&self, table: usize, b: usize) -> Option<&[f64]> {
        self.blocks[table]
            .as_ref()
            .map(|v| &v[b * self.width..(b + 1) * self.width])
    }

    #[inline]
    fn vec_mut(&mut self, table: usize, b: usize) -> Option<&mut [f64]> {
        let w = self.width;
        self.blocks[table]
            .as_mut()
            .map(|v| &mut v[b * w..(b + 1) * w])
    }
}

impl ModelParams {
    /// Encodes each query into the vector(s) its candidates are scored against.
    pub fn encode(&self, queries: &[Query]) -> Result<EncodedBatch> {
        for q in queries {
            self.check_query(q)?;
        }
        let dim = self.dim;
        let batch = queries.len();
        let n_tables = self.entities.len();
        let mut blocks: Vec<Option<Vec<f64>>> = vec![None; n_tables];
        let mut used = vec![false; n_tables];
        match self.kind {
            ModelKind::TransE | ModelKind::RotatE | ModelKind::ComplEx => used[0] = true,
            ModelKind::SimplE => {
                for q in queries {
                    for (t, flag) in simple_tables(self.simple_variant, q).iter().enumerate() {
                        used[t] |= flag;
                    }
                }
            }
        }
        for (t, u) in used.iter().enumerate() {
            if *u {
                blocks[t] = Some(vec![0.0; batch * dim]);
            }
        }
        let mut enc = EncodedBatch {
            queries: queries.to_vec(),
            width: dim,
            blocks,
        };
        for (b, q) in queries.iter().enumerate() {
            self.encode_one(q, b, &mut enc);
        }
        Ok(enc)
    }

    fn encode_one(&self, q: &Query, b: usize, enc: &mut EncodedBatch) {
        let dim = self.dim;
        let ent = &self.entities;
        match (self.kind, *q) {
            (ModelKind::TransE, Query::Tail { s, r }) => {
                let (es, rel) = (ent[0].row(s), self.relations.row(r));
                let out = enc.vec_mut(0, b).unwrap();
                for d in 0..dim {
                    out[d] = es[d] + rel[d];
                }
            }
            (ModelKind::TransE, Query::Head { r, o }) => {
                let (eo, rel) = (ent[0].row(o), self.relations.row(r));
                let out = enc.vec_mut(0, b).unwrap();
                for d in 0..dim {
                    out[d] = eo[d] - rel[d];
                }
            }
            (ModelKind::RotatE, Query::Tail { s, r }) => {
                let (es, rel) = (ent[0].row(s), self.relations.row(r));
                let out = enc.vec_mut(0, b).unwrap();
                for (j, &theta) in rel.iter().enumerate() {
                    let (a, bb) = (es[2 * j], es[2 * j + 1]);
                    let (sin, cos) = theta.sin_cos();
                    out[2 * j] = a * cos - bb * sin;
                    out[2 * j + 1] = a * sin + bb * cos;
                }
            }
            (ModelKind::RotatE, Query::Head { r, o }) => {
                // |e_s * u - e_o| = |e_s - e_o * conj(u)| for unit-modulus u
                let (eo, rel) = (ent[0].row(o), self.relations.row(r));
                let out = enc.vec_mut(0, b).unwrap();
                for (j, &theta) in rel.iter().enumerate() {
                    let (x, y) = (eo[2 * j], eo[2 * j + 1]);
                    let (sin, cos) = theta.sin_cos();
                    out[2 * j] = x * cos + y * sin;
                    out[2 * j + 1] = -x * sin + y * cos;
                }
            }
            (ModelKind::ComplEx, Query::Tail { s, r }) => {
                let (es, rel) = (ent[0].row(s), self.relations.row(r));
                let out = enc.vec_mut(0, b).unwrap();
                for j in 0..dim / 2 {
                    let (a, bb) = (es[2 * j], es[2 * j + 1]);
                    let (c, d) = (rel[2 * j], rel[2 * j + 1]);
                    out[2 * j] = a * c - bb * d;
                    out[2 * j + 1] = a * d + bb * c;
                }
            }
            (ModelKind::ComplEx, Query::Head { r, o }) => {
                // (Re(r conj(o)), -Im(r conj(o)))
                let (eo, rel) = (ent[0].row(o), self.relations.row(r));
                let out = enc.vec_mut(0, b).unwrap();
                for j in 0..dim / 2 {
                    let (c, d) = (rel[2 * j], rel[2 * j + 1]);
                    let (x, y) = (eo[2 * j], eo[2 * j + 1]);
                    out[2 * j] = c * x + d * y;
                    out[2 * j + 1] = c * y - d * x;
                }
            }
            (ModelKind::SimplE, q) => self.encode_simple(q, b, enc),
        }
    }

    fn encode_simple(&self, q: Query, b: usize, enc: &mut EncodedBatch) {
        let dim = self.dim;
        let (h, t) = (&self.entities[0], &self.entities[1]);
        let mul_into = |out: &mut [f64], x: &[f64], y: &[f64]| {
            for d in 0..dim {
                out[d] = 0.5 * x[d] * y[d];
            }
        };
        match (self.simple_variant, q) {
            (SimplEVariant::Printed, Query::Tail { s, r }) => {
                let (fwd, inv) = self.relations.row(r).split_at(dim);
                let hs = h.row(s);
                let out = enc.vec_mut(1, b).unwrap();
                for d in 0..dim {
                    out[d] = 0.5 * hs[d] * (fwd[d] + inv[d]);
                }
            }
            (SimplEVariant::Printed, Query::Head { r, o }) => {
                let (fwd, inv) = self.relations.row(r).split_at(dim);
                let to = t.row(o);
                let out = enc.vec_mut(0, b).unwrap();
                for d in 0..dim {
                    out[d] = 0.5 * to[d] * (fwd[d] + inv[d]);
                }
            }
            (SimplEVariant::Original, Query::Tail { s, r }) => {
                let (fwd, inv) = self.relations.row(r).split_at(dim);
                mul_into(enc.vec_mut(1, b).unwrap(), h.row(s), fwd);
                mul_into(enc.vec_mut(0, b).unwrap(), t.row(s), inv);
            }
            (SimplEVariant::Original, Query::Head { r, o }) => {
                let (fwd, inv) = self.relations.row(r).split_at(dim);
                mul_into(enc.vec_mut(0, b).unwrap(), t.row(o), fwd);
                mul_into(enc.vec_mut(1, b).unwrap(), h.row(o), inv);
            }
        }
    }

    /// Writes `B x |cands|` scores into `out` (row-major).
    pub fn score_encoded(
        &self,
        enc: &EncodedBatch,
        cands: &Candidates<'_>,
        chunk: usize,
        out: &mut [f64],
    ) {
        let n_c = cands.len();
        debug_assert_eq!(out.len(), enc.len() * n_c);
        if self.kind.is_translation() {
            self.neg_dist_chunked(enc, cands, chunk, |b, j, _, norm| {
                out[b * n_c + j] = -norm;
            });
            return;
        }
        out.fill(0.0);
        for (t, table) in self.entities.iter().enumerate() {
            if enc.blocks[t].is_none() {
                continue;
            }
            for b in 0..enc.len() {
                let q = enc.vec(t, b).unwrap();
                let row = &mut out[b * n_c..(b + 1) * n_c];
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot += dot(q, table.row(cands.get(j)));
                }
            }
        }
    }

    /// Backpropagates `dscores` (`B x |cands|`) through the candidate side:
    /// candidate-row gradients go into `grads`, query-vector gradients are
    /// added into `dq`.
    pub fn backward_candidates(
        &self,
        enc: &EncodedBatch,
        cands: &Candidates<'_>,
        chunk: usize,
        dscores: &[f64],
        dq: &mut EncodedBatch,
        grads: &mut Gradients,
    ) {
        let n_c = cands.len();
        debug_assert_eq!(dscores.len(), enc.len() * n_c);
        if self.kind.is_translation() {
            let grad_table = &mut grads.entities[0];
            self.neg_dist_chunked(enc, cands, chunk, |b, j, diff, norm| {
                let g = dscores[b * n_c + j];
                if g == 0.0 || norm == 0.0 {
                    return;
                }
                // d(-||q - e||)/dq = -(q - e)/||q - e||
                let k = g / norm;
                axpy(dq.vec_mut(0, b).unwrap(), -k, diff);
                axpy(grad_table.row_mut(cands.get(j)), k, diff);
            });
            return;
        }
        for (t, table) in self.entities.iter().enumerate() {
            if enc.blocks[t].is_none() {
                continue;
            }
            let grad_table = &mut grads.entities[t];
            let width = enc.width;
            let queries = enc.blocks[t].as_deref().unwrap();
            let dq_block = dq.blocks[t].as_deref_mut().unwrap();
            let mut acc = vec![0.0; width];
            for j in 0..n_c {
                let c = cands.get(j);
                let cand_row = table.row(c);
                acc.fill(0.0);
                let mut any = false;
                for b in 0..enc.len() {
                    let g = dscores[b * n_c + j];
                    if g == 0.0 {
                        continue;
                    }
                    any = true;
                    axpy(&mut acc, g, &queries[b * width..(b + 1) * width]);
                    axpy(&mut dq_block[b * width..(b + 1) * width], g, cand_row);
                }
                if any {
                    axpy(grad_table.row_mut(c), 1.0, &acc);
                }
            }
        }
    }

    /// Scores query `b` against the single candidate `targets[b]`.
    pub fn score_diagonal(&self, enc: &EncodedBatch, targets: &[usize], out: &mut [f64]) {
        for (b, (&c, slot)) in targets.iter().zip(out.iter_mut()).enumerate() {
            *slot = if self.kind.is_translation() {
                let (q, e) = (enc.vec(0, b).unwrap(), self.entities[0].row(c));
                -q.iter()
                    .zip(e)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            } else {
                (0..self.entities.len())
                    .filter_map(|t| enc.vec(t, b).map(|q| dot(q, self.entities[t].row(c))))
                    .sum()
            };
        }
    }

    /// Backward of [`ModelParams::score_diagonal`].
    pub fn backward_diagonal(
        &self,
        enc: &EncodedBatch,
        targets: &[usize],
        dscores: &[f64],
        dq: &mut EncodedBatch,
        grads: &mut Gradients,
    ) {
        for (b, (&c, &g)) in targets.iter().zip(dscores).enumerate() {
            if g == 0.0 {
                continue;
            }
            if self.kind.is_translation() {
                let q = enc.vec(0, b).unwrap();
                let e = self.entities[0].row(c);
                let diff: Vec<f64> = q.iter().zip(e).map(|(x, y)| x - y).collect();
                let norm = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                let k = g / norm;
                axpy(dq.vec_mut(0, b).unwrap(), -k, &diff);
                axpy(grads.entities[0].row_mut(c), k, &diff);
            } else {
                for t in 0..self.entities.len() {
                    if let Some(q) = enc.vec(t, b) {
                        axpy(grads.entities[t].row_mut(c), g, q);
                        axpy(dq.vec_mut(t, b).unwrap(), g, self.entities[t].row(c));
                    }
                }
            }
        }
    }

    /// Visits every (query, candidate) pair with the materialized difference
    /// `q - e_c` and its norm, `chunk` candidates at a time.
    fn neg_dist_chunked(
        &self,
        enc: &EncodedBatch,
        cands: &Candidates<'_>,
        chunk: usize,
        mut visit: impl FnMut(usize, usize, &[f64], f64),
    ) {
        let dim = self.dim;
        let batch = enc.len();
        let chunk = chunk.max(1).min(cands.len().max(1));
        let table = &self.entities[0];
        let mut diffs = vec![0.0; batch * chunk * dim];
        let mut start = 0;
        while start < cands.len() {
            let len = chunk.min(cands.len() - start);
            for b in 0..batch {
                let q = enc.vec(0, b).unwrap();
                for j in 0..len {
                    let e = table.row(cands.get(start + j));
                    let slot = &mut diffs[(b * chunk + j) * dim..(b * chunk + j + 1) * dim];
                    for d in 0..dim {
                        slot[d] = q[d] - e[d];
                    }
                }
            }
            for b in 0..batch {
                for j in 0..len {
                    let slot = &diffs[(b * chunk + j) * dim..(b * chunk + j + 1) * dim];
                    let norm = slot.iter().map(|x| x * x).sum::<f64>().sqrt();
                    visit(b, start + j, slot, norm);
                }
            }
            start += len;
        }
    }

    /// Backpropagates query-vector gradients into the rows each query reads.
    pub fn backward_encode(&self, enc: &EncodedBatch, dq: &EncodedBatch, grads: &mut Gradients) {
        let dim = self.dim;
        for (b, q) in enc.queries.iter().enumerate() {
            match (self.kind, *q) {
                (ModelKind::TransE, Query::Tail { s, r }) => {
                    let g = dq.vec(0, b).unwrap();
                    axpy(grads.entities[0].row_mut(s), 1.0, g);
                    axpy(grads.relations.row_mut(r), 1.0, g);
                }
                (ModelKind::TransE, Query::Head { r, o }) => {
                    let g = dq.vec(0, b).unwrap();
                    axpy(grads.entities[0].row_mut(o), 1.0, g);
                    axpy(grads.relations.row_mut(r), -1.0, g);
                }
                (ModelKind::RotatE, Query::Tail { s, r }) => {
                    let (g, qv) = (dq.vec(0, b).unwrap(), enc.vec(0, b).unwrap());
                    let rel = self.relations.row(r);
                    let gs = grads.entities[0].row_mut(s);
                    for (j, &theta) in rel.iter().enumerate() {
                        let (sin, cos) = theta.sin_cos();
                        let (gre, gim) = (g[2 * j], g[2 * j + 1]);
                        gs[2 * j] += gre * cos + gim * sin;
                        gs[2 * j + 1] += -gre * sin + gim * cos;
                    }
                    let gr = grads.relations.row_mut(r);
                    for j in 0..dim / 2 {
                        gr[j] += -g[2 * j] * qv[2 * j + 1] + g[2 * j + 1] * qv[2 * j];
                    }
                }
                (ModelKind::RotatE, Query::Head { r, o }) => {
                    let (g, qv) = (dq.vec(0, b).unwrap(), enc.vec(0, b).unwrap());
                    let rel = self.relations.row(r);
                    let go = grads.entities[0].row_mut(o);
                    for (j, &theta) in rel.iter().enumerate() {
                        let (sin, cos) = theta.sin_cos();
                        let (gre, gim) = (g[2 * j], g[2 * j + 1]);
                        go[2 * j] += gre * cos - gim * sin;
                        go[2 * j + 1] += gre * sin + gim * cos;
                    }
                    let gr = grads.relations.row_mut(r);
                    for j in 0..dim / 2 {
                        gr[j] += g[2 * j] * qv[2 * j + 1] - g[2 * j + 1] * qv[2 * j];
                    }
                }
                (ModelKind::ComplEx, Query::Tail { s, r }) => {
                    let g = dq.vec(0, b).unwrap();
                    let (es, rel) = (self.entities[0].row(s), self.relations.row(r));
                    let mut gs = vec![0.0; dim];
                    let mut gr = vec![0.0; dim];
                    for j in 0..dim / 2 {
                        let (a, bb) = (es[2 * j], es[2 * j + 1]);
                        let (c, d) = (rel[2 * j], rel[2 * j + 1]);
                        let (gre, gim) = (g[2 * j], g[2 * j + 1]);
                        gs[2 * j] = gre * c + gim * d;
                        gs[2 * j + 1] = -gre * d + gim * c;
                        gr[2 * j] = gre * a + gim * bb;
                        gr[2 * j + 1] = -gre * bb + gim * a;
                    }
                    axpy(grads.entities[0].row_mut(s), 1.0, &gs);
                    axpy(grads.relations.row_mut(r), 1.0, &gr);
                }
                (ModelKind::ComplEx, Query::Head { r, o }) => {
                    let g = dq.vec(0, b).unwrap();
                    let (eo, rel) = (self.entities[0].row(o), self.relations.row(r));
                    let mut go = vec![0.0; dim];
                    let mut gr = vec![0.0; dim];
                    for j in 0..dim / 2 {
                        let (c, d) = (rel[2 * j], rel[2 * j + 1]);
                        let (x, y) = (eo[2 * j], eo[2 * j + 1]);
                        let (gre, gim) = (g[2 * j], g[2 * j + 1]);
                        gr[2 * j] = gre * x + gim * y;
                        gr[2 * j + 1] = gre * y - gim * x;
                        go[2 * j] = gre * c - gim * d;
                        go[2 * j + 1] = gre * d + gim * c;
                    }
                    axpy(grads.entities[0].row_mut(o), 1.0, &go);
                    axpy(grads.relations.row_mut(r), 1.0, &gr);
                }
                (ModelKind::SimplE, q) => self.backward_simple(q, b, dq, grads),
            }
        }
    }

    fn backward_simple(&self, q: Query, b: usize, dq: &EncodedBatch, grads: &mut Gradients) {
        let dim = self.dim;
        let (h, t) = (&self.entities[0], &self.entities[1]);
        // out = x * y / 2  =>  dx += g * y / 2
        let half_prod = |g: &[f64], y: &[f64]| -> Vec<f64> {
            (0..dim).map(|d| 0.5 * g[d] * y[d]).collect::<Vec<_>>()
        };
        match (self.simple_variant, q) {
            (SimplEVariant::Printed, Query::Tail { s, r })
            | (SimplEVariant::Printed, Query::Head { r, o: s }) => {
                // Tail reads h_s into the tail-table block; head reads t_o into
                // the head-table block. Both have the form 0.5 * x * (r + r_inv).
                let (ent_table, block) = match q {
                    Query::Tail { .. } => (0, 1),
                    Query::Head { .. } => (1, 0),
                };
                let g = dq.vec(block, b).unwrap();
                let (fwd, inv) = self.relations.row(r).split_at(dim);
                let x = if ent_table == 0 { h.row(s) } else { t.row(s) };
                let sum: Vec<f64> = (0..dim).map(|d| fwd[d] + inv[d]).collect();
                let gx = half_prod(g, &sum);
                let grx = half_prod(g, x);
                axpy(grads.entities[ent_table].row_mut(s), 1.0, &gx);
                let gr = grads.relations.row_mut(r);
                axpy(&mut gr[..dim], 1.0, &grx);
                axpy(&mut gr[dim..], 1.0, &grx);
            }
            (SimplEVariant::Original, Query::Tail { s, r }) => {
                let (fwd, inv) = self.relations.row(r).split_at(dim);
                let (gt_blk, gh_blk) = (dq.vec(1, b).unwrap(), dq.vec(0, b).unwrap());
                // block 1 = h_s * r / 2, block 0 = t_s * r_inv / 2
                let ghs = half_prod(gt_blk, fwd);
                let gfwd = half_prod(gt_blk, h.row(s));
                let gts = half_prod(gh_blk, inv);
                let ginv = half_prod(gh_blk, t.row(s));
                axpy(grads.entities[0].row_mut(s), 1.0, &ghs);
                axpy(grads.entities[1].row_mut(s), 1.0, &gts);
                let gr = grads.relations.row_mut(r);
                axpy(&mut gr[..dim], 1.0, &gfwd);
                axpy(&mut gr[dim..], 1.0, &ginv);
            }
            (SimplEVariant::Original, Query::Head { r, o }) => {
                let (fwd, inv) = self.relations.row(r).split_at(dim);
                let (gh_blk, gt_blk) = (dq.vec(0, b).unwrap(), dq.vec(1, b).unwrap());
                // block 0 = t_o * r / 2, block 1 = h_o * r_inv / 2
                let gto = half_prod(gh_blk, fwd);
                let gfwd = half_prod(gh_blk, t.row(o));
                let gho = half_prod(gt_blk, inv);
                let ginv = half_prod(gt_blk, h.row(o));
                axpy(grads.entities[1].row_mut(o), 1.0, &gto);
                axpy(grads.entities[0].row_mut(o), 1.0, &gho);
                let gr = grads.relations.row_mut(r);
                axpy(&mut gr[..dim], 1.0, &gfwd);
                axpy(&mut gr[dim..], 1.0, &ginv);
            }
        }
    }
}

/// Which entity tables (head, tail) a SimplE query is scored against.
fn simple_tables(variant: SimplEVariant, q: &Query) -> [bool; 2] {
    match (variant, q) {
        (SimplEVariant::Printed, Query::Tail { .. }) => [false, true],
        (SimplEVariant::Printed, Query::Head { .. }) => [true, false],
        (SimplEVariant::Original, _) => [true, true],
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
