//! Little-endian binary checkpoints.
//!
//! Layout: an 8-byte magic, a `u32` version, the model header and tables,
//! a flags byte, then the optional optimizer state, the epoch, and the
//! optional trainer state needed to resume training exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::models::{ModelKind, ModelParams, SimplEVariant, Table};
use crate::training::{LogRecord, OptState, RngState, TrainerSnapshot};

const MAGIC: &[u8; 8] = b"KBCCKPT\0";
pub const VERSION: u32 = 1;

const HAS_OPT: u8 = 1;
const HAS_RESUME: u8 = 2;

/// Trainer bookkeeping beyond parameters and optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct ResumeState {
    pub rng: RngState,
    pub best: Option<ModelParams>,
    pub best_mrr: f64,
    pub best_epoch: usize,
    pub stale: usize,
    pub finished: bool,
    pub log: Vec<LogRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub opt: Option<OptState>,
    pub epoch: usize,
    pub resume: Option<ResumeState>,
}

impl Checkpoint {
    pub fn params_only(params: ModelParams, epoch: usize) -> Self {
        Checkpoint {
            params,
            opt: None,
            epoch,
            resume: None,
        }
    }

    pub fn from_snapshot(snapshot: TrainerSnapshot) -> Self {
        Checkpoint {
            params: snapshot.params,
            opt: Some(snapshot.opt),
            epoch: snapshot.epoch,
            resume: Some(ResumeState {
                rng: snapshot.rng,
                best: snapshot.best,
                best_mrr: snapshot.best_mrr,
                best_epoch: snapshot.best_epoch,
                stale: snapshot.stale,
                finished: snapshot.finished,
                log: snapshot.log,
            }),
        }
    }

    /// Fails unless the checkpoint carries optimizer and trainer state.
    pub fn into_snapshot(self) -> Result<TrainerSnapshot> {
        let (Some(opt), Some(resume)) = (self.opt, self.resume) else {
            return Err(Error::Checkpoint(
                "no optimizer or trainer state to resume from".into(),
            ));
        };
        Ok(TrainerSnapshot {
            params: self.params,
            opt,
            epoch: self.epoch,
            rng: resume.rng,
            best: resume.best,
            best_mrr: resume.best_mrr,
            best_epoch: resume.best_epoch,
            stale: resume.stale,
            finished: resume.finished,
            log: resume.log,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.params(&self.params);
        let flags = if self.opt.is_some() { HAS_OPT } else { 0 }
            | if self.resume.is_some() { HAS_RESUME } else { 0 };
        w.u8(flags);
        if let Some(opt) = &self.opt {
            w.f64(opt.epsilon);
            w.u64(opt.accumulators.len() as u64);
            for t in &opt.accumulators {
                w.table(t);
            }
        }
        w.u64(self.epoch as u64);
        if let Some(r) = &self.resume {
            w.bytes(&r.rng.seed);
            w.u64(r.rng.stream);
            w.bytes(&r.rng.word_pos.to_le_bytes());
            match &r.best {
                Some(best) => {
                    w.u8(1);
                    w.params(best);
                }
                None => w.u8(0),
            }
            w.f64(r.best_mrr);
            w.u64(r.best_epoch as u64);
            w.u64(r.stale as u64);
            w.u8(r.finished as u8);
            w.u64(r.log.len() as u64);
            for rec in &r.log {
                w.u64(rec.epoch as u64);
                w.f64(rec.train_loss);
                w.f64(rec.dev_mrr);
                match rec.wall_secs {
                    Some(s) => {
                        w.u8(1);
                        w.f64(s);
                    }
                    None => w.u8(0),
                }
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::Checkpoint("bad magic; not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                supported: VERSION,
            });
        }
        let params = r.params()?;
        let flags = r.u8()?;
        if flags & !(HAS_OPT | HAS_RESUME) != 0 {
            return Err(Error::Checkpoint(format!("unknown flags {flags:#04x}")));
        }
        let opt = if flags & HAS_OPT != 0 {
            let epsilon = r.f64()?;
            let n = r.usize()?;
            let expected: Vec<(usize, usize)> = params.tables().map(|t| (t.rows, t.cols)).collect();
            if n != expected.len() {
                return Err(Error::Checkpoint(format!(
                    "{n} accumulator tables for {} parameter tables",
                    expected.len()
                )));
            }
            let mut accumulators = Vec::with_capacity(n);
            for &(rows, cols) in &expected {
                accumulators.push(r.table(rows, cols)?);
            }
            Some(OptState {
                accumulators,
                epsilon,
            })
        } else {
            None
        };
        let epoch = r.usize()?;
        let resume = if flags & HAS_RESUME != 0 {
            let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
            let stream = r.u64()?;
            let word_pos = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
            let best = match r.u8()? {
                0 => None,
                1 => Some(r.params()?),
                b => return Err(Error::Checkpoint(format!("bad presence byte {b}"))),
            };
            let best_mrr = r.f64()?;
            let best_epoch = r.usize()?;
            let stale = r.usize()?;
            let finished = r.bool()?;
            let n = r.usize()?;
            let mut log = Vec::with_capacity(n.min(r.remaining() / 25));
            for _ in 0..n {
                let epoch = r.usize()?;
                let train_loss = r.f64()?;
                let dev_mrr = r.f64()?;
                let wall_secs = if r.bool()? { Some(r.f64()?) } else { None };
                log.push(LogRecord {
                    epoch,
                    train_loss,
                    dev_mrr,
                    wall_secs,
                });
            }
            Some(ResumeState {
                rng: RngState {
                    seed,
                    stream,
                    word_pos,
                },
                best,
                best_mrr,
                best_epoch,
                stale,
                finished,
                log,
            })
        } else {
            None
        };
        if r.remaining() != 0 {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes",
                r.remaining()
            )));
        }
        Ok(Checkpoint {
            params,
            opt,
            epoch,
            resume,
        })
    }
}

pub fn save(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

/// Loads a checkpoint and checks that it holds a `kind` model.
pub fn load_expecting(path: impl AsRef<Path>, kind: ModelKind) -> Result<Checkpoint> {
    let ckpt = load(path)?;
    if ckpt.params.kind != kind {
        return Err(Error::KindMismatch {
            expected: kind,
            found: ckpt.params.kind,
        });
    }
    Ok(ckpt)
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_bits().to_le_bytes());
    }

    fn table(&mut self, t: &Table) {
        self.u64(t.rows as u64);
        self.u64(t.cols as u64);
        self.buf.reserve(8 * t.data.len());
        for &x in &t.data {
            self.f64(x);
        }
    }

    fn params(&mut self, p: &ModelParams) {
        self.u8(p.kind.tag());
        self.u8(match p.simple_variant {
            SimplEVariant::Printed => 0,
            SimplEVariant::Original => 1,
        });
        self.u8(p.reciprocal as u8);
        self.u64(p.dim as u64);
        self.u64(p.num_entities() as u64);
        self.u64(p.num_relations as u64);
        for t in p.tables() {
            self.table(t);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if n > self.remaining() {
            return Err(Error::Checkpoint(format!(
                "truncated: needed {n} bytes at offset {}, {} left",
                self.pos,
                self.remaining()
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Checkpoint(format!("bad boolean byte {b}"))),
        }
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::Checkpoint(format!("count {v} too large")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn table(&mut self, rows: usize, cols: usize) -> Result<Table> {
        let (r, c) = (self.usize()?, self.usize()?);
        if (r, c) != (rows, cols) {
            return Err(Error::Checkpoint(format!(
                "table is {r}x{c}, expected {rows}x{cols}"
            )));
        }
        let n = rows
            .checked_mul(cols)
            .filter(|n| n.checked_mul(8).is_some_and(|b| b <= self.remaining()))
            .ok_or_else(|| Error::Checkpoint("truncated table data".into()))?;
        let raw = self.take(8 * n)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_bits(u64::from_le_bytes(b.try_into().expect("8 bytes"))))
            .collect();
        Ok(Table { rows, cols, data })
    }

    fn params(&mut self) -> Result<ModelParams> {
        let tag = self.u8()?;
        let kind = ModelKind::from_tag(tag)
            .ok_or_else(|| Error::Checkpoint(format!("unknown model tag {tag}")))?;
        let variant = match self.u8()? {
            0 => SimplEVariant::Printed,
            1 => SimplEVariant::Original,
            b => return Err(Error::Checkpoint(format!("unknown SimplE variant {b}"))),
        };
        let reciprocal = self.bool()?;
        let dim = self.usize()?;
        let ne = self.usize()?;
        let nr = self.usize()?;
        // Build an empty shell first so shapes are validated against the kind.
        let mut shell = ModelParams::zeros(kind, dim, 0, 0, reciprocal)?;
        shell.simple_variant = variant;
        shell.num_relations = nr;
        let rel_rows = if reciprocal { 2 * nr } else { nr };
        for t in &mut shell.entities {
            *t = self.table(ne, t.cols)?;
        }
        shell.relations = self.table(rel_rows, shell.relations.cols)?;
        Ok(shell)
    }
}
