//! Triple ingestion, integer vocabularies and the filtered-evaluation index.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};

/// A fact `(subject, relation, object)` over dense integer ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub s: usize,
    pub r: usize,
    pub o: usize,
}

impl Triple {
    pub fn new(s: usize, r: usize, o: usize) -> Self {
        Triple { s, r, o }
    }
}

pub type RawTriple = (String, String, String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    fn index(self) -> usize {
        match self {
            Split::Train => 0,
            Split::Valid => 1,
            Split::Test => 2,
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered vocabulary with dense ids assigned by first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocab {
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Integer-encoded knowledge base with train/valid/test splits.
///
/// Reads of a split through [`KnowledgeBase::split`] are counted so callers
/// can check that, for example, the test fold is untouched until model
/// selection is over. Clones share the counters.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    pub entities: Vocab,
    pub relations: Vocab,
    splits: [Vec<Triple>; 3],
    reads: Arc<[AtomicUsize; 3]>,
}

impl KnowledgeBase {
    /// Builds a knowledge base directly from integer triples.
    pub fn from_ids(
        num_entities: usize,
        num_relations: usize,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Result<Self> {
        for t in train.iter().chain(&valid).chain(&test) {
            check_id("entity", t.s, num_entities)?;
            check_id("entity", t.o, num_entities)?;
            check_id("relation", t.r, num_relations)?;
        }
        let mut entities = Vocab::default();
        for e in 0..num_entities {
            entities.intern(&format!("e{e}"));
        }
        let mut relations = Vocab::default();
        for r in 0..num_relations {
            relations.intern(&format!("r{r}"));
        }
        Ok(KnowledgeBase {
            entities,
            relations,
            splits: [train, valid, test],
            reads: Arc::default(),
        })
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        self.reads[split.index()].fetch_add(1, Ordering::Relaxed);
        &self.splits[split.index()]
    }

    pub fn train(&self) -> &[Triple] {
        self.split(Split::Train)
    }

    pub fn valid(&self) -> &[Triple] {
        self.split(Split::Valid)
    }

    pub fn test(&self) -> &[Triple] {
        self.split(Split::Test)
    }

    /// Number of times `split` has been read through [`KnowledgeBase::split`].
    pub fn reads(&self, split: Split) -> usize {
        self.reads[split.index()].load(Ordering::Relaxed)
    }

    /// Split length without counting as a read.
    pub fn split_len(&self, split: Split) -> usize {
        self.splits[split.index()].len()
    }

    /// All triples of all splits, for building the filter index only.
    fn filter_triples(&self) -> impl Iterator<Item = &Triple> {
        self.splits.iter().flatten()
    }

    pub fn decode(&self, t: Triple) -> Option<(&str, &str, &str)> {
        Some((
            self.entities.name(t.s)?,
            self.relations.name(t.r)?,
            self.entities.name(t.o)?,
        ))
    }
}

fn check_id(what: &'static str, id: usize, size: usize) -> Result<()> {
    if id >= size {
        return Err(Error::IdOutOfRange { what, id, size });
    }
    Ok(())
}

/// Reads one split file: one `subject<TAB>relation<TAB>object` triple per line.
///
/// Blank lines are skipped and whitespace around each field is trimmed.
pub fn load_split(path: impl AsRef<Path>) -> Result<Vec<RawTriple>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::MalformedLine {
                path: path.to_owned(),
                line: i + 1,
                found: fields.len(),
            });
        }
        out.push((
            fields[0].trim().to_owned(),
            fields[1].trim().to_owned(),
            fields[2].trim().to_owned(),
        ));
    }
    if out.is_empty() {
        return Err(Error::EmptyFile(path.to_owned()));
    }
    Ok(out)
}

/// Loads `train.txt`, `valid.txt` and `test.txt` from a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<KnowledgeBase> {
    let dir = dir.as_ref();
    let train = load_split(dir.join("train.txt"))?;
    let valid = load_split(dir.join("valid.txt"))?;
    let test = load_split(dir.join("test.txt"))?;
    Ok(build_kb(&train, &valid, &test))
}

/// Assigns ids by first appearance scanning train, then valid, then test.
pub fn build_kb(train: &[RawTriple], valid: &[RawTriple], test: &[RawTriple]) -> KnowledgeBase {
    let mut entities = Vocab::default();
    let mut relations = Vocab::default();
    let mut encode = |raw: &[RawTriple]| -> Vec<Triple> {
        raw.iter()
            .map(|(s, r, o)| {
                let s = entities.intern(s);
                let r = relations.intern(r);
                let o = entities.intern(o);
                Triple { s, r, o }
            })
            .collect()
    };
    let splits = [encode(train), encode(valid), encode(test)];
    KnowledgeBase {
        entities,
        relations,
        splits,
        reads: Arc::default(),
    }
}

/// Known-true answers per query, over all three splits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterIndex {
    tail_true: HashMap<(usize, usize), Vec<usize>>,
    head_true: HashMap<(usize, usize), Vec<usize>>,
}

impl FilterIndex {
    /// Entities `o` with `(s, r, o)` known true, sorted ascending.
    pub fn tails(&self, s: usize, r: usize) -> &[usize] {
        self.tail_true.get(&(s, r)).map_or(&[], Vec::as_slice)
    }

    /// Entities `s` with `(s, r, o)` known true, sorted ascending.
    pub fn heads(&self, r: usize, o: usize) -> &[usize] {
        self.head_true.get(&(r, o)).map_or(&[], Vec::as_slice)
    }

    pub fn tail_keys(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.tail_true.keys()
    }

    pub fn head_keys(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.head_true.keys()
    }
}

pub fn build_filter_index(kb: &KnowledgeBase) -> FilterIndex {
    let mut index = FilterIndex::default();
    for t in kb.filter_triples() {
        index.tail_true.entry((t.s, t.r)).or_default().push(t.o);
        index.head_true.entry((t.r, t.o)).or_default().push(t.s);
    }
    for set in index
        .tail_true
        .values_mut()
        .chain(index.head_true.values_mut())
    {
        set.sort_unstable();
        set.dedup();
    }
    index
}
