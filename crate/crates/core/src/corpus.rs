//! Multi-view labelled corpora: loading, validation and stratified folds.
//!
//! Every view lives in its own TSV file with a header line (`id<TAB>payload`).
//! Essay and transcript payloads are raw UTF-8 text; iVector payloads are
//! comma-separated reals; the labels file maps `id<TAB>label`. Instance order
//! follows the labels file.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The raw inputs available for one test taker.
#[derive(Debug, Clone, PartialEq)]
pub struct Views {
    pub essay: String,
    pub transcript: String,
    pub ivector: Option<Vec<f64>>,
}

/// An unlabelled instance, as consumed at prediction time.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub views: Views,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub views: Views,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    instances: Vec<Instance>,
    labels: Vec<String>,
    ivector_dim: Option<usize>,
}

impl Corpus {
    /// Validates `instances` and derives the sorted label set.
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen = BTreeSet::new();
        for inst in &instances {
            if !seen.insert(inst.id.as_str()) {
                return Err(Error::DuplicateId(inst.id.clone()));
            }
        }
        let ivector_dim = check_ivectors(instances.iter().map(|i| (&i.id, &i.views)))?;
        let labels: BTreeSet<&str> = instances.iter().map(|i| i.label.as_str()).collect();
        let labels = labels.into_iter().map(str::to_owned).collect();
        Ok(Corpus {
            instances,
            labels,
            ivector_dim,
        })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ivector_dim(&self) -> Option<usize> {
        self.ivector_dim
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Index of every instance's label within [`Corpus::labels`].
    pub fn label_indices(&self) -> Vec<usize> {
        self.instances
            .iter()
            .map(|i| {
                self.labels
                    .binary_search(&i.label)
                    .expect("label set covers every instance")
            })
            .collect()
    }

    /// Fails unless the corpus can train a classifier (two or more classes).
    pub fn require_trainable(&self) -> Result<()> {
        if self.labels.len() < 2 {
            return Err(Error::TooFewLabels(self.labels.len()));
        }
        Ok(())
    }

    /// Concatenates two corpora (e.g. train and dev) into one.
    pub fn concat(&self, other: &Corpus) -> Result<Corpus> {
        let mut all = self.instances.clone();
        all.extend(other.instances.iter().cloned());
        Corpus::new(all)
    }

    fn subset(&self, keep: impl Fn(usize) -> bool) -> Result<Corpus> {
        let instances = self
            .instances
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, inst)| inst.clone())
            .collect();
        Corpus::new(instances)
    }
}

fn check_ivectors<'a>(views: impl Iterator<Item = (&'a String, &'a Views)>) -> Result<Option<usize>> {
    let mut dim: Option<usize> = None;
    let mut with = 0usize;
    let mut without: Option<&String> = None;
    for (id, v) in views {
        match &v.ivector {
            Some(vec) => {
                with += 1;
                match dim {
                    None => dim = Some(vec.len()),
                    Some(d) if d != vec.len() => {
                        return Err(Error::DimensionMismatch {
                            id: id.clone(),
                            expected: d,
                            found: vec.len(),
                        })
                    }
                    _ => {}
                }
            }
            None => {
                without.get_or_insert(id);
            }
        }
    }
    if with > 0 {
        if let Some(id) = without {
            return Err(Error::ViewMismatch {
                id: id.clone(),
                view: "ivectors".into(),
            });
        }
    }
    if dim == Some(0) {
        return Err(Error::InvalidArgument(
            "ivectors must have at least one dimension".into(),
        ));
    }
    Ok(dim)
}

struct Table {
    name: String,
    rows: Vec<(String, String)>,
    index: HashMap<String, usize>,
}

impl Table {
    fn get(&self, id: &str) -> Option<&str> {
        self.index.get(id).map(|&i| self.rows[i].1.as_str())
    }
}

fn read_table(path: &Path, name: &str) -> Result<Table> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(raw).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: 0,
        message: format!("invalid UTF-8: {e}"),
    })?;
    let mut rows = Vec::new();
    let mut index = HashMap::new();
    for (lineno, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let line: String = if line.contains('\r') {
            line.replace('\r', "")
        } else {
            line.to_owned()
        };
        if line.is_empty() {
            continue;
        }
        let (id, payload) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.to_owned(),
            line: lineno + 1,
            message: "expected `id<TAB>payload`".into(),
        })?;
        if lineno == 0 && id == "id" {
            continue;
        }
        if id.is_empty() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: lineno + 1,
                message: "empty id".into(),
            });
        }
        if index.insert(id.to_owned(), rows.len()).is_some() {
            return Err(Error::DuplicateId(id.to_owned()));
        }
        rows.push((id.to_owned(), payload.to_owned()));
    }
    Ok(Table {
        name: name.to_owned(),
        rows,
        index,
    })
}

/// Rows of any `id<TAB>rest` file in file order, with the same header, blank
/// line and duplicate-id handling as the view files.
pub fn read_id_table(path: &Path) -> Result<Vec<(String, String)>> {
    Ok(read_table(path, "table")?.rows)
}

fn parse_ivector(path: &Path, id: &str, payload: &str) -> Result<Vec<f64>> {
    payload
        .split(',')
        .map(|s| {
            let s = s.trim();
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                path: path.to_owned(),
                line: 0,
                message: format!("id `{id}`: `{s}` is not a real number"),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse {
                    path: path.to_owned(),
                    line: 0,
                    message: format!("id `{id}`: non-finite value `{s}`"),
                })
            }
        })
        .collect()
}

fn check_covers(ids: &Table, other: &Table) -> Result<()> {
    for (id, _) in &ids.rows {
        if other.get(id).is_none() {
            return Err(Error::ViewMismatch {
                id: id.clone(),
                view: other.name.clone(),
            });
        }
    }
    Ok(())
}

/// Loads the unlabelled views; document order follows the essays file.
pub fn load_documents(
    essays_path: &Path,
    transcripts_path: &Path,
    ivectors_path: Option<&Path>,
) -> Result<Vec<Document>> {
    let essays = read_table(essays_path, "essays")?;
    let transcripts = read_table(transcripts_path, "transcripts")?;
    check_covers(&essays, &transcripts)?;
    check_covers(&transcripts, &essays)?;
    let ivectors = match ivectors_path {
        Some(p) => {
            let t = read_table(p, "ivectors")?;
            check_covers(&essays, &t)?;
            check_covers(&t, &essays)?;
            Some((p, t))
        }
        None => None,
    };
    let mut docs = Vec::with_capacity(essays.rows.len());
    for (id, essay) in &essays.rows {
        let ivector = match &ivectors {
            Some((p, t)) => Some(parse_ivector(p, id, t.get(id).expect("checked"))?),
            None => None,
        };
        docs.push(Document {
            id: id.clone(),
            views: Views {
                essay: essay.clone(),
                transcript: transcripts.get(id).expect("checked").to_owned(),
                ivector,
            },
        });
    }
    check_ivectors(docs.iter().map(|d| (&d.id, &d.views)))?;
    Ok(docs)
}

/// Loads and validates a labelled corpus from its view files.
pub fn load_corpus(
    essays_path: &Path,
    transcripts_path: &Path,
    ivectors_path: Option<&Path>,
    labels_path: &Path,
) -> Result<Corpus> {
    let labels = read_table(labels_path, "labels")?;
    if labels.rows.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let docs = load_documents(essays_path, transcripts_path, ivectors_path)?;
    let mut by_id: HashMap<String, Views> = docs.into_iter().map(|d| (d.id, d.views)).collect();
    if let Some(extra) = by_id.keys().filter(|id| labels.get(id).is_none()).min() {
        return Err(Error::ViewMismatch {
            id: extra.clone(),
            view: "labels".into(),
        });
    }
    let mut instances = Vec::with_capacity(labels.rows.len());
    for (id, label) in &labels.rows {
        let views = by_id.remove(id).ok_or_else(|| Error::ViewMismatch {
            id: id.clone(),
            view: "essays".into(),
        })?;
        let label = label.trim();
        if label.is_empty() {
            return Err(Error::Parse {
                path: labels_path.to_owned(),
                line: 0,
                message: format!("id `{id}` has an empty label"),
            });
        }
        instances.push(Instance {
            id: id.clone(),
            views,
            label: label.to_owned(),
        });
    }
    Corpus::new(instances)
}

/// Paths of the four TSV files making up a labelled corpus on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusPaths {
    pub essays: std::path::PathBuf,
    pub transcripts: std::path::PathBuf,
    pub ivectors: Option<std::path::PathBuf>,
    pub labels: std::path::PathBuf,
}

impl CorpusPaths {
    pub fn load(&self) -> Result<Corpus> {
        load_corpus(
            &self.essays,
            &self.transcripts,
            self.ivectors.as_deref(),
            &self.labels,
        )
    }
}

fn check_cell(id: &str, text: &str) -> Result<()> {
    if text.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidArgument(format!(
            "id `{id}`: payload contains a tab or line break"
        )));
    }
    Ok(())
}

/// Writes `corpus` as `<stem>.essays.tsv`, `<stem>.transcripts.tsv`,
/// `<stem>.labels.tsv` and, when present, `<stem>.ivectors.tsv` under `dir`.
pub fn write_corpus(corpus: &Corpus, dir: &Path, stem: &str) -> Result<CorpusPaths> {
    use std::fmt::Write as _;
    let mut essays = String::from("id\tessay\n");
    let mut transcripts = String::from("id\ttranscript\n");
    let mut ivectors = String::from("id\tivector\n");
    let mut labels = String::from("id\tlabel\n");
    for inst in corpus.instances() {
        check_cell(&inst.id, &inst.id)?;
        check_cell(&inst.id, &inst.views.essay)?;
        check_cell(&inst.id, &inst.views.transcript)?;
        check_cell(&inst.id, &inst.label)?;
        writeln!(essays, "{}\t{}", inst.id, inst.views.essay).unwrap();
        writeln!(transcripts, "{}\t{}", inst.id, inst.views.transcript).unwrap();
        writeln!(labels, "{}\t{}", inst.id, inst.label).unwrap();
        if let Some(v) = &inst.views.ivector {
            let cells: Vec<String> = v.iter().map(f64::to_string).collect();
            writeln!(ivectors, "{}\t{}", inst.id, cells.join(",")).unwrap();
        }
    }
    let put = |name: &str, body: &str| -> Result<std::path::PathBuf> {
        let p = dir.join(format!("{stem}.{name}.tsv"));
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    Ok(CorpusPaths {
        essays: put("essays", &essays)?,
        transcripts: put("transcripts", &transcripts)?,
        ivectors: match corpus.ivector_dim() {
            Some(_) => Some(put("ivectors", &ivectors)?),
            None => None,
        },
        labels: put("labels", &labels)?,
    })
}

/// Assignment of every instance to one of `k` cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    fold_of: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.fold_of.get(id).copied()
    }

    pub fn as_map(&self) -> &BTreeMap<String, usize> {
        &self.fold_of
    }

    /// Per-instance fold indices aligned with the corpus order.
    pub fn indices(&self, corpus: &Corpus) -> Result<Vec<usize>> {
        corpus
            .instances()
            .iter()
            .map(|i| {
                self.fold_of(&i.id)
                    .ok_or_else(|| Error::MissingFold(i.id.clone()))
            })
            .collect()
    }
}

/// Seeded stratified assignment: each class is shuffled, then dealt
/// round-robin across folds. The dealing position carries over from one
/// class to the next so overall fold sizes also stay within one.
pub fn stratified_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "fold count must be >= 2, got {k}"
        )));
    }
    let mut by_class: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for inst in corpus.instances() {
        by_class.entry(&inst.label).or_default().push(&inst.id);
    }
    for (label, ids) in &by_class {
        if ids.len() < k {
            return Err(Error::InsufficientClassSupport {
                label: (*label).to_owned(),
                count: ids.len(),
                k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = BTreeMap::new();
    let mut next = 0usize;
    for ids in by_class.values_mut() {
        ids.shuffle(&mut rng);
        for id in ids.iter() {
            fold_of.insert((*id).to_owned(), next);
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Splits off fold `held_out` as the dev portion; both halves keep corpus order.
pub fn split(corpus: &Corpus, folds: &FoldAssignment, held_out: usize) -> Result<(Corpus, Corpus)> {
    if held_out >= folds.k {
        return Err(Error::FoldOutOfRange {
            index: held_out,
            k: folds.k,
        });
    }
    let idx = folds.indices(corpus)?;
    let train = corpus.subset(|i| idx[i] != held_out)?;
    let dev = corpus.subset(|i| idx[i] == held_out)?;
    Ok((train, dev))
}
