//! Single-file ensemble model format.
//!
//! ```text
//! magic    8 bytes  "NLIDMODL"
//! version  u32 LE
//! sections { tag: 4 bytes, length: u64 LE, payload }*
//! ```
//!
//! Sections appear as one `META`, then one `VIEW` per classifier in ensemble
//! order, then `END `. All integers are little-endian, reals are IEEE-754
//! binary64 and strings are a u32 byte length followed by UTF-8 bytes.
//!
//! `META`: label count (u32) and labels, threshold (f64), tie policy (u8),
//! view count (u32).
//!
//! `VIEW`: kind (u8: 0 char, 1 word, 2 dense), n (u32), modality (u8: 0
//! essay, 1 transcript, 2 ivector), best C (f64), CV accuracy (f64), solver
//! tol (f64), max_iter (u64), seed (u64), feature dimension (u64), TF-IDF flag
//! (u8). When the flag is set: document count (u64), then per feature its
//! string, document frequency (u32) and idf (f64). Finally the weight matrix:
//! one row of `dim + 1` reals per label, bias last.

use std::fs;
use std::path::Path;

use crate::ensemble::{ClassifierView, EnsembleModel, TiePolicy};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureSpec, Modality, TfidfModel, Vocabulary};
use crate::svm::{LinearModel, SolverOptions};

pub const MAGIC: &[u8; 8] = b"NLIDMODL";
pub const FORMAT_VERSION: u32 = 1;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn section(&mut self, tag: &[u8; 4], body: Writer) {
        self.buf.extend_from_slice(tag);
        self.u64(body.buf.len() as u64);
        self.buf.extend_from_slice(&body.buf);
    }
}

fn writer() -> Writer {
    Writer { buf: Vec::new() }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptModel(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(corrupt("unexpected end of data"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| corrupt("size overflows usize"))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| corrupt("invalid UTF-8 string"))
    }
    fn section(&mut self, tag: &[u8; 4]) -> Result<Reader<'a>> {
        let found = self.take(4)?;
        if found != tag {
            return Err(corrupt(format!(
                "expected section {:?}, found {:?}",
                String::from_utf8_lossy(tag),
                String::from_utf8_lossy(found)
            )));
        }
        let len = self.usize()?;
        Ok(Reader {
            buf: self.take(len)?,
            pos: 0,
        })
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(corrupt("trailing bytes in section"));
        }
        Ok(())
    }
}

fn encode_spec(w: &mut Writer, spec: &FeatureSpec) {
    w.u8(match spec.kind() {
        FeatureKind::CharNgram => 0,
        FeatureKind::WordNgram => 1,
        FeatureKind::Dense => 2,
    });
    w.u32(spec.n() as u32);
    w.u8(match spec.modality() {
        Modality::Essay => 0,
        Modality::Transcript => 1,
        Modality::Ivector => 2,
    });
}

fn decode_spec(r: &mut Reader<'_>) -> Result<FeatureSpec> {
    let kind = r.u8()?;
    let n = r.u32()? as usize;
    let modality = match r.u8()? {
        0 => Modality::Essay,
        1 => Modality::Transcript,
        2 => Modality::Ivector,
        m => return Err(corrupt(format!("unknown modality code {m}"))),
    };
    let spec = match kind {
        0 => FeatureSpec::char_ngram(n, modality),
        1 => FeatureSpec::word_ngram(n, modality),
        2 if modality == Modality::Ivector => Ok(FeatureSpec::dense()),
        k => return Err(corrupt(format!("unknown feature kind code {k}"))),
    };
    spec.map_err(|e| corrupt(e.to_string()))
}

fn encode_view(view: &ClassifierView) -> Writer {
    let mut w = writer();
    encode_spec(&mut w, &view.spec);
    w.f64(view.best_c);
    w.f64(view.cv_accuracy);
    let opts = view.model.solver_options();
    w.f64(opts.tol);
    w.u64(opts.max_iter as u64);
    w.u64(opts.seed);
    w.u64(view.model.dim() as u64);
    match &view.tfidf {
        Some(t) => {
            w.u8(1);
            w.u64(t.n_docs() as u64);
            for ((f, &df), &idf) in t.vocab().features().iter().zip(t.df()).zip(t.idf()) {
                w.str(f);
                w.u32(df);
                w.f64(idf);
            }
        }
        None => w.u8(0),
    }
    for row in view.model.weights() {
        for &v in row {
            w.f64(v);
        }
    }
    w
}

fn decode_view(r: &mut Reader<'_>, labels: &[String]) -> Result<ClassifierView> {
    let spec = decode_spec(r)?;
    let best_c = r.f64()?;
    let cv_accuracy = r.f64()?;
    let opts = SolverOptions {
        tol: r.f64()?,
        max_iter: r.usize()?,
        seed: r.u64()?,
    };
    let dim = r.usize()?;
    let tfidf = match r.u8()? {
        0 => None,
        1 => {
            let n_docs = r.usize()?;
            let mut features = Vec::with_capacity(dim.min(1 << 24));
            let mut df = Vec::with_capacity(dim.min(1 << 24));
            let mut idf = Vec::with_capacity(dim.min(1 << 24));
            for _ in 0..dim {
                features.push(r.str()?);
                df.push(r.u32()?);
                idf.push(r.f64()?);
            }
            let vocab = Vocabulary::from_sorted(features).map_err(|e| corrupt(e.to_string()))?;
            let model = TfidfModel::from_parts(vocab, df, n_docs).map_err(|e| corrupt(e.to_string()))?;
            if model.idf() != idf.as_slice() {
                return Err(corrupt(format!(
                    "view `{spec}`: idf does not match document frequencies"
                )));
            }
            Some(model)
        }
        f => return Err(corrupt(format!("bad TF-IDF flag {f}"))),
    };
    let mut weights = Vec::with_capacity(labels.len());
    for _ in labels {
        let mut row = Vec::with_capacity(dim + 1);
        for _ in 0..=dim {
            row.push(r.f64()?);
        }
        weights.push(row);
    }
    let model = LinearModel::from_parts(labels.to_vec(), weights, dim, best_c, opts)
        .map_err(|e| corrupt(e.to_string()))?;
    Ok(ClassifierView {
        spec,
        tfidf,
        model,
        cv_accuracy,
        best_c,
    })
}

pub fn to_bytes(model: &EnsembleModel) -> Vec<u8> {
    let mut out = writer();
    out.buf.extend_from_slice(MAGIC);
    out.u32(FORMAT_VERSION);

    let mut meta = writer();
    meta.u32(model.labels().len() as u32);
    for l in model.labels() {
        meta.str(l);
    }
    meta.f64(model.threshold());
    meta.u8(match model.tie_policy() {
        TiePolicy::MarginSumThenLexicographic => 0,
    });
    meta.u32(model.views().len() as u32);
    out.section(b"META", meta);

    for view in model.views() {
        out.section(b"VIEW", encode_view(view));
    }
    out.section(b"END ", writer());
    out.buf
}

pub fn from_bytes(bytes: &[u8]) -> Result<EnsembleModel> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut r = Reader {
        buf: bytes,
        pos: MAGIC.len(),
    };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }

    let mut meta = r.section(b"META")?;
    let n_labels = meta.u32()? as usize;
    let labels = (0..n_labels).map(|_| meta.str()).collect::<Result<Vec<_>>>()?;
    let threshold = meta.f64()?;
    let tie_policy = match meta.u8()? {
        0 => TiePolicy::MarginSumThenLexicographic,
        t => return Err(corrupt(format!("unknown tie policy code {t}"))),
    };
    let n_views = meta.u32()? as usize;
    meta.finish()?;

    let mut views = Vec::with_capacity(n_views);
    for _ in 0..n_views {
        let mut section = r.section(b"VIEW")?;
        views.push(decode_view(&mut section, &labels)?);
        section.finish()?;
    }
    r.section(b"END ")?.finish()?;
    r.finish()?;
    EnsembleModel::new(views, labels, threshold, tie_policy).map_err(|e| corrupt(e.to_string()))
}

pub fn save(model: &EnsembleModel, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<EnsembleModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
