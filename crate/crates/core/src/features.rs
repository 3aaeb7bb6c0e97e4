//! Text normalisation, n-gram extraction, TF-IDF weighting and the sparse
//! vector type every classifier consumes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::corpus::Views;
use crate::error::{Error, Result};

/// Feature-string multiset. Iteration is in byte-lexicographic order, which
/// is also vocabulary index order.
pub type TermCounts = BTreeMap<String, u32>;

pub const MAX_CHAR_N: usize = 10;
pub const MAX_WORD_N: usize = 2;

/// Sorted `(index, weight)` pairs with finite, nonzero weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from arbitrary pairs: zeros are dropped, indices must
    /// be strictly increasing and weights finite.
    pub fn from_entries(entries: Vec<(u32, f64)>) -> Result<Self> {
        let mut out = Vec::with_capacity(entries.len());
        for (pos, (i, w)) in entries.into_iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteFeature(pos));
            }
            if let Some(&(last, _)) = out.last() {
                if i <= last {
                    return Err(Error::InvalidArgument(format!(
                        "sparse indices must be strictly increasing ({last} then {i})"
                    )));
                }
            }
            if w != 0.0 {
                out.push((i, w));
            }
        }
        Ok(SparseVector { entries: out })
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One past the largest stored index.
    pub fn min_dim(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i as usize + 1)
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product with a dense vector; indices beyond `dense` contribute 0.
    #[inline]
    pub fn dot(&self, dense: &[f64]) -> f64 {
        let mut s = 0.0;
        for &(i, w) in &self.entries {
            if let Some(d) = dense.get(i as usize) {
                s += w * d;
            }
        }
        s
    }

    /// `dense += scale * self`.
    #[inline]
    pub fn axpy(&self, scale: f64, dense: &mut [f64]) {
        for &(i, w) in &self.entries {
            dense[i as usize] += scale * w;
        }
    }
}

/// Lowercases and collapses whitespace runs to single spaces.
pub fn normalize(text: &str) -> String {
    let lower = text.to_lowercase();
    let mut out = String::with_capacity(lower.len());
    for tok in lower.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// Character n-grams of `" " + text + " "`, counted over Unicode scalar values.
pub fn char_ngrams(text: &str, n: usize) -> TermCounts {
    let mut counts = TermCounts::new();
    if n == 0 {
        return counts;
    }
    let mut chars: Vec<char> = Vec::with_capacity(text.len() + 2);
    chars.push(' ');
    chars.extend(text.chars());
    chars.push(' ');
    for w in chars.windows(n) {
        *counts.entry(w.iter().collect()).or_insert(0) += 1;
    }
    counts
}

/// Contiguous runs of `n` whitespace-separated tokens joined by one space.
pub fn word_ngrams(text: &str, n: usize) -> TermCounts {
    let mut counts = TermCounts::new();
    if n == 0 {
        return counts;
    }
    let tokens: Vec<&str> = text.split_whitespace().collect();
    for w in tokens.windows(n) {
        *counts.entry(w.join(" ")).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKind {
    CharNgram,
    WordNgram,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Modality {
    Essay,
    Transcript,
    Ivector,
}

impl Modality {
    pub fn name(self) -> &'static str {
        match self {
            Modality::Essay => "essay",
            Modality::Transcript => "transcript",
            Modality::Ivector => "ivector",
        }
    }
}

/// Which input a classifier reads and how it turns it into features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureSpec {
    kind: FeatureKind,
    n: usize,
    modality: Modality,
}

impl FeatureSpec {
    pub fn char_ngram(n: usize, modality: Modality) -> Result<Self> {
        if !(1..=MAX_CHAR_N).contains(&n) {
            return Err(Error::InvalidArgument(format!(
                "character n must be in 1..={MAX_CHAR_N}, got {n}"
            )));
        }
        Self::text(FeatureKind::CharNgram, n, modality)
    }

    pub fn word_ngram(n: usize, modality: Modality) -> Result<Self> {
        if !(1..=MAX_WORD_N).contains(&n) {
            return Err(Error::InvalidArgument(format!(
                "word n must be in 1..={MAX_WORD_N}, got {n}"
            )));
        }
        Self::text(FeatureKind::WordNgram, n, modality)
    }

    pub fn dense() -> Self {
        FeatureSpec {
            kind: FeatureKind::Dense,
            n: 0,
            modality: Modality::Ivector,
        }
    }

    fn text(kind: FeatureKind, n: usize, modality: Modality) -> Result<Self> {
        if modality == Modality::Ivector {
            return Err(Error::InvalidArgument(
                "n-gram features need a text modality".into(),
            ));
        }
        Ok(FeatureSpec { kind, n, modality })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn is_dense(&self) -> bool {
        self.kind == FeatureKind::Dense
    }

    /// N-gram counts for this spec's modality; `None` for dense specs.
    pub fn extract(&self, views: &Views) -> Option<TermCounts> {
        let text = match self.modality {
            Modality::Essay => &views.essay,
            Modality::Transcript => &views.transcript,
            Modality::Ivector => return None,
        };
        let text = normalize(text);
        match self.kind {
            FeatureKind::CharNgram => Some(char_ngrams(&text, self.n)),
            FeatureKind::WordNgram => Some(word_ngrams(&text, self.n)),
            FeatureKind::Dense => None,
        }
    }

    /// All character (1..=10) and word (1..=2) n-gram views over essays and
    /// transcripts, followed by the dense iVector view.
    pub fn default_set() -> Vec<FeatureSpec> {
        let mut specs = Vec::new();
        for modality in [Modality::Essay, Modality::Transcript] {
            for n in 1..=MAX_CHAR_N {
                specs.push(FeatureSpec::char_ngram(n, modality).expect("valid"));
            }
            for n in 1..=MAX_WORD_N {
                specs.push(FeatureSpec::word_ngram(n, modality).expect("valid"));
            }
        }
        specs.push(FeatureSpec::dense());
        specs
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FeatureKind::CharNgram => write!(f, "char{}:{}", self.n, self.modality.name()),
            FeatureKind::WordNgram => write!(f, "word{}:{}", self.n, self.modality.name()),
            FeatureKind::Dense => write!(f, "dense:{}", self.modality.name()),
        }
    }
}

impl FromStr for FeatureSpec {
    type Err = Error;

    /// Parses `char7:essay`, `word2:transcript` or `dense:ivector`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad feature spec `{s}`"));
        let (kind, modality) = s.split_once(':').ok_or_else(bad)?;
        let modality = match modality {
            "essay" => Modality::Essay,
            "transcript" => Modality::Transcript,
            "ivector" => Modality::Ivector,
            _ => return Err(bad()),
        };
        if kind == "dense" {
            return if modality == Modality::Ivector {
                Ok(FeatureSpec::dense())
            } else {
                Err(bad())
            };
        }
        if let Some(n) = kind.strip_prefix("char") {
            FeatureSpec::char_ngram(n.parse().map_err(|_| bad())?, modality)
        } else if let Some(n) = kind.strip_prefix("word") {
            FeatureSpec::word_ngram(n.parse().map_err(|_| bad())?, modality)
        } else {
            Err(bad())
        }
    }
}

/// Bijection between feature strings and `0..len()`, in sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    feature_of: Vec<String>,
    index_of: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds from features that are already sorted and distinct.
    pub fn from_sorted(features: Vec<String>) -> Result<Self> {
        if features.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "vocabulary must be strictly sorted".into(),
            ));
        }
        if features.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument("vocabulary too large".into()));
        }
        let index_of = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        Ok(Vocabulary {
            feature_of: features,
            index_of,
        })
    }

    pub fn len(&self) -> usize {
        self.feature_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_of.is_empty()
    }

    pub fn index(&self, feature: &str) -> Option<u32> {
        self.index_of.get(feature).copied()
    }

    pub fn feature(&self, index: usize) -> Option<&str> {
        self.feature_of.get(index).map(String::as_str)
    }

    pub fn features(&self) -> &[String] {
        &self.feature_of
    }
}

/// Smoothed IDF, `ln((1 + n_docs) / (1 + df)) + 1`, with L2 document
/// normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocab: Vocabulary,
    idf: Vec<f64>,
    df: Vec<u32>,
    n_docs: usize,
}

pub fn smooth_idf(n_docs: usize, df: u32) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl TfidfModel {
    /// Reassembles a model from persisted parts, recomputing idf from df.
    pub fn from_parts(vocab: Vocabulary, df: Vec<u32>, n_docs: usize) -> Result<Self> {
        if df.len() != vocab.len() {
            return Err(Error::LengthMismatch {
                left: vocab.len(),
                right: df.len(),
            });
        }
        if n_docs == 0 || df.iter().any(|&d| d as usize > n_docs) {
            return Err(Error::InvalidArgument("document frequencies out of range".into()));
        }
        let idf = df.iter().map(|&d| smooth_idf(n_docs, d)).collect();
        Ok(TfidfModel {
            vocab,
            idf,
            df,
            n_docs,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn df(&self) -> &[u32] {
        &self.df
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn dim(&self) -> usize {
        self.vocab.len()
    }

    /// `count * idf`, L2-normalised; out-of-vocabulary features are dropped.
    pub fn transform(&self, doc: &TermCounts) -> SparseVector {
        let mut entries: Vec<(u32, f64)> = doc
            .iter()
            .filter_map(|(f, &c)| self.vocab.index(f).map(|i| (i, c as f64 * self.idf[i as usize])))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        SparseVector { entries }
    }
}

/// Fits vocabulary and document frequencies over `docs`.
pub fn fit_tfidf(docs: &[TermCounts]) -> Result<TfidfModel> {
    if docs.is_empty() {
        return Err(Error::EmptyProblem);
    }
    let mut df: HashMap<&str, u32> = HashMap::new();
    for doc in docs {
        for f in doc.keys() {
            *df.entry(f.as_str()).or_insert(0) += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::EmptyFeatureSpace);
    }
    let mut pairs: Vec<(&str, u32)> = df.into_iter().collect();
    pairs.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let df: Vec<u32> = pairs.iter().map(|p| p.1).collect();
    let vocab = Vocabulary::from_sorted(pairs.into_iter().map(|p| p.0.to_owned()).collect())?;
    TfidfModel::from_parts(vocab, df, docs.len())
}

/// Passes a dense vector through unchanged, dropping exact zeros.
pub fn dense_to_vector(v: &[f64]) -> Result<SparseVector> {
    let mut entries = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFiniteFeature(i));
        }
        if x != 0.0 {
            entries.push((i as u32, x));
        }
    }
    Ok(SparseVector { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(pairs: &[(&str, u32)]) -> TermCounts {
        pairs.iter().map(|&(f, c)| (f.to_owned(), c)).collect()
    }

    #[test]
    fn normalize_lowercases_and_collapses() {
        assert_eq!(normalize("I Think"), "i think");
        assert_eq!(normalize("  A\tB "), "a b");
        assert_eq!(normalize("İ"), "İ".to_lowercase());
        assert_eq!(normalize(""), "");
    }

    #[test]
    fn char_ngram_enumeration() {
        assert_eq!(char_ngrams("ab", 2), counts(&[(" a", 1), ("ab", 1), ("b ", 1)]));
        assert_eq!(char_ngrams("aaa", 2), counts(&[(" a", 1), ("aa", 2), ("a ", 1)]));
        assert!(char_ngrams("ab", 5).is_empty());
        let grams = char_ngrams(&normalize("Well, I think so."), 8);
        assert!(grams.contains_key("i think "));
        assert!(grams.contains_key(" i think"));
    }

    #[test]
    fn word_ngram_enumeration() {
        assert_eq!(
            word_ngrams("i think so", 2),
            counts(&[("i think", 1), ("think so", 1)])
        );
        assert_eq!(
            word_ngrams("i think so", 1),
            counts(&[("i", 1), ("think", 1), ("so", 1)])
        );
        assert!(word_ngrams("", 1).is_empty());
    }

    #[test]
    fn idf_values() {
        let m = fit_tfidf(&[counts(&[("a", 2)])]).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.df(), [1]);
        assert_eq!(m.idf(), [1.0]);

        let m = fit_tfidf(&[counts(&[("a", 1), ("b", 1)]), counts(&[("a", 3)])]).unwrap();
        assert_eq!(m.vocab().features(), ["a", "b"]);
        assert_eq!(m.idf()[0], 1.0);
        // ln(3/2) + 1
        assert!((m.idf()[1] - 1.405_465_108_108_164_4).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_empty_inputs() {
        assert!(matches!(fit_tfidf(&[]), Err(Error::EmptyProblem)));
        assert!(matches!(
            fit_tfidf(&[TermCounts::new(), TermCounts::new()]),
            Err(Error::EmptyFeatureSpace)
        ));
    }

    #[test]
    fn transform_cases() {
        let m = fit_tfidf(&[counts(&[("a", 1), ("b", 1)]), counts(&[("a", 1), ("b", 1)])]).unwrap();
        assert_eq!(m.idf(), [1.0, 1.0]);
        let v = m.transform(&counts(&[("a", 1), ("b", 1)]));
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(v.len(), 2);
        for &(_, w) in v.entries() {
            assert!((w - h).abs() < 1e-15);
        }
        let v = m.transform(&counts(&[("b", 4)]));
        assert_eq!(v.entries(), [(1, 1.0)]);
        assert!(m.transform(&counts(&[("zz", 3)])).is_empty());
    }

    #[test]
    fn dense_vectors() {
        assert_eq!(dense_to_vector(&[0.0, 2.5, 0.0]).unwrap().entries(), [(1, 2.5)]);
        assert!(dense_to_vector(&[0.0; 4]).unwrap().is_empty());
        assert!(matches!(
            dense_to_vector(&[1.0, f64::NAN]),
            Err(Error::NonFiniteFeature(1))
        ));
    }

    #[test]
    fn spec_round_trip_and_limits() {
        for spec in FeatureSpec::default_set() {
            assert_eq!(spec.to_string().parse::<FeatureSpec>().unwrap(), spec);
        }
        assert_eq!(FeatureSpec::default_set().len(), 25);
        assert!(FeatureSpec::char_ngram(11, Modality::Essay).is_err());
        assert!(FeatureSpec::word_ngram(3, Modality::Essay).is_err());
        assert!("char3:ivector".parse::<FeatureSpec>().is_err());
        assert!("dense:essay".parse::<FeatureSpec>().is_err());
    }

    fn doc_strategy() -> impl Strategy<Value = TermCounts> {
        proptest::collection::btree_map("[a-e]{1,3}", 1u32..5, 0..8)
    }

    proptest! {
        #[test]
        fn transform_has_unit_norm(
            docs in proptest::collection::vec(doc_strategy(), 1..6),
            probe in doc_strategy(),
        ) {
            prop_assume!(docs.iter().any(|d| !d.is_empty()));
            let m = fit_tfidf(&docs).unwrap();
            let v = m.transform(&probe);
            if probe.keys().any(|f| m.vocab().index(f).is_some()) {
                prop_assert!((v.norm() - 1.0).abs() <= 1e-12);
            } else {
                prop_assert!(v.is_empty());
            }
            let doubled: TermCounts = probe.iter().map(|(f, c)| (f.clone(), c * 2)).collect();
            let v2 = m.transform(&doubled);
            prop_assert_eq!(v.len(), v2.len());
            for (a, b) in v.entries().iter().zip(v2.entries()) {
                prop_assert_eq!(a.0, b.0);
                prop_assert!((a.1 - b.1).abs() <= 1e-15);
            }
        }

        #[test]
        fn fit_is_order_independent(mut docs in proptest::collection::vec(doc_strategy(), 1..6)) {
            prop_assume!(docs.iter().any(|d| !d.is_empty()));
            let a = fit_tfidf(&docs).unwrap();
            docs.reverse();
            let b = fit_tfidf(&docs).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn idf_bounds(docs in proptest::collection::vec(doc_strategy(), 1..6)) {
            prop_assume!(docs.iter().any(|d| !d.is_empty()));
            let m = fit_tfidf(&docs).unwrap();
            for (&d, &idf) in m.df().iter().zip(m.idf()) {
                prop_assert!(idf >= 1.0);
                prop_assert_eq!(idf == 1.0, d as usize == m.n_docs());
            }
        }

        #[test]
        fn ngram_totals(text in "[a-c ]{0,20}", n in 1usize..6) {
            let t = normalize(&text);
            let padded = t.chars().count() + 2;
            let total: u32 = char_ngrams(&t, n).values().sum();
            prop_assert_eq!(total as usize, (padded + 1).saturating_sub(n));
            let words = t.split_whitespace().count();
            let wn = n.min(2);
            let total: u32 = word_ngrams(&t, wn).values().sum();
            prop_assert_eq!(total as usize, (words + 1).saturating_sub(wn));
        }
    }
}
