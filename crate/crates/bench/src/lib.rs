//! Fixtures shared by the benchmarks.

use nlid_core::features::{fit_tfidf, TermCounts};
use nlid_core::synthetic::{planted_corpus, PlantedConfig};
use nlid_core::{Corpus, FeatureSpec, Modality, SparseVector, TfidfModel};

pub fn corpus(per_class: usize) -> Corpus {
    planted_corpus(&PlantedConfig {
        per_class,
        ..Default::default()
    })
    .expect("synthetic corpus is valid")
}

/// Essay character n-gram counts, the fitted TF-IDF model and the vectors.
pub fn vectors(corpus: &Corpus, n: usize) -> (Vec<TermCounts>, TfidfModel, Vec<SparseVector>) {
    let spec = FeatureSpec::char_ngram(n, Modality::Essay).expect("valid n");
    let counts: Vec<TermCounts> = corpus
        .instances()
        .iter()
        .map(|i| spec.extract(&i.views).expect("essay present"))
        .collect();
    let tfidf = fit_tfidf(&counts).expect("non-empty features");
    let x = counts.iter().map(|c| tfidf.transform(c)).collect();
    (counts, tfidf, x)
}
