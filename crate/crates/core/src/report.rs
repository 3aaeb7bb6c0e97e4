//! Most-informative features and confusion-matrix rendering.

use std::fmt::Write as _;

use crate::ensemble::ClassifierView;
use crate::error::{Error, Result};
use crate::eval::ConfusionMatrix;

/// Features with the largest positive one-vs-rest weight for a class.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub label: String,
    pub entries: Vec<(String, f64)>,
}

/// Top `k` positively weighted features of `label`'s weight vector (bias
/// excluded). Equal weights are ordered by feature string.
pub fn top_features(view: &ClassifierView, label: &str, k: usize) -> Result<FeatureRanking> {
    let tfidf = view
        .tfidf
        .as_ref()
        .ok_or_else(|| Error::NoVocabulary(view.name()))?;
    let row = view
        .model
        .classes()
        .iter()
        .position(|c| c == label)
        .ok_or_else(|| Error::UnknownLabel(label.to_owned()))?;
    let weights = &view.model.weights()[row][..view.model.dim()];
    let vocab = tfidf.vocab();
    let mut positive: Vec<(usize, f64)> = weights
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, w)| w > 0.0)
        .collect();
    positive.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    positive.truncate(k);
    Ok(FeatureRanking {
        label: label.to_owned(),
        entries: positive
            .into_iter()
            .map(|(i, w)| {
                (
                    vocab
                        .feature(i)
                        .expect("weight row matches vocabulary")
                        .to_owned(),
                    w,
                )
            })
            .collect(),
    })
}

/// Rankings as `label<TAB>rank<TAB>feature<TAB>weight` lines, ranks from 1.
/// Tabs and newlines inside features are escaped as `\t` and `\n`.
pub fn rankings_tsv(rankings: &[FeatureRanking]) -> String {
    let mut out = String::from("label\trank\tfeature\tweight\n");
    for r in rankings {
        for (rank, (feature, weight)) in r.entries.iter().enumerate() {
            let feature = feature
                .replace('\\', "\\\\")
                .replace('\t', "\\t")
                .replace('\n', "\\n");
            writeln!(out, "{}\t{}\t{}\t{}", r.label, rank + 1, feature, weight).unwrap();
        }
    }
    out
}

/// Right-aligned grid: gold labels down the left, predictions across the top.
pub fn render_confusion(m: &ConfusionMatrix) -> String {
    let labels = m.labels();
    let stub = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0);
    let width = labels
        .iter()
        .map(|l| l.chars().count())
        .chain(m.counts().iter().flatten().map(|c| c.to_string().len()))
        .max()
        .unwrap_or(1);
    let mut out = String::new();
    write!(out, "{:stub$}", "").unwrap();
    for l in labels {
        write!(out, "  {l:>width$}").unwrap();
    }
    out.push('\n');
    for (l, row) in labels.iter().zip(m.counts()) {
        write!(out, "{l:<stub$}").unwrap();
        for c in row {
            write!(out, "  {c:>width$}").unwrap();
        }
        out.push('\n');
    }
    out
}
