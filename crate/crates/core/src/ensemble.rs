//! Per-view classifiers, cross-validated view selection and plurality-vote
//! fusion.

use rayon::prelude::*;

use crate::corpus::{Corpus, FoldAssignment, Views};
use crate::error::{Error, Result};
use crate::features::{dense_to_vector, fit_tfidf, FeatureSpec, SparseVector, TermCounts, TfidfModel};
use crate::svm::{cross_validate, train_ovr, FoldData, LinearModel, SolverOptions};

/// Views whose cross-validated accuracy is not above this are dropped.
pub const DEFAULT_THRESHOLD: f64 = 0.8;

/// How fusion resolves a tie in the vote count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    /// Greatest summed decision value across views, then lexicographic label order.
    MarginSumThenLexicographic,
}

/// A trained classifier over one feature view.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierView {
    pub spec: FeatureSpec,
    /// Present exactly for n-gram views.
    pub tfidf: Option<TfidfModel>,
    pub model: LinearModel,
    pub cv_accuracy: f64,
    pub best_c: f64,
}

impl ClassifierView {
    pub fn name(&self) -> String {
        self.spec.to_string()
    }

    /// Feature vector for this view's input.
    pub fn vectorize(&self, views: &Views) -> Result<SparseVector> {
        match &self.tfidf {
            Some(tfidf) => {
                let counts = self.spec.extract(views).expect("n-gram spec");
                Ok(tfidf.transform(&counts))
            }
            None => {
                let v = views
                    .ivector
                    .as_ref()
                    .ok_or_else(|| Error::MissingView(format!("view `{}` needs an ivector", self.spec)))?;
                if v.len() != self.model.dim() {
                    return Err(Error::DimensionMismatch {
                        id: String::new(),
                        expected: self.model.dim(),
                        found: v.len(),
                    });
                }
                dense_to_vector(v)
            }
        }
    }

    /// Predicted class index and per-class margins.
    pub fn predict(&self, views: &Views) -> Result<(usize, Vec<f64>)> {
        Ok(self.model.predict_index(&self.vectorize(views)?))
    }
}

fn extract_all(corpus: &Corpus, spec: &FeatureSpec) -> Vec<TermCounts> {
    corpus
        .instances()
        .iter()
        .map(|i| spec.extract(&i.views).expect("n-gram spec"))
        .collect()
}

fn dense_all(corpus: &Corpus, spec: &FeatureSpec) -> Result<Vec<SparseVector>> {
    if corpus.ivector_dim().is_none() {
        return Err(Error::MissingView(format!(
            "view `{spec}` needs ivectors, corpus has none"
        )));
    }
    corpus
        .instances()
        .iter()
        .map(|i| dense_to_vector(i.views.ivector.as_deref().expect("corpus invariant")))
        .collect()
}

fn split_by_fold<T: Clone>(items: &[T], fold_of: &[usize], held_out: usize) -> (Vec<T>, Vec<T>) {
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for (item, &f) in items.iter().zip(fold_of) {
        if f == held_out {
            dev.push(item.clone());
        } else {
            train.push(item.clone());
        }
    }
    (train, dev)
}

/// Cross-validates C for one view, then fits the final classifier on the
/// whole corpus at the chosen C. N-gram views refit TF-IDF inside every fold
/// on the fold's training part only.
pub fn train_view(
    corpus: &Corpus,
    spec: &FeatureSpec,
    folds: &FoldAssignment,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<ClassifierView> {
    corpus.require_trainable()?;
    let fold_of = folds.indices(corpus)?;
    let classes = corpus.labels();
    let y = corpus.label_indices();
    let k = folds.k();

    if spec.is_dense() {
        let x = dense_all(corpus, spec)?;
        let dim = corpus.ivector_dim().expect("checked by dense_all");
        let cv = cross_validate(k, classes, grid, opts, |f| {
            let (train_x, dev_x) = split_by_fold(&x, &fold_of, f);
            let (train_y, dev_y) = split_by_fold(&y, &fold_of, f);
            Ok(FoldData {
                train_x,
                train_y,
                dev_x,
                dev_y,
                dim,
            })
        })?;
        let model = train_ovr(&x, &y, classes, dim, cv.best_c, opts)?;
        return Ok(ClassifierView {
            spec: *spec,
            tfidf: None,
            model,
            cv_accuracy: cv.best_accuracy(),
            best_c: cv.best_c,
        });
    }

    let counts = extract_all(corpus, spec);
    let cv = cross_validate(k, classes, grid, opts, |f| {
        let (train_docs, dev_docs) = split_by_fold(&counts, &fold_of, f);
        let (train_y, dev_y) = split_by_fold(&y, &fold_of, f);
        let tfidf = fit_tfidf(&train_docs)?;
        Ok(FoldData {
            train_x: train_docs.iter().map(|d| tfidf.transform(d)).collect(),
            dev_x: dev_docs.iter().map(|d| tfidf.transform(d)).collect(),
            train_y,
            dev_y,
            dim: tfidf.dim(),
        })
    })?;
    let tfidf = fit_tfidf(&counts)?;
    let x: Vec<SparseVector> = counts.iter().map(|d| tfidf.transform(d)).collect();
    drop(counts);
    let model = train_ovr(&x, &y, classes, tfidf.dim(), cv.best_c, opts)?;
    Ok(ClassifierView {
        spec: *spec,
        tfidf: Some(tfidf),
        model,
        cv_accuracy: cv.best_accuracy(),
        best_c: cv.best_c,
    })
}

fn passes(view_cv: f64, spec: &FeatureSpec, threshold: f64) -> bool {
    spec.is_dense() || view_cv > threshold
}

/// Keeps n-gram views strictly above `threshold` and every dense view.
pub fn select_views(views: Vec<ClassifierView>, threshold: f64) -> Result<Vec<ClassifierView>> {
    let kept: Vec<_> = views
        .into_iter()
        .filter(|v| passes(v.cv_accuracy, &v.spec, threshold))
        .collect();
    if kept.is_empty() {
        return Err(Error::NoViewsSelected { threshold });
    }
    Ok(kept)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    views: Vec<ClassifierView>,
    labels: Vec<String>,
    threshold: f64,
    tie_policy: TiePolicy,
}

impl EnsembleModel {
    pub fn new(
        views: Vec<ClassifierView>,
        labels: Vec<String>,
        threshold: f64,
        tie_policy: TiePolicy,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::NoViewsSelected { threshold });
        }
        if let Some(v) = views.iter().find(|v| v.model.classes() != labels.as_slice()) {
            return Err(Error::InvalidArgument(format!(
                "view `{}` was trained on a different label set",
                v.spec
            )));
        }
        if let Some(v) = views.iter().find(|v| v.tfidf.is_some() == v.spec.is_dense()) {
            return Err(Error::InvalidArgument(format!(
                "view `{}`: TF-IDF statistics must accompany exactly the n-gram views",
                v.spec
            )));
        }
        Ok(EnsembleModel {
            views,
            labels,
            threshold,
            tie_policy,
        })
    }

    pub fn views(&self) -> &[ClassifierView] {
        &self.views
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn tie_policy(&self) -> TiePolicy {
        self.tie_policy
    }

    pub fn view(&self, spec: &FeatureSpec) -> Option<&ClassifierView> {
        self.views.iter().find(|v| &v.spec == spec)
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateReport {
    pub spec: FeatureSpec,
    pub cv_accuracy: f64,
    /// `None` when the spec yields no features in some training fold; such a
    /// candidate counts as accuracy 0 and is dropped.
    pub best_c: Option<f64>,
    pub kept: bool,
}

#[derive(Debug, Clone)]
pub struct EnsembleTraining {
    pub model: EnsembleModel,
    pub candidates: Vec<CandidateReport>,
}

/// Trains every n-gram spec, keeps those above `threshold`, and (when
/// `with_ivectors`) appends the dense views, which bypass the filter.
pub fn build_ensemble(
    corpus: &Corpus,
    specs: &[FeatureSpec],
    with_ivectors: bool,
    folds: &FoldAssignment,
    grid: &[f64],
    threshold: f64,
    opts: &SolverOptions,
) -> Result<EnsembleTraining> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("no feature specs given".into()));
    }
    let ngram: Vec<&FeatureSpec> = specs.iter().filter(|s| !s.is_dense()).collect();
    let mut dense: Vec<FeatureSpec> = Vec::new();
    if with_ivectors {
        dense = specs.iter().filter(|s| s.is_dense()).copied().collect();
        if dense.is_empty() {
            dense.push(FeatureSpec::dense());
        }
    }

    let trained: Vec<(CandidateReport, Option<ClassifierView>)> = ngram
        .par_iter()
        .map(|spec| {
            let view = match train_view(corpus, spec, folds, grid, opts) {
                Err(Error::EmptyFeatureSpace) => {
                    let report = CandidateReport {
                        spec: **spec,
                        cv_accuracy: 0.0,
                        best_c: None,
                        kept: false,
                    };
                    return Ok((report, None));
                }
                other => other?,
            };
            let kept = passes(view.cv_accuracy, spec, threshold);
            let report = CandidateReport {
                spec: **spec,
                cv_accuracy: view.cv_accuracy,
                best_c: Some(view.best_c),
                kept,
            };
            Ok((report, kept.then_some(view)))
        })
        .collect::<Result<_>>()?;

    let mut candidates = Vec::new();
    let mut views = Vec::new();
    for (report, view) in trained {
        candidates.push(report);
        views.extend(view);
    }
    if views.is_empty() {
        return Err(Error::NoViewsSelected { threshold });
    }
    for spec in dense {
        let view = train_view(corpus, &spec, folds, grid, opts)?;
        candidates.push(CandidateReport {
            spec,
            cv_accuracy: view.cv_accuracy,
            best_c: Some(view.best_c),
            kept: true,
        });
        views.push(view);
    }
    let model = EnsembleModel::new(
        views,
        corpus.labels().to_vec(),
        threshold,
        TiePolicy::MarginSumThenLexicographic,
    )?;
    Ok(EnsembleTraining { model, candidates })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedPrediction {
    pub label: String,
    /// Each view's own prediction, in ensemble view order.
    pub per_view: Vec<String>,
    /// Votes per ensemble label.
    pub votes: Vec<usize>,
    /// Summed decision values per ensemble label.
    pub margin_sums: Vec<f64>,
}

/// Plurality vote over per-view predictions. Ties go to the label with the
/// largest summed margin, then to the lexicographically first label.
pub fn fuse_votes(labels: &[String], per_view: &[(usize, Vec<f64>)]) -> FusedPrediction {
    let n = labels.len();
    let mut votes = vec![0usize; n];
    let mut contributions: Vec<Vec<f64>> = vec![Vec::with_capacity(per_view.len()); n];
    for (label, margins) in per_view {
        votes[*label] += 1;
        for (l, &m) in margins.iter().enumerate() {
            contributions[l].push(m);
        }
    }
    // Sorting before summing makes the float sum independent of view order.
    let margin_sums: Vec<f64> = contributions
        .into_iter()
        .map(|mut c| {
            c.sort_by(f64::total_cmp);
            c.into_iter().sum()
        })
        .collect();
    let mut best = 0;
    for l in 1..n {
        let better =
            votes[l] > votes[best] || (votes[l] == votes[best] && margin_sums[l] > margin_sums[best]);
        if better {
            best = l;
        }
    }
    FusedPrediction {
        label: labels[best].clone(),
        per_view: per_view.iter().map(|(l, _)| labels[*l].clone()).collect(),
        votes,
        margin_sums,
    }
}

pub fn fuse_predict(ensemble: &EnsembleModel, views: &Views) -> Result<FusedPrediction> {
    let per_view = ensemble
        .views
        .iter()
        .map(|v| v.predict(views))
        .collect::<Result<Vec<_>>>()?;
    Ok(fuse_votes(&ensemble.labels, &per_view))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{stratified_folds, Instance};
    use crate::features::Modality;
    use proptest::prelude::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn one_hot(n: usize, l: usize, m: f64) -> (usize, Vec<f64>) {
        let mut v = vec![-1.0; n];
        v[l] = m;
        (l, v)
    }

    #[test]
    fn strict_majority() {
        let l = labels(&["FRE", "ITA"]);
        let f = fuse_votes(&l, &[one_hot(2, 1, 1.0), one_hot(2, 1, 0.2), one_hot(2, 0, 3.0)]);
        assert_eq!(f.label, "ITA");
        assert_eq!(f.votes, [1, 2]);
        assert_eq!(f.per_view, ["ITA", "ITA", "FRE"]);
    }

    #[test]
    fn tie_uses_margin_sums() {
        let l = labels(&["ARA", "TUR"]);
        let f = fuse_votes(&l, &[(0, vec![1.2, 0.1]), (1, vec![0.5, 0.8])]);
        assert!((f.margin_sums[0] - 1.7).abs() < 1e-12);
        assert!((f.margin_sums[1] - 0.9).abs() < 1e-12);
        assert_eq!(f.label, "ARA");
        let f = fuse_votes(&l, &[(0, vec![0.1, 0.5]), (1, vec![0.0, 0.9])]);
        assert_eq!(f.label, "TUR");
        let f = fuse_votes(&l, &[(0, vec![1.0, 0.0]), (1, vec![0.0, 1.0])]);
        assert_eq!(f.label, "ARA");
    }

    #[test]
    fn plurality_of_seven() {
        let l = labels(&["JPN", "KOR"]);
        let mut pv: Vec<_> = (0..4).map(|_| one_hot(2, 0, 0.1)).collect();
        pv.extend((0..3).map(|_| one_hot(2, 1, 5.0)));
        assert_eq!(fuse_votes(&l, &pv).label, "JPN");
    }

    fn cv(spec: FeatureSpec, acc: f64) -> ClassifierView {
        ClassifierView {
            spec,
            tfidf: None,
            model: LinearModel::from_parts(
                labels(&["A", "B"]),
                vec![vec![0.0], vec![0.0]],
                0,
                1.0,
                SolverOptions::default(),
            )
            .unwrap(),
            cv_accuracy: acc,
            best_c: 1.0,
        }
    }

    #[test]
    fn selection_is_strict() {
        let specs: Vec<FeatureSpec> = (6..9)
            .map(|n| FeatureSpec::char_ngram(n, Modality::Essay).unwrap())
            .collect();
        let views = vec![cv(specs[0], 0.85), cv(specs[1], 0.80), cv(specs[2], 0.75)];
        let kept = select_views(views, 0.8).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].spec, specs[0]);

        let views = vec![
            cv(specs[1], 0.5),
            cv(FeatureSpec::dense(), 0.2),
            cv(specs[0], 0.9),
        ];
        let kept: Vec<_> = select_views(views, 0.8).unwrap().iter().map(|v| v.spec).collect();
        assert_eq!(kept, [FeatureSpec::dense(), specs[0]]);

        assert!(matches!(
            select_views(vec![cv(specs[0], 0.1)], 0.8),
            Err(Error::NoViewsSelected { .. })
        ));
    }

    fn marker_corpus(with_ivectors: bool) -> Corpus {
        let markers = ["qzxwvk", "jpfmgh", "bdtlcy"];
        let filler = [
            "the", "a", "school", "students", "think", "because", "many", "people",
        ];
        let mut instances = Vec::new();
        for (c, marker) in markers.iter().enumerate() {
            for j in 0..10 {
                let words: Vec<&str> = (0..8)
                    .map(|t| filler[(j * 3 + t * 5 + c) % filler.len()])
                    .collect();
                let essay = format!("{} {marker} {}", words[..4].join(" "), words[4..].join(" "));
                instances.push(Instance {
                    id: format!("{c}-{j}"),
                    views: Views {
                        essay,
                        transcript: words.join(" "),
                        ivector: with_ivectors.then(|| vec![c as f64, 1.0 - c as f64 + j as f64 * 0.01]),
                    },
                    label: format!("L{c}"),
                });
            }
        }
        Corpus::new(instances).unwrap()
    }

    #[test]
    fn separable_char_view_and_determinism() {
        let corpus = marker_corpus(false);
        let folds = stratified_folds(&corpus, 5, 0).unwrap();
        let spec = FeatureSpec::char_ngram(7, Modality::Essay).unwrap();
        let grid = [0.1, 1.0, 10.0];
        let opts = SolverOptions::default();
        let a = train_view(&corpus, &spec, &folds, &grid, &opts).unwrap();
        assert!(a.cv_accuracy >= 0.95, "{}", a.cv_accuracy);
        let b = train_view(&corpus, &spec, &folds, &grid, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dense_view_needs_ivectors() {
        let corpus = marker_corpus(false);
        let folds = stratified_folds(&corpus, 5, 0).unwrap();
        assert!(matches!(
            train_view(
                &corpus,
                &FeatureSpec::dense(),
                &folds,
                &[1.0],
                &SolverOptions::default()
            ),
            Err(Error::MissingView(_))
        ));
    }

    #[test]
    fn single_view_ensemble_matches_its_classifier() {
        let corpus = marker_corpus(true);
        let folds = stratified_folds(&corpus, 5, 0).unwrap();
        let spec = FeatureSpec::char_ngram(5, Modality::Essay).unwrap();
        let t = build_ensemble(
            &corpus,
            &[spec],
            false,
            &folds,
            &[1.0],
            0.5,
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(t.model.views().len(), 1);
        let view = &t.model.views()[0];
        for inst in corpus.instances() {
            let (l, _) = view.predict(&inst.views).unwrap();
            assert_eq!(
                fuse_predict(&t.model, &inst.views).unwrap().label,
                corpus.labels()[l]
            );
        }
        let t2 = build_ensemble(
            &corpus,
            &[spec],
            true,
            &folds,
            &[1.0],
            0.5,
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(t2.model.views().len(), 2);
        assert!(t2.model.views()[1].spec.is_dense());
    }

    #[test]
    fn missing_modality_at_prediction() {
        let corpus = marker_corpus(true);
        let folds = stratified_folds(&corpus, 5, 0).unwrap();
        let t = build_ensemble(
            &corpus,
            &[FeatureSpec::char_ngram(3, Modality::Essay).unwrap()],
            true,
            &folds,
            &[1.0],
            0.0,
            &SolverOptions::default(),
        )
        .unwrap();
        let mut v = corpus.instances()[0].views.clone();
        v.ivector = None;
        assert!(matches!(fuse_predict(&t.model, &v), Err(Error::MissingView(_))));
    }

    proptest! {
        #[test]
        fn fusion_ignores_view_order(
            raw in proptest::collection::vec(
                (0usize..4, proptest::collection::vec(-3.0f64..3.0, 4)), 1..8),
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let l = labels(&["A", "B", "C", "D"]);
            let base = fuse_votes(&l, &raw);
            let mut shuffled = raw.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let other = fuse_votes(&l, &shuffled);
            prop_assert_eq!(&base.label, &other.label);
            prop_assert_eq!(&base.votes, &other.votes);
            prop_assert_eq!(&base.margin_sums, &other.margin_sums);
        }

        #[test]
        fn unanimous_views_win(label in 0usize..4, n in 1usize..8, m in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let l = labels(&["A", "B", "C", "D"]);
            let pv: Vec<_> = (0..n).map(|_| (label, m.clone())).collect();
            prop_assert_eq!(fuse_votes(&l, &pv).label, l[label].clone());
        }
    }
}
