use nlid_core::corpus::write_corpus;
use nlid_core::synthetic::{planted_corpus, windowed_corpus, PlantedConfig, WindowedConfig};
use nlid_core::*;

fn specs(list: &[&str]) -> Vec<FeatureSpec> {
    list.iter().map(|s| s.parse().unwrap()).collect()
}

fn small() -> Corpus {
    planted_corpus(&PlantedConfig {
        labels: ["ARA", "HIN", "TEL", "TUR"].map(String::from).to_vec(),
        per_class: 15,
        // short texts: with long ones and few documents the SVM can fit
        // each training essay by its unique grams instead of the marker
        essay_words: 8,
        transcript_words: 6,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn held_out_fold_is_classified_by_the_fused_ensemble() {
    let corpus = small();
    let folds = stratified_folds(&corpus, 5, 0).unwrap();
    let (train, dev) = split(&corpus, &folds, 0).unwrap();
    let inner = stratified_folds(&train, 4, 0).unwrap();
    let built = build_ensemble(
        &train,
        &specs(&[
            "char1:transcript",
            "char8:essay",
            "char8:transcript",
            "word2:essay",
        ]),
        true,
        &inner,
        &default_c_grid(),
        DEFAULT_THRESHOLD,
        &SolverOptions::default(),
    )
    .unwrap();
    let names: Vec<String> = built.model.views().iter().map(|v| v.name()).collect();
    assert_eq!(names, ["char8:essay", "char8:transcript", "dense:ivector"]);
    assert_eq!(built.candidates.len(), 5);

    let gold: Vec<&str> = dev.instances().iter().map(|i| i.label.as_str()).collect();
    let pred: Vec<String> = dev
        .instances()
        .iter()
        .map(|i| fuse_predict(&built.model, &i.views).unwrap().label)
        .collect();
    let r = score(&confusion(&gold, &pred, dev.labels()).unwrap());
    assert_eq!(r.accuracy, 1.0);
}

#[test]
fn saved_models_predict_identically_after_reload() {
    let corpus = small();
    let folds = stratified_folds(&corpus, 3, 1).unwrap();
    let model = build_ensemble(
        &corpus,
        &specs(&["char5:essay", "word1:transcript"]),
        true,
        &folds,
        &[0.1, 1.0, 10.0],
        0.5,
        &SolverOptions::default(),
    )
    .unwrap()
    .model;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.nlid");
    persist::save(&model, &path).unwrap();
    let back = persist::load(&path).unwrap();
    assert_eq!(back, model);
    for inst in corpus.instances() {
        assert_eq!(
            fuse_predict(&back, &inst.views).unwrap(),
            fuse_predict(&model, &inst.views).unwrap()
        );
    }

    let mut no_ivector = corpus.instances()[0].views.clone();
    no_ivector.ivector = None;
    assert!(matches!(
        fuse_predict(&model, &no_ivector),
        Err(Error::MissingView(_))
    ));
}

#[test]
fn corpus_files_round_trip_through_disk() {
    let corpus = windowed_corpus(&WindowedConfig {
        per_class: 3,
        ..Default::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_corpus(&corpus, dir.path(), "win").unwrap();
    assert_eq!(paths.load().unwrap(), corpus);
}

#[test]
fn single_token_documents_drop_word_bigrams_instead_of_failing() {
    let corpus = windowed_corpus(&WindowedConfig {
        labels: ["A", "B", "C"].map(String::from).to_vec(),
        per_class: 10,
        ivector_dim: None,
        ..Default::default()
    })
    .unwrap();
    let folds = stratified_folds(&corpus, 5, 0).unwrap();
    let built = build_ensemble(
        &corpus,
        &specs(&["char7:essay", "word2:essay"]),
        false,
        &folds,
        &default_c_grid(),
        DEFAULT_THRESHOLD,
        &SolverOptions::default(),
    )
    .unwrap();
    let word2 = &built.candidates[1];
    assert_eq!((word2.cv_accuracy, word2.best_c, word2.kept), (0.0, None, false));
    assert!(built.candidates[0].kept);
}
