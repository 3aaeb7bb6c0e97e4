//! Native language identification with an ensemble of linear SVMs.
//!
//! Each classifier reads one *view* of a test taker: character or word
//! n-grams of the essay or the spoken-response transcript (TF-IDF weighted),
//! or a dense acoustic vector. Views are trained independently with a
//! cross-validated regularisation constant, views whose cross-validated
//! accuracy does not clear a threshold are dropped, and the survivors vote.
//!
//! The pipeline, bottom up:
//!
//! - [`corpus`]: view files, validation, stratified folds.
//! - [`features`]: normalisation, n-grams, TF-IDF, [`SparseVector`].
//! - [`svm`]: dual coordinate descent for squared-hinge linear SVMs, one-vs-rest,
//!   C-grid cross-validation.
//! - [`ensemble`]: per-view training, selection, plurality fusion.
//! - [`eval`]: confusion matrices, accuracy and macro-F1, McNemar's test.
//! - [`report`]: most informative features, rendered confusion matrices.
//! - [`persist`]: the versioned single-file model format.

pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod persist;
pub mod report;
pub mod svm;
pub mod synthetic;

pub use corpus::{
    load_corpus, load_documents, split, stratified_folds, Corpus, Document, FoldAssignment, Instance, Views,
};
pub use ensemble::{
    build_ensemble, fuse_predict, select_views, train_view, ClassifierView, EnsembleModel, EnsembleTraining,
    FusedPrediction, TiePolicy, DEFAULT_THRESHOLD,
};
pub use error::{Error, ErrorKind, Result};
pub use eval::{confusion, mcnemar, random_baseline, score, ConfusionMatrix, EvalReport, McNemarResult};
pub use features::{FeatureKind, FeatureSpec, Modality, SparseVector, TfidfModel, Vocabulary};
pub use report::{render_confusion, top_features, FeatureRanking};
pub use svm::{default_c_grid, train_binary, train_ovr, BinaryProblem, CvResult, LinearModel, SolverOptions};
