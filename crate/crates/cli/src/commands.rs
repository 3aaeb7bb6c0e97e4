use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nlid_core::eval::{mcnemar_with, McNemarVariant};
use nlid_core::report::rankings_tsv;
use nlid_core::{
    build_ensemble, confusion, fuse_predict, load_corpus, load_documents, persist, render_confusion, score,
    stratified_folds, top_features, Corpus, EnsembleModel, Error, FeatureSpec, FusedPrediction, Result,
    Views,
};
use rayon::prelude::*;

use crate::config::{parse_specs, FileConfig, Overrides, RefitOn, RunConfig, SplitFiles};
use crate::io::{align, emit, read_labels, write_atomic};
use crate::{CompareArgs, EvaluateArgs, PredictArgs, ReportArgs, TrainArgs};

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let Some(n) = jobs else { return f() };
    if n == 0 {
        return Err(Error::InvalidArgument("jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {n} worker threads: {e}")))?;
    pool.install(f)
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("missing {what}")))
}

fn load_split(files: &SplitFiles, split: &str) -> Result<Corpus> {
    let flag = |f: &str| {
        if split == "train" {
            format!("--{f}")
        } else {
            format!("--{split}-{f}")
        }
    };
    load_corpus(
        required(&files.essays, &flag("essays"))?,
        required(&files.transcripts, &flag("transcripts"))?,
        files.ivectors.as_deref(),
        required(&files.labels, &flag("labels"))?,
    )
}

fn predict_all(model: &EnsembleModel, views: Vec<&Views>) -> Result<Vec<FusedPrediction>> {
    views.into_par_iter().map(|v| fuse_predict(model, v)).collect()
}

pub fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::from_file(FileConfig::load_opt(a.config.as_deref())?)?;
    cfg.train.overlay(SplitFiles {
        essays: a.essays,
        transcripts: a.transcripts,
        ivectors: a.ivectors,
        labels: a.labels,
    });
    cfg.dev.overlay(SplitFiles {
        essays: a.dev_essays,
        transcripts: a.dev_transcripts,
        ivectors: a.dev_ivectors,
        labels: a.dev_labels,
    });
    if let Some(s) = &a.specs {
        cfg.specs = parse_specs(s)?;
    }
    cfg.apply(Overrides {
        threshold: a.threshold,
        c_grid: a.c_grid,
        folds: a.folds,
        seed: a.seed,
        with_ivectors: a.with_ivectors,
        refit_on: a.refit_on,
        tol: a.tol,
        max_iter: a.max_iter,
        jobs: a.jobs,
        model: a.model,
        log: a.log,
    });
    cfg.validate()?;
    with_jobs(cfg.jobs, || run_train(&cfg))
}

fn run_train(cfg: &RunConfig) -> Result<()> {
    let model_path = required(&cfg.model, "--model")?;
    let train = load_split(&cfg.train, "train")?;
    let dev = if cfg.dev.is_empty() {
        None
    } else {
        Some(load_split(&cfg.dev, "dev")?)
    };
    let corpus = match (cfg.refit_on, &dev) {
        (RefitOn::Train, _) => train,
        (RefitOn::TrainDev, Some(dev)) => train.concat(dev)?,
        (RefitOn::TrainDev, None) => {
            return Err(Error::InvalidArgument(
                "--refit-on train+dev needs the dev files".into(),
            ))
        }
    };
    let folds = stratified_folds(&corpus, cfg.folds, cfg.seed)?;
    let trained = build_ensemble(
        &corpus,
        &cfg.specs,
        cfg.with_ivectors,
        &folds,
        &cfg.c_grid,
        cfg.threshold,
        &cfg.solver,
    )?;

    let mut log = String::from("spec\tcv_accuracy\tbest_c\tstatus\n");
    for c in &trained.candidates {
        let best_c = c.best_c.map_or("-".to_owned(), |v| v.to_string());
        let status = if c.kept { "kept" } else { "dropped" };
        writeln!(log, "{}\t{:.6}\t{best_c}\t{status}", c.spec, c.cv_accuracy).unwrap();
    }
    eprint!("{log}");
    if let Some(p) = &cfg.log {
        write_atomic(p, log.as_bytes())?;
    }
    let model = trained.model;
    eprintln!(
        "{} of {} views kept; {} instances, {} labels",
        model.views().len(),
        trained.candidates.len(),
        corpus.len(),
        model.labels().len()
    );
    if let (RefitOn::Train, Some(dev)) = (cfg.refit_on, &dev) {
        let preds = predict_all(&model, dev.instances().iter().map(|i| &i.views).collect())?;
        let correct = preds
            .iter()
            .zip(dev.instances())
            .filter(|(p, i)| p.label == i.label)
            .count();
        eprintln!(
            "dev accuracy {:.4} ({correct}/{})",
            correct as f64 / dev.len() as f64,
            dev.len()
        );
    }
    write_atomic(model_path, &persist::to_bytes(&model))
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let file = FileConfig::load_opt(a.config.as_deref())?;
    let mut inputs = file.test;
    inputs.overlay(SplitFiles {
        essays: a.essays,
        transcripts: a.transcripts,
        ivectors: a.ivectors,
        labels: None,
    });
    let model_path = a.model.or(file.model);
    let out = a.out.or(file.predictions);
    let jobs = a.jobs.or(file.jobs);

    let model = persist::load(required(&model_path, "--model")?)?;
    let docs = load_documents(
        required(&inputs.essays, "--essays")?,
        required(&inputs.transcripts, "--transcripts")?,
        inputs.ivectors.as_deref(),
    )?;
    let preds = with_jobs(jobs, || {
        predict_all(&model, docs.iter().map(|d| &d.views).collect())
    })?;

    let mut text = String::from("id\tlabel");
    for v in model.views() {
        write!(text, "\t{}", v.name()).unwrap();
    }
    text.push('\n');
    for (d, p) in docs.iter().zip(&preds) {
        write!(text, "{}\t{}", d.id, p.label).unwrap();
        for l in &p.per_view {
            write!(text, "\t{l}").unwrap();
        }
        text.push('\n');
    }
    emit(out.as_deref(), &text)
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let gold = read_labels(&a.gold)?;
    let pred = align(&gold, read_labels(&a.predictions)?, "predictions")?;
    let gold: Vec<String> = gold.into_iter().map(|(_, l)| l).collect();
    let labels: Vec<String> = gold
        .iter()
        .chain(&pred)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let m = confusion(&gold, &pred, &labels)?;
    let r = score(&m);

    let mut human = String::new();
    writeln!(human, "instances  {}", m.total()).unwrap();
    writeln!(human, "accuracy   {:.4}", r.accuracy).unwrap();
    writeln!(human, "macro-F1   {:.4}\n", r.macro_f1).unwrap();
    let w = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(5);
    writeln!(human, "{:<w$}  precision  recall      f1  support", "label").unwrap();
    for c in &r.per_class {
        writeln!(
            human,
            "{:<w$}  {:>9.4}  {:>6.4}  {:>6.4}  {:>7}",
            c.label, c.precision, c.recall, c.f1, c.support
        )
        .unwrap();
    }
    human.push('\n');
    human.push_str(&render_confusion(&m));
    print!("{human}");

    if let Some(path) = &a.report {
        let mut out = String::new();
        writeln!(out, "instances\t{}", m.total()).unwrap();
        writeln!(out, "accuracy\t{}", r.accuracy).unwrap();
        writeln!(out, "macro_f1\t{}", r.macro_f1).unwrap();
        for c in &r.per_class {
            writeln!(out, "precision.{}\t{}", c.label, c.precision).unwrap();
            writeln!(out, "recall.{}\t{}", c.label, c.recall).unwrap();
            writeln!(out, "f1.{}\t{}", c.label, c.f1).unwrap();
            writeln!(out, "support.{}\t{}", c.label, c.support).unwrap();
        }
        for (g, row) in labels.iter().zip(m.counts()) {
            for (p, n) in labels.iter().zip(row) {
                writeln!(out, "confusion.{g}.{p}\t{n}").unwrap();
            }
        }
        write_atomic(path, out.as_bytes())?;
    }
    Ok(())
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let gold = read_labels(&a.gold)?;
    let pa = align(&gold, read_labels(&a.a)?, "predictions A")?;
    let pb = align(&gold, read_labels(&a.b)?, "predictions B")?;
    let gold: Vec<String> = gold.into_iter().map(|(_, l)| l).collect();
    let variant = if a.exact {
        McNemarVariant::ExactBinomial
    } else {
        McNemarVariant::ContinuityCorrected
    };
    let r = mcnemar_with(&gold, &pa, &pb, variant)?;
    let acc = |p: &[String]| p.iter().zip(&gold).filter(|(x, g)| x == g).count() as f64 / gold.len() as f64;
    let mut out = String::new();
    writeln!(out, "instances\t{}", gold.len()).unwrap();
    writeln!(out, "accuracy_a\t{}", acc(&pa)).unwrap();
    writeln!(out, "accuracy_b\t{}", acc(&pb)).unwrap();
    writeln!(out, "b\t{}", r.b).unwrap();
    writeln!(out, "c\t{}", r.c).unwrap();
    writeln!(out, "statistic\t{}", r.statistic).unwrap();
    let name = if a.exact { "exact" } else { "chi2" };
    writeln!(out, "test\t{name}").unwrap();
    writeln!(out, "p_value\t{}", r.p_value).unwrap();
    print!("{out}");
    Ok(())
}

pub fn report_features(a: ReportArgs) -> Result<()> {
    let model = persist::load(&a.model)?;
    let spec: FeatureSpec = a.view.parse()?;
    let view = model
        .view(&spec)
        .ok_or_else(|| Error::MissingView(format!("model has no view `{spec}`")))?;
    let labels: Vec<String> = match a.label {
        Some(l) => vec![l],
        None => model.labels().to_vec(),
    };
    let rankings = labels
        .iter()
        .map(|l| top_features(view, l, a.k))
        .collect::<Result<Vec<_>>>()?;
    emit(a.out.as_deref(), &rankings_tsv(&rankings))
}
