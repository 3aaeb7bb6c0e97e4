//! Run configuration: built-in defaults, then an optional TOML file, then
//! command-line flags, each layer overriding the one before.

use std::fs;
use std::path::{Path, PathBuf};

use nlid_core::{default_c_grid, Error, FeatureSpec, Result, SolverOptions, DEFAULT_THRESHOLD};
use serde::Deserialize;

/// Which instances the final per-view classifiers are fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
pub enum RefitOn {
    /// Training split only; a dev split, if given, is scored after training.
    #[default]
    #[serde(rename = "train")]
    #[value(name = "train")]
    Train,
    /// Training and dev splits merged before cross-validation.
    #[serde(rename = "train+dev")]
    #[value(name = "train+dev")]
    TrainDev,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFiles {
    pub essays: Option<PathBuf>,
    pub transcripts: Option<PathBuf>,
    pub ivectors: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

impl SplitFiles {
    fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.essays,
            &mut self.transcripts,
            &mut self.ivectors,
            &mut self.labels,
        ]
        .into_iter()
        .flatten()
        {
            *p = base.join(&*p);
        }
    }

    /// Fields set in `over` replace ours.
    pub fn overlay(&mut self, over: SplitFiles) {
        let SplitFiles {
            essays,
            transcripts,
            ivectors,
            labels,
        } = over;
        self.essays = essays.or(self.essays.take());
        self.transcripts = transcripts.or(self.transcripts.take());
        self.ivectors = ivectors.or(self.ivectors.take());
        self.labels = labels.or(self.labels.take());
    }

    pub fn is_empty(&self) -> bool {
        *self == SplitFiles::default()
    }
}

/// Everything a config file may set. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub train: SplitFiles,
    #[serde(default)]
    pub dev: SplitFiles,
    #[serde(default)]
    pub test: SplitFiles,
    pub specs: Option<Vec<String>>,
    pub threshold: Option<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub with_ivectors: Option<bool>,
    pub refit_on: Option<RefitOn>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub jobs: Option<usize>,
    pub model: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
}

impl FileConfig {
    /// Reads a TOML file; relative paths inside it are taken relative to the
    /// file's own directory.
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("config {}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.train.rebase(base);
        cfg.dev.rebase(base);
        cfg.test.rebase(base);
        for p in [&mut cfg.model, &mut cfg.log, &mut cfg.predictions]
            .into_iter()
            .flatten()
        {
            *p = base.join(&*p);
        }
        Ok(cfg)
    }

    pub fn load_opt(path: Option<&Path>) -> Result<FileConfig> {
        path.map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
    }
}

/// Fully resolved training configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: SplitFiles,
    pub dev: SplitFiles,
    pub specs: Vec<FeatureSpec>,
    pub threshold: f64,
    pub c_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub with_ivectors: bool,
    pub refit_on: RefitOn,
    pub solver: SolverOptions,
    pub jobs: Option<usize>,
    pub model: Option<PathBuf>,
    pub log: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: SplitFiles::default(),
            dev: SplitFiles::default(),
            specs: FeatureSpec::default_set(),
            threshold: DEFAULT_THRESHOLD,
            c_grid: default_c_grid(),
            folds: 5,
            seed: 0,
            with_ivectors: false,
            refit_on: RefitOn::Train,
            solver: SolverOptions::default(),
            jobs: None,
            model: None,
            log: None,
        }
    }
}

pub fn parse_specs(items: &[String]) -> Result<Vec<FeatureSpec>> {
    let mut specs = Vec::new();
    for item in items {
        if item == "default" {
            specs.extend(FeatureSpec::default_set());
        } else {
            specs.push(item.parse()?);
        }
    }
    if specs.is_empty() {
        return Err(Error::InvalidArgument("empty spec list".into()));
    }
    Ok(specs)
}

impl RunConfig {
    /// Applies a config file on top of the defaults. Flags are applied by the
    /// caller afterwards through [`RunConfig::apply`].
    pub fn from_file(file: FileConfig) -> Result<RunConfig> {
        let mut cfg = RunConfig {
            train: file.train,
            dev: file.dev,
            ..RunConfig::default()
        };
        if let Some(s) = file.specs {
            cfg.specs = parse_specs(&s)?;
        }
        cfg.apply(Overrides {
            threshold: file.threshold,
            c_grid: file.c_grid,
            folds: file.folds,
            seed: file.seed,
            with_ivectors: file.with_ivectors,
            refit_on: file.refit_on,
            tol: file.tol,
            max_iter: file.max_iter,
            jobs: file.jobs,
            model: file.model,
            log: file.log,
        });
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(v) = o.threshold {
            self.threshold = v;
        }
        if let Some(v) = o.c_grid {
            self.c_grid = v;
        }
        if let Some(v) = o.folds {
            self.folds = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.with_ivectors {
            self.with_ivectors = v;
        }
        if let Some(v) = o.refit_on {
            self.refit_on = v;
        }
        if let Some(v) = o.tol {
            self.solver.tol = v;
        }
        if let Some(v) = o.max_iter {
            self.solver.max_iter = v;
        }
        self.jobs = o.jobs.or(self.jobs);
        self.model = o.model.or(self.model.take());
        self.log = o.log.or(self.log.take());
        self.solver.seed = self.seed;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !self.threshold.is_finite() {
            return bad("threshold must be finite");
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return bad("C grid must be a non-empty list of positive numbers");
        }
        if self.folds < 2 {
            return bad("need at least 2 folds");
        }
        if !(self.solver.tol.is_finite() && self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return bad("tol must be positive and max-iter at least 1");
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1");
        }
        Ok(())
    }
}

/// Scalar settings that both the file and the flags may carry.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub threshold: Option<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub with_ivectors: Option<bool>,
    pub refit_on: Option<RefitOn>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub jobs: Option<usize>,
    pub model: Option<PathBuf>,
    pub log: Option<PathBuf>,
}
