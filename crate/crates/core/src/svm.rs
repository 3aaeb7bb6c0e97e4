//! L2-regularised squared-hinge linear SVMs trained by dual coordinate
//! descent, with one-vs-rest multiclass prediction and C-grid
//! cross-validation.
//!
//! The primal problem is
//!
//! ```text
//! min_w  ½‖w‖² + C Σᵢ max(0, 1 − yᵢ⟨w, x̃ᵢ⟩)²
//! ```
//!
//! where `x̃ᵢ` is `xᵢ` augmented with a constant 1 (the bias is regularised
//! like any other weight). Its dual is
//!
//! ```text
//! max_{α ≥ 0}  Σᵢ αᵢ − ½‖Σᵢ αᵢ yᵢ x̃ᵢ‖² − (1 / 4C) Σᵢ αᵢ²
//! ```
//!
//! and the solver sweeps the coordinates `αᵢ` in a seeded random order,
//! minimising exactly along each one.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the largest projected-gradient violation in an epoch is at most this.
    pub tol: f64,
    /// Maximum number of passes over the data.
    pub max_iter: usize,
    /// Seeds the coordinate order.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-3,
            max_iter: 1000,
            seed: 0,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        Ok(())
    }
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "C must be positive and finite, got {c}"
        )))
    }
}

/// A two-class training set with labels in {−1, +1}.
#[derive(Debug, Clone)]
pub struct BinaryProblem<'a> {
    x: &'a [SparseVector],
    y: Vec<f64>,
    dim: usize,
    c: f64,
}

impl<'a> BinaryProblem<'a> {
    pub fn new(x: &'a [SparseVector], positive: &[bool], dim: usize, c: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyProblem);
        }
        if x.len() != positive.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: positive.len(),
            });
        }
        check_c(c)?;
        if let Some(v) = x.iter().find(|v| v.min_dim() > dim) {
            return Err(Error::InvalidArgument(format!(
                "feature index {} out of range for dimension {dim}",
                v.min_dim() - 1
            )));
        }
        let n_pos = positive.iter().filter(|&&p| p).count();
        if n_pos == 0 || n_pos == positive.len() {
            return Err(Error::DegenerateProblem);
        }
        let y = positive.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
        Ok(BinaryProblem { x, y, dim, c })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn x(&self) -> &[SparseVector] {
        self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// `⟨w, x̃ᵢ⟩` with the bias stored in `w[dim]`.
    #[inline]
    pub fn decision(&self, w: &[f64], i: usize) -> f64 {
        self.x[i].dot(&w[..self.dim]) + w[self.dim]
    }

    pub fn primal_objective(&self, w: &[f64]) -> f64 {
        let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        let loss: f64 = (0..self.len())
            .map(|i| {
                let slack = (1.0 - self.y[i] * self.decision(w, i)).max(0.0);
                slack * slack
            })
            .sum();
        reg + self.c * loss
    }

    /// Primal weights `Σᵢ αᵢ yᵢ x̃ᵢ` for a dual point.
    pub fn weights_from_dual(&self, alpha: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.dim + 1];
        for (i, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                self.x[i].axpy(a * self.y[i], &mut w[..self.dim]);
                w[self.dim] += a * self.y[i];
            }
        }
        w
    }

    pub fn dual_objective(&self, alpha: &[f64]) -> f64 {
        let w = self.weights_from_dual(alpha);
        let sum: f64 = alpha.iter().sum();
        let sq: f64 = alpha.iter().map(|a| a * a).sum();
        sum - 0.5 * w.iter().map(|v| v * v).sum::<f64>() - sq / (4.0 * self.c)
    }
}

#[derive(Debug, Clone)]
pub struct BinaryFit {
    /// Length `dim + 1`; the last slot is the bias.
    pub weights: Vec<f64>,
    pub alpha: Vec<f64>,
    pub epochs: usize,
    pub max_violation: f64,
    pub converged: bool,
    /// Dual objective after every epoch.
    pub dual_objectives: Vec<f64>,
}

/// Dual coordinate descent for one binary problem.
pub fn train_binary(p: &BinaryProblem<'_>, opts: &SolverOptions) -> Result<BinaryFit> {
    opts.validate()?;
    let n = p.len();
    let dim = p.dim;
    let diag = 1.0 / (2.0 * p.c);
    let qbar: Vec<f64> = p.x.iter().map(|v| v.norm_sq() + 1.0 + diag).collect();

    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // Running pieces of the dual objective, updated in O(1) per step.
    let mut w_sq = 0.0;
    let mut alpha_sum = 0.0;
    let mut alpha_sq = 0.0;
    let mut trace = Vec::new();

    let mut epochs = 0;
    let mut max_violation = f64::INFINITY;
    let mut converged = false;
    while epochs < opts.max_iter {
        order.shuffle(&mut rng);
        max_violation = 0.0f64;
        for &i in &order {
            let yi = p.y[i];
            let wx = p.x[i].dot(&w[..dim]) + w[dim];
            let g = yi * wx - 1.0 + alpha[i] * diag;
            let pg = if alpha[i] == 0.0 { g.min(0.0) } else { g };
            max_violation = max_violation.max(pg.abs());
            if pg != 0.0 {
                let old = alpha[i];
                let new = (old - g / qbar[i]).max(0.0);
                let delta = new - old;
                if delta != 0.0 {
                    alpha[i] = new;
                    let step = delta * yi;
                    p.x[i].axpy(step, &mut w[..dim]);
                    w[dim] += step;
                    w_sq += 2.0 * step * wx + step * step * (qbar[i] - diag);
                    alpha_sum += delta;
                    alpha_sq += new * new - old * old;
                }
            }
        }
        epochs += 1;
        let dual = alpha_sum - 0.5 * w_sq - alpha_sq * diag / 2.0;
        if let Some(&prev) = trace.last() {
            debug_assert!(
                dual >= prev - 1e-9 * (1.0 + f64::abs(prev)),
                "dual objective decreased: {prev} -> {dual}"
            );
        }
        trace.push(dual);
        if max_violation <= opts.tol {
            converged = true;
            break;
        }
    }

    Ok(BinaryFit {
        weights: w,
        alpha,
        epochs,
        max_violation,
        converged,
        dual_objectives: trace,
    })
}

/// One-vs-rest linear model over sorted class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    classes: Vec<String>,
    /// One row of length `dim + 1` per class; last entry is the bias.
    weights: Vec<Vec<f64>>,
    dim: usize,
    c: f64,
    opts: SolverOptions,
}

impl LinearModel {
    pub fn from_parts(
        classes: Vec<String>,
        weights: Vec<Vec<f64>>,
        dim: usize,
        c: f64,
        opts: SolverOptions,
    ) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::TooFewLabels(classes.len()));
        }
        if classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "classes must be sorted and distinct".into(),
            ));
        }
        if weights.len() != classes.len() {
            return Err(Error::LengthMismatch {
                left: classes.len(),
                right: weights.len(),
            });
        }
        if weights.iter().any(|r| r.len() != dim + 1) {
            return Err(Error::InvalidArgument("weight row length must be dim + 1".into()));
        }
        if weights.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature(0));
        }
        check_c(c)?;
        Ok(LinearModel {
            classes,
            weights,
            dim,
            c,
            opts,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn solver_options(&self) -> &SolverOptions {
        &self.opts
    }

    /// Per-class decision values `⟨w_c, x̃⟩`.
    pub fn decision(&self, x: &SparseVector) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| x.dot(&w[..self.dim]) + w[self.dim])
            .collect()
    }

    /// Index of the winning class plus all margins. Ties go to the earliest
    /// (lexicographically smallest) class.
    pub fn predict_index(&self, x: &SparseVector) -> (usize, Vec<f64>) {
        let margins = self.decision(x);
        (argmax(&margins), margins)
    }

    pub fn scaled(&self, factor: f64) -> LinearModel {
        let mut m = self.clone();
        for v in m.weights.iter_mut().flatten() {
            *v *= factor;
        }
        m
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Predicted label and per-class margins.
pub fn predict(model: &LinearModel, x: &SparseVector) -> (String, Vec<f64>) {
    let (i, margins) = model.predict_index(x);
    (model.classes[i].clone(), margins)
}

/// Trains one binary separator per class (that class +1, the rest −1).
/// `y[i]` indexes into `classes`, which is sorted before training.
pub fn train_ovr(
    x: &[SparseVector],
    y: &[usize],
    classes: &[String],
    dim: usize,
    c: f64,
    opts: &SolverOptions,
) -> Result<LinearModel> {
    if classes.len() < 2 {
        return Err(Error::TooFewLabels(classes.len()));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= classes.len()) {
        return Err(Error::InvalidArgument(format!("label index {bad} out of range")));
    }
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by(|&a, &b| classes[a].cmp(&classes[b]));
    if order.windows(2).any(|w| classes[w[0]] == classes[w[1]]) {
        return Err(Error::InvalidArgument("duplicate class label".into()));
    }
    let weights = order
        .par_iter()
        .map(|&class| {
            let positive: Vec<bool> = y.iter().map(|&l| l == class).collect();
            let problem = BinaryProblem::new(x, &positive, dim, c)?;
            Ok(train_binary(&problem, opts)?.weights)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearModel {
        classes: order.iter().map(|&i| classes[i].clone()).collect(),
        weights,
        dim,
        c,
        opts: *opts,
    })
}

/// `{1e-5, 1e-4, ..., 1e5}`.
pub fn default_c_grid() -> Vec<f64> {
    (-5..=5)
        .map(|e| format!("1e{e}").parse().expect("valid literal"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub grid: Vec<f64>,
    pub mean_accuracy: Vec<f64>,
    pub best_c: f64,
}

impl CvResult {
    /// Picks the C with the highest mean accuracy, preferring smaller C on ties.
    pub fn from_scores(grid: Vec<f64>, mean_accuracy: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != mean_accuracy.len() {
            return Err(Error::InvalidArgument(
                "grid and scores must be nonempty and aligned".into(),
            ));
        }
        let mut best = 0;
        for i in 1..grid.len() {
            let (a, b) = (mean_accuracy[i], mean_accuracy[best]);
            if a > b || (a == b && grid[i] < grid[best]) {
                best = i;
            }
        }
        let best_c = grid[best];
        Ok(CvResult {
            grid,
            mean_accuracy,
            best_c,
        })
    }

    pub fn best_accuracy(&self) -> f64 {
        self.grid
            .iter()
            .position(|&c| c == self.best_c)
            .map_or(0.0, |i| self.mean_accuracy[i])
    }
}

/// Training and held-out data for one cross-validation fold.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub train_x: Vec<SparseVector>,
    pub train_y: Vec<usize>,
    pub dev_x: Vec<SparseVector>,
    pub dev_y: Vec<usize>,
    pub dim: usize,
}

pub fn accuracy(model: &LinearModel, x: &[SparseVector], y: &[usize]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    // Model classes are sorted; callers index `y` against the same sorted list.
    let correct = x
        .iter()
        .zip(y)
        .filter(|(v, &l)| model.predict_index(v).0 == l)
        .count();
    correct as f64 / x.len() as f64
}

/// Mean held-out accuracy per C. `make_fold(f)` builds fold `f`'s data;
/// it is called once per fold and reused across the grid. `classes` must be
/// sorted.
pub fn cross_validate<F>(
    k: usize,
    classes: &[String],
    grid: &[f64],
    opts: &SolverOptions,
    make_fold: F,
) -> Result<CvResult>
where
    F: Fn(usize) -> Result<FoldData> + Sync,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty C grid".into()));
    }
    for &c in grid {
        check_c(c)?;
    }
    if classes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "classes must be sorted and distinct".into(),
        ));
    }
    let per_fold = (0..k)
        .into_par_iter()
        .map(|f| {
            let fold = make_fold(f)?;
            grid.iter()
                .map(|&c| {
                    let m = train_ovr(&fold.train_x, &fold.train_y, classes, fold.dim, c, opts)?;
                    Ok(accuracy(&m, &fold.dev_x, &fold.dev_y))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = (0..grid.len())
        .map(|g| per_fold.iter().map(|accs| accs[g]).sum::<f64>() / k as f64)
        .collect();
    CvResult::from_scores(grid.to_vec(), mean)
}

/// Grid search over fixed feature vectors; `fold_of[i]` is instance `i`'s fold.
pub fn grid_search_c(
    x: &[SparseVector],
    y: &[usize],
    classes: &[String],
    fold_of: &[usize],
    k: usize,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<CvResult> {
    if x.len() != y.len() || x.len() != fold_of.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: fold_of.len(),
        });
    }
    if let Some(&f) = fold_of.iter().find(|&&f| f >= k) {
        return Err(Error::FoldOutOfRange { index: f, k });
    }
    let dim = x.iter().map(SparseVector::min_dim).max().unwrap_or(0);
    cross_validate(k, classes, grid, opts, |f| {
        let mut fold = FoldData {
            train_x: Vec::new(),
            train_y: Vec::new(),
            dev_x: Vec::new(),
            dev_y: Vec::new(),
            dim,
        };
        for i in 0..x.len() {
            if fold_of[i] == f {
                fold.dev_x.push(x[i].clone());
                fold.dev_y.push(y[i]);
            } else {
                fold.train_x.push(x[i].clone());
                fold.train_y.push(y[i]);
            }
        }
        Ok(fold)
    })
}
