//! Cross-validated choice of the penalties, for SMFR over a
//! `(lambda1, lambda2, lambda3)` grid and for the baselines over one lambda.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::altmin::SolverConfig;
use crate::error::{shape_err, Result, SmfrError};
use crate::factor_select::{fit_model, RankPolicy};
use crate::matrix::{dims, DenseMatrix};
use crate::model::{Penalties, PreprocessStats};
use crate::preprocess::center_and_normalize;
use crate::rng::rng_for;
use crate::simbench::baselines::Baseline;
use crate::simbench::metrics::prediction_mse;

/// Multipliers of `lambda_max` for `lambda1` and `lambda2` in the default grid.
pub const DEFAULT_SCALES: [f64; 6] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0];
pub const DEFAULT_LAMBDA3: [f64; 3] = [0.01, 0.1, 1.0];

/// Seeded partition of `0..n` into `k` folds with sizes differing by at
/// most one. Entry `i` is the fold of row `i`.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(SmfrError::InvalidFolds { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, 0));
    let mut folds = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        folds[row] = pos % k;
    }
    Ok(folds)
}

/// How validation rows are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Validation {
    KFold { k: usize },
    /// Rows `0..n_train` train, the rest validate.
    Holdout { n_train: usize },
}

impl Default for Validation {
    fn default() -> Self {
        Validation::KFold { k: 5 }
    }
}

/// Training/validation row sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validate: Vec<usize>,
}

/// A validation scheme resolved against a row count and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    pub validation: Validation,
    pub seed: u64,
    pub splits: Vec<Split>,
}

impl CvPlan {
    pub fn new(n: usize, validation: Validation, seed: u64) -> Result<Self> {
        let splits = match validation {
            Validation::KFold { k } => {
                let folds = kfold_split(n, k, seed)?;
                (0..k)
                    .map(|f| Split {
                        train: (0..n).filter(|&i| folds[i] != f).collect(),
                        validate: (0..n).filter(|&i| folds[i] == f).collect(),
                    })
                    .collect()
            }
            Validation::Holdout { n_train } => {
                if n_train == 0 || n_train >= n {
                    return Err(SmfrError::InvalidConfig(format!(
                        "holdout needs 0 < n_train < n, got n_train={n_train}, n={n}"
                    )));
                }
                vec![Split {
                    train: (0..n_train).collect(),
                    validate: (n_train..n).collect(),
                }]
            }
        };
        Ok(Self {
            validation,
            seed,
            splits,
        })
    }
}

/// Largest entry of `|Xn^T Yc|`: above it, a single-response lasso on the
/// preprocessed data is identically zero.
pub fn lambda_max(xn: ArrayView2<f64>, yc: ArrayView2<f64>) -> f64 {
    xn.t().dot(&yc).iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// `lambda1, lambda2 in DEFAULT_SCALES * lambda_max`, `lambda3 in DEFAULT_LAMBDA3`.
pub fn default_grid(xn: ArrayView2<f64>, yc: ArrayView2<f64>) -> Vec<Penalties> {
    grid_from_scales(lambda_max(xn, yc), &DEFAULT_SCALES, &DEFAULT_SCALES, &DEFAULT_LAMBDA3)
}

/// Cartesian grid with `lambda1 = s1 * scale`, `lambda2 = s2 * scale`, in
/// the order lambda1, then lambda2, then lambda3.
pub fn grid_from_scales(scale: f64, s1: &[f64], s2: &[f64], lambda3: &[f64]) -> Vec<Penalties> {
    let mut grid = Vec::with_capacity(s1.len() * s2.len() * lambda3.len());
    for &a in s1 {
        for &b in s2 {
            for &c in lambda3 {
                grid.push(Penalties {
                    lambda1: a * scale,
                    lambda2: b * scale,
                    lambda3: c,
                });
            }
        }
    }
    grid
}

/// Log-spaced lambdas from `lambda_max` down to `ratio * lambda_max`.
pub fn default_baseline_grid(xn: ArrayView2<f64>, yc: ArrayView2<f64>, count: usize, ratio: f64) -> Vec<f64> {
    let top = lambda_max(xn, yc).max(f64::MIN_POSITIVE);
    if count <= 1 {
        return vec![top];
    }
    (0..count)
        .map(|i| top * ratio.powf(i as f64 / (count - 1) as f64))
        .collect()
}

fn rows(a: ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    a.select(Axis(0), idx)
}

fn check_data(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(shape_err("cross-validation", format!("Y with {} rows", x.nrows()), dims(y)));
    }
    Ok(())
}

/// Predictions of a linear model fitted on preprocessed data.
pub fn predict_linear(stats: &PreprocessStats, d_norm: ArrayView2<f64>, x_raw: ArrayView2<f64>) -> Result<Array2<f64>> {
    let xn = stats.transform_x(x_raw)?;
    stats.uncenter_y(xn.dot(&d_norm))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub penalties: Penalties,
    /// Validation MSE per split; empty when infeasible.
    pub fold_mse: Vec<f64>,
    /// Factor count chosen on each split.
    pub fold_m_hat: Vec<usize>,
    pub mean_mse: Option<f64>,
}

impl CvRow {
    pub fn feasible(&self) -> bool {
        self.mean_mse.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub best: Penalties,
    pub best_index: usize,
    pub table: Vec<CvRow>,
}

/// Settings shared by every SMFR fit during cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmfrFitSettings {
    pub r: usize,
    pub solver: SolverConfig,
    pub rank: RankPolicy,
}

fn smfr_split_mse(x: ArrayView2<f64>, y: ArrayView2<f64>, split: &Split, pen: &Penalties, settings: &SmfrFitSettings) -> Result<(f64, usize)> {
    let xt = DenseMatrix::from_array(rows(x, &split.train))?;
    let yt = DenseMatrix::from_array(rows(y, &split.train))?;
    let data = center_and_normalize(&xt, &yt)?;
    let (model, _) = fit_model(&data, settings.r, pen, &settings.solver, &settings.rank)?;
    let pred = model.predict(rows(x, &split.validate).view())?;
    let mse = prediction_mse(pred.view(), rows(y, &split.validate).view())?;
    Ok((mse, model.m_hat))
}

fn evaluate_candidate(x: ArrayView2<f64>, y: ArrayView2<f64>, plan: &CvPlan, pen: &Penalties, settings: &SmfrFitSettings) -> Result<CvRow> {
    let mut fold_mse = Vec::with_capacity(plan.splits.len());
    let mut fold_m_hat = Vec::with_capacity(plan.splits.len());
    for split in &plan.splits {
        match smfr_split_mse(x, y, split, pen, settings) {
            Ok((mse, m)) => {
                fold_mse.push(mse);
                fold_m_hat.push(m);
            }
            Err(SmfrError::NoValidFactorCount { .. }) => {
                return Ok(CvRow {
                    penalties: *pen,
                    fold_mse: Vec::new(),
                    fold_m_hat: Vec::new(),
                    mean_mse: None,
                })
            }
            Err(e) => return Err(e),
        }
    }
    let mean = fold_mse.iter().sum::<f64>() / fold_mse.len() as f64;
    Ok(CvRow {
        penalties: *pen,
        fold_mse,
        fold_m_hat,
        mean_mse: Some(mean),
    })
}

/// Index of the smallest mean MSE; ties go to the larger `lambda1 + lambda2`,
/// then to the earlier grid entry.
fn pick_best(table: &[CvRow]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, row) in table.iter().enumerate() {
        let Some(mse) = row.mean_mse else { continue };
        let better = match best {
            None => true,
            Some(b) => {
                let bm = table[b].mean_mse.expect("feasible");
                let sparsity = |r: &CvRow| r.penalties.lambda1 + r.penalties.lambda2;
                mse < bm || (mse == bm && sparsity(row) > sparsity(&table[b]))
            }
        };
        if better {
            best = Some(i);
        }
    }
    best.ok_or(SmfrError::NoFeasibleCandidate)
}

/// Cross-validates SMFR over `grid` on raw data; every training split is
/// preprocessed on its own.
pub fn cv_select(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    grid: &[Penalties],
    plan: &CvPlan,
    settings: &SmfrFitSettings,
) -> Result<CvOutcome> {
    check_data(x, y)?;
    if grid.is_empty() {
        return Err(SmfrError::InvalidConfig("penalty grid is empty".into()));
    }
    for pen in grid {
        pen.validate_for_fit()?;
    }
    let table = grid
        .par_iter()
        .map(|pen| evaluate_candidate(x, y, plan, pen, settings))
        .collect::<Result<Vec<_>>>()?;
    let best_index = pick_best(&table)?;
    Ok(CvOutcome {
        best: table[best_index].penalties,
        best_index,
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCvRow {
    pub lambda: f64,
    pub fold_mse: Vec<f64>,
    pub mean_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCvOutcome {
    pub baseline: Baseline,
    pub best_lambda: f64,
    pub table: Vec<BaselineCvRow>,
}

/// Cross-validates a single-penalty baseline; ties go to the larger lambda.
pub fn cv_select_baseline(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    baseline: Baseline,
    lambdas: &[f64],
    plan: &CvPlan,
) -> Result<BaselineCvOutcome> {
    check_data(x, y)?;
    if lambdas.is_empty() {
        return Err(SmfrError::InvalidConfig("lambda grid is empty".into()));
    }
    let mut prepared = Vec::with_capacity(plan.splits.len());
    for split in &plan.splits {
        let xt = DenseMatrix::from_array(rows(x, &split.train))?;
        let yt = DenseMatrix::from_array(rows(y, &split.train))?;
        prepared.push((center_and_normalize(&xt, &yt)?, rows(x, &split.validate), rows(y, &split.validate)));
    }
    let table = lambdas
        .par_iter()
        .map(|&lambda| {
            let mut fold_mse = Vec::with_capacity(prepared.len());
            for (data, xv, yv) in &prepared {
                let d = baseline.fit(data.xn.view(), data.yc.view(), lambda)?;
                let pred = predict_linear(&data.stats, d.view(), xv.view())?;
                fold_mse.push(prediction_mse(pred.view(), yv.view())?);
            }
            let mean_mse = fold_mse.iter().sum::<f64>() / fold_mse.len() as f64;
            Ok(BaselineCvRow {
                lambda,
                fold_mse,
                mean_mse,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, row) in table.iter().enumerate() {
        let b = &table[best];
        if row.mean_mse < b.mean_mse || (row.mean_mse == b.mean_mse && row.lambda > b.lambda) {
            best = i;
        }
    }
    Ok(BaselineCvOutcome {
        baseline,
        best_lambda: table[best].lambda,
        table,
    })
}
