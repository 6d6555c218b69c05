use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines::Baseline;
use super::gen::{SimData, SimSpec};
use super::metrics::{prediction_mse, signed_sensitivity, specificity};
use crate::altmin::SolverConfig;
use crate::error::{Result, SmfrError};
use crate::factor_select::{fit_model, RankPolicy};
use crate::matrix::DenseMatrix;
use crate::model::Penalties;
use crate::modelsel::{
    cv_select, cv_select_baseline, default_baseline_grid, grid_from_scales, lambda_max, predict_linear, CvPlan,
    SmfrFitSettings, Validation, DEFAULT_LAMBDA3, DEFAULT_SCALES,
};
use crate::preprocess::center_and_normalize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Smfr,
    Lasso,
    Ridge,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Smfr => "smfr",
            Algorithm::Lasso => "lasso",
            Algorithm::Ridge => "ridge",
        }
    }
}

/// SMFR penalty grid, either explicit or as multiples of the training
/// data's `lambda_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Explicit { grid: Vec<Penalties> },
    Scaled { lambda1: Vec<f64>, lambda2: Vec<f64>, lambda3: Vec<f64> },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Scaled {
            lambda1: DEFAULT_SCALES.to_vec(),
            lambda2: DEFAULT_SCALES.to_vec(),
            lambda3: DEFAULT_LAMBDA3.to_vec(),
        }
    }
}

impl GridSpec {
    pub fn resolve(&self, lambda_max: f64) -> Vec<Penalties> {
        match self {
            GridSpec::Explicit { grid } => grid.clone(),
            GridSpec::Scaled {
                lambda1,
                lambda2,
                lambda3,
            } => grid_from_scales(lambda_max, lambda1, lambda2, lambda3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub n_runs: usize,
    /// Upper bound on the number of factors.
    pub r: usize,
    pub validation: Validation,
    /// Fold assignment of run `i` uses seed `cv_seed + i`.
    pub cv_seed: u64,
    pub grid: GridSpec,
    /// Length and `min/max` ratio of the baselines' log lambda grid.
    pub baseline_grid_len: usize,
    pub baseline_grid_ratio: f64,
    pub solver: SolverConfig,
    pub rank: RankPolicy,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            n_runs: 20,
            r: 20,
            validation: Validation::default(),
            cv_seed: 0,
            grid: GridSpec::default(),
            baseline_grid_len: 20,
            baseline_grid_ratio: 1e-2,
            solver: SolverConfig::default(),
            rank: RankPolicy::default(),
        }
    }
}

/// Test-set evaluation of one algorithm on one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub run: usize,
    pub algorithm: Algorithm,
    pub mse: Option<f64>,
    pub signed_sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub m_hat: Option<usize>,
    /// Selected SMFR penalties.
    pub penalties: Option<Penalties>,
    /// Selected baseline lambda.
    pub lambda: Option<f64>,
    pub error: Option<String>,
}

/// Mean and sample standard deviation (`n - 1`); the sd is `None` for
/// fewer than two values.
pub fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 0 { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub mse_mean: Option<f64>,
    pub mse_sd: Option<f64>,
    pub sensitivity_mean: Option<f64>,
    pub specificity_mean: Option<f64>,
    pub m_hat_median: Option<f64>,
    pub m_hat_mean: Option<f64>,
    pub m_hat_sd: Option<f64>,
}

impl AlgorithmSummary {
    pub fn from_reports(algorithm: Algorithm, reports: &[EvalReport]) -> Self {
        let mine: Vec<&EvalReport> = reports.iter().filter(|r| r.algorithm == algorithm).collect();
        let mse: Vec<f64> = mine.iter().filter_map(|r| r.mse).collect();
        let sens: Vec<f64> = mine.iter().filter_map(|r| r.signed_sensitivity).collect();
        let spec: Vec<f64> = mine.iter().filter_map(|r| r.specificity).collect();
        let m_hat: Vec<f64> = mine.iter().filter_map(|r| r.m_hat.map(|m| m as f64)).collect();
        let (mse_mean, mse_sd) = mean_sd(&mse);
        let (m_hat_mean, m_hat_sd) = mean_sd(&m_hat);
        Self {
            algorithm,
            runs_ok: mse.len(),
            runs_failed: mine.len() - mse.len(),
            mse_mean,
            mse_sd,
            sensitivity_mean: mean_sd(&sens).0,
            specificity_mean: mean_sd(&spec).0,
            m_hat_median: median(&m_hat),
            m_hat_mean,
            m_hat_sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub spec: SimSpec,
    pub algorithms: Vec<Algorithm>,
    pub runs: Vec<EvalReport>,
    pub summary: Vec<AlgorithmSummary>,
}

impl RegimeReport {
    pub fn summary_for(&self, algorithm: Algorithm) -> Option<&AlgorithmSummary> {
        self.summary.iter().find(|s| s.algorithm == algorithm)
    }
}

fn support_metrics(truth: &Array2<f64>, est: &Array2<f64>) -> (Option<f64>, Option<f64>) {
    (
        signed_sensitivity(truth.view(), est.view()).ok(),
        specificity(truth.view(), est.view()).ok(),
    )
}

fn evaluate(run: usize, algorithm: Algorithm, data: &SimData, settings: &RunSettings) -> Result<EvalReport> {
    let plan = CvPlan::new(data.x_train.nrows(), settings.validation, settings.cv_seed.wrapping_add(run as u64))?;
    let train = center_and_normalize(
        &DenseMatrix::from_array(data.x_train.clone())?,
        &DenseMatrix::from_array(data.y_train.clone())?,
    )?;
    let mut report = EvalReport {
        run,
        algorithm,
        mse: None,
        signed_sensitivity: None,
        specificity: None,
        m_hat: None,
        penalties: None,
        lambda: None,
        error: None,
    };
    let (pred, d_raw) = match algorithm {
        Algorithm::Smfr => {
            let grid = settings.grid.resolve(lambda_max(train.xn.view(), train.yc.view()));
            let fit_settings = SmfrFitSettings {
                r: settings.r,
                solver: settings.solver.clone(),
                rank: settings.rank,
            };
            let cv = cv_select(data.x_train.view(), data.y_train.view(), &grid, &plan, &fit_settings)?;
            let (model, _) = fit_model(&train, settings.r, &cv.best, &settings.solver, &settings.rank)?;
            report.penalties = Some(cv.best);
            report.m_hat = Some(model.m_hat);
            (model.predict(data.x_test.view())?, model.raw_coefficients())
        }
        Algorithm::Lasso | Algorithm::Ridge => {
            let baseline = if algorithm == Algorithm::Lasso { Baseline::Lasso } else { Baseline::Ridge };
            let lambdas = default_baseline_grid(
                train.xn.view(),
                train.yc.view(),
                settings.baseline_grid_len,
                settings.baseline_grid_ratio,
            );
            let cv = cv_select_baseline(data.x_train.view(), data.y_train.view(), baseline, &lambdas, &plan)?;
            let d = baseline.fit(train.xn.view(), train.yc.view(), cv.best_lambda)?;
            report.lambda = Some(cv.best_lambda);
            (
                predict_linear(&train.stats, d.view(), data.x_test.view())?,
                train.stats.coefficients_to_raw(d.view()),
            )
        }
    };
    report.mse = Some(prediction_mse(pred.view(), data.y_test.view())?);
    let (sens, spec) = support_metrics(&data.d_true, &d_raw);
    report.signed_sensitivity = sens;
    report.specificity = spec;
    Ok(report)
}

fn failed(run: usize, algorithm: Algorithm, err: &SmfrError) -> EvalReport {
    EvalReport {
        run,
        algorithm,
        mse: None,
        signed_sensitivity: None,
        specificity: None,
        m_hat: None,
        penalties: None,
        lambda: None,
        error: Some(err.to_string()),
    }
}

/// Runs `settings.n_runs` independent draws of `spec`, fits each algorithm
/// with cross-validated penalties and evaluates it on the run's test set.
/// A failing fit marks that run failed for that algorithm only.
pub fn run_regime(spec: &SimSpec, algorithms: &[Algorithm], settings: &RunSettings) -> Result<RegimeReport> {
    spec.validate()?;
    settings.solver.validate()?;
    settings.rank.validate()?;
    if settings.n_runs == 0 || algorithms.is_empty() {
        return Err(SmfrError::InvalidConfig("need at least one run and one algorithm".into()));
    }
    let per_run: Vec<Vec<EvalReport>> = (0..settings.n_runs)
        .into_par_iter()
        .map(|run| {
            let data = match SimData::generate(spec, run as u64) {
                Ok(d) => d,
                Err(e) => return algorithms.iter().map(|a| failed(run, *a, &e)).collect(),
            };
            algorithms
                .iter()
                .map(|&alg| {
                    let rep = evaluate(run, alg, &data, settings).unwrap_or_else(|e| failed(run, alg, &e));
                    log::info!("run {run} {}: mse {:?} m_hat {:?}", alg.name(), rep.mse, rep.m_hat);
                    rep
                })
                .collect()
        })
        .collect();
    let runs: Vec<EvalReport> = per_run.into_iter().flatten().collect();
    let summary = algorithms.iter().map(|a| AlgorithmSummary::from_reports(*a, &runs)).collect();
    Ok(RegimeReport {
        spec: spec.clone(),
        algorithms: algorithms.to_vec(),
        runs,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        assert!((s.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[7.0]), (Some(7.0), None));
        assert_eq!(mean_sd(&[]), (None, None));
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn small_regime_runs() {
        let spec = SimSpec {
            n: 30,
            p: 12,
            q: 8,
            m: 2,
            m0: 1,
            sigma_n: 0.5,
            s: 0.5,
            ..SimSpec::factor_regime(4)
        };
        let settings = RunSettings {
            n_runs: 2,
            r: 4,
            grid: GridSpec::Scaled {
                lambda1: vec![0.05],
                lambda2: vec![0.05, 0.2],
                lambda3: vec![0.1],
            },
            baseline_grid_len: 5,
            ..RunSettings::default()
        };
        let rep = run_regime(&spec, &[Algorithm::Smfr, Algorithm::Lasso, Algorithm::Ridge], &settings).unwrap();
        assert_eq!(rep.runs.len(), 6);
        for s in &rep.summary {
            assert_eq!(s.runs_ok, 2, "{s:?}");
            assert!(s.mse_sd.is_some());
        }
        let smfr = rep.summary_for(Algorithm::Smfr).unwrap();
        assert!(smfr.m_hat_median.is_some());
        let again = run_regime(&spec, &[Algorithm::Smfr, Algorithm::Lasso, Algorithm::Ridge], &settings).unwrap();
        assert_eq!(rep, again);
    }
}
