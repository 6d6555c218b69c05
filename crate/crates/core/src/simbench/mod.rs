//! Synthetic benchmark: data generation, evaluation metrics, baseline
//! regressors and the multi-run experiment driver.

pub mod baselines;
pub mod gen;
pub mod metrics;
pub mod reference;
pub mod runner;

pub use baselines::{lasso_baseline, ridge_baseline, Baseline};
pub use gen::{ar_covariance, SimData, SimSpec, Structure};
pub use metrics::{mse, prediction_mse, signed_sensitivity, specificity};
pub use runner::{run_regime, Algorithm, AlgorithmSummary, EvalReport, RegimeReport, RunSettings};
