//! Saved models: a single schema-versioned JSON document.

use std::fs;
use std::path::Path;

use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use smfr::altmin::{FitTrace, Termination};
use smfr::FactorModel;

use crate::error::{CliError, CliResult};
use crate::io::sorted_json;

pub const SCHEMA_VERSION: u32 = 1;

/// Shape and per-column checksums of the training predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fingerprint {
    pub rows: usize,
    pub cols: usize,
    pub column_sums: Vec<f64>,
    pub column_sumsq: Vec<f64>,
}

impl Fingerprint {
    pub fn of(x: ArrayView2<f64>) -> Self {
        Self {
            rows: x.nrows(),
            cols: x.ncols(),
            column_sums: x.sum_axis(Axis(0)).to_vec(),
            column_sumsq: x.map(|v| v * v).sum_axis(Axis(0)).to_vec(),
        }
    }

    pub fn matches(&self, x: ArrayView2<f64>) -> bool {
        *self == Self::of(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSummary {
    pub iterations: usize,
    pub final_objective: f64,
    pub termination: Termination,
    pub restarts: usize,
    /// Factor counts tried before the accepted one.
    pub attempts: usize,
}

impl TraceSummary {
    pub fn from_traces(traces: &[FitTrace]) -> Option<Self> {
        let last = traces.last()?;
        Some(Self {
            iterations: last.iterations(),
            final_objective: last.final_f(),
            termination: last.termination,
            restarts: last.restarts(),
            attempts: traces.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersistedModel {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub model: FactorModel,
    /// The resolved settings the model was fitted with.
    pub config: serde_json::Value,
    pub trace: Option<TraceSummary>,
    pub fingerprint: Fingerprint,
}

impl PersistedModel {
    pub fn new(model: FactorModel, config: serde_json::Value, trace: Option<TraceSummary>, fingerprint: Fingerprint) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            model,
            config,
            trace,
            fingerprint,
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        sorted_json(self)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Validation(msg) => CliError::parse(path, msg),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let pm: PersistedModel = serde_json::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
        if pm.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "model schema version {} is not supported (expected {SCHEMA_VERSION})",
                pm.schema_version
            )));
        }
        // rebuild through the constructor so shape invariants are rechecked
        let m = pm.model;
        let model = FactorModel::new(m.a_hat, m.b_hat, m.penalties, m.stats)?;
        if model.m_hat != m.m_hat {
            return Err(CliError::Validation(format!(
                "stored m_hat {} disagrees with factor matrices of width {}",
                m.m_hat, model.m_hat
            )));
        }
        Ok(Self { model, ..pm })
    }

    /// Columns of `x` whose mean sits more than `z` training standard
    /// deviations from the training mean.
    pub fn shifted_columns(&self, x: ArrayView2<f64>, z: f64) -> Vec<usize> {
        let stats = &self.model.stats;
        let Some(mean) = x.mean_axis(Axis(0)) else { return Vec::new() };
        let n = self.fingerprint.rows.max(2) as f64;
        let sd: Array1<f64> = stats.x_norms.mapv(|nrm| nrm / (n - 1.0).sqrt());
        (0..mean.len().min(stats.p()))
            .filter(|&j| (mean[j] - stats.x_means[j]).abs() > z * sd[j])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use smfr::{Penalties, PreprocessStats};

    fn model() -> PersistedModel {
        let stats = PreprocessStats {
            x_means: array![0.1, -0.3],
            x_norms: array![1.0 / 3.0, 2.7],
            y_means: array![0.7],
        };
        let fm = FactorModel::new(
            array![[0.1 + 0.2], [std::f64::consts::PI]],
            array![[1e-17]],
            Penalties::new(0.1, 0.2, 0.3).unwrap(),
            stats,
        )
        .unwrap();
        PersistedModel::new(fm, serde_json::json!({"r": 1}), None, Fingerprint::of(array![[1.0, 2.0]].view()))
    }

    #[test]
    fn json_round_trip_is_exact() {
        let pm = model();
        let back = PersistedModel::from_json(&pm.to_json().unwrap()).unwrap();
        assert_eq!(back, pm);
        let probe = array![[0.25, 1.0 / 7.0], [-3.0, 1e5]];
        assert_eq!(back.model.predict(probe.view()).unwrap(), pm.model.predict(probe.view()).unwrap());
    }

    #[test]
    fn schema_and_shape_checked() {
        let pm = model();
        let mut v: serde_json::Value = serde_json::from_str(&pm.to_json().unwrap()).unwrap();
        v["schema_version"] = 99.into();
        assert!(PersistedModel::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&pm.to_json().unwrap()).unwrap();
        v["model"]["m_hat"] = 4.into();
        assert!(PersistedModel::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn shift_detection() {
        let pm = model();
        assert!(pm.shifted_columns(array![[0.1, -0.3], [0.1, -0.3]].view(), 3.0).is_empty());
        assert_eq!(pm.shifted_columns(array![[50.0, -0.3]].view(), 3.0), vec![0]);
    }
}
