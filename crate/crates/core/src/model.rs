//! Domain types shared by every stage of a fit.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result, SmfrError};
use crate::matrix::dims;

/// Penalty weights: `lambda1` on `||A||_1`, `lambda2` on `||B||_1` and
/// `lambda3` on `||A||_F^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Penalties {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl Penalties {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Result<Self> {
        let p = Self {
            lambda1,
            lambda2,
            lambda3,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SmfrError::InvalidConfig(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Alternating minimization needs a strictly positive ridge weight,
    /// otherwise `A` and `B` can trade scale freely.
    pub fn validate_for_fit(&self) -> Result<()> {
        self.validate()?;
        if self.lambda3 <= 0.0 {
            return Err(SmfrError::InvalidConfig(
                "lambda3 must be positive for alternating minimization".into(),
            ));
        }
        Ok(())
    }
}

/// Column statistics captured by [`crate::preprocess::center_and_normalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub x_means: Array1<f64>,
    pub x_norms: Array1<f64>,
    pub y_means: Array1<f64>,
}

impl PreprocessStats {
    pub fn p(&self) -> usize {
        self.x_means.len()
    }

    pub fn q(&self) -> usize {
        self.y_means.len()
    }

    /// Maps raw predictors into the normalized space the model was fitted in.
    pub fn transform_x(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.p() {
            return Err(shape_err(
                "transform_x",
                format!("{} columns", self.p()),
                dims(x),
            ));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (mu, nrm) = (self.x_means[j], self.x_norms[j]);
            col.mapv_inplace(|v| (v - mu) / nrm);
        }
        Ok(out)
    }

    /// Adds the response means back onto centered predictions.
    pub fn uncenter_y(&self, mut y: Array2<f64>) -> Result<Array2<f64>> {
        if y.ncols() != self.q() {
            return Err(shape_err(
                "uncenter_y",
                format!("{} columns", self.q()),
                dims(y.view()),
            ));
        }
        for (j, mut col) in y.columns_mut().into_iter().enumerate() {
            let mu = self.y_means[j];
            col.mapv_inplace(|v| v + mu);
        }
        Ok(y)
    }

    /// Converts a coefficient matrix from normalized-predictor units to raw
    /// units (row `i` divided by the column norm of predictor `i`).
    pub fn coefficients_to_raw(&self, d: ArrayView2<f64>) -> Array2<f64> {
        let mut out = d.to_owned();
        for (i, mut row) in out.rows_mut().into_iter().enumerate() {
            let nrm = self.x_norms[i];
            row.mapv_inplace(|v| v / nrm);
        }
        out
    }
}

/// A fitted factor model `D = A B` together with the penalties and
/// preprocessing that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    pub a_hat: Array2<f64>,
    pub b_hat: Array2<f64>,
    pub m_hat: usize,
    pub penalties: Penalties,
    pub stats: PreprocessStats,
}

impl FactorModel {
    pub fn new(
        a_hat: Array2<f64>,
        b_hat: Array2<f64>,
        penalties: Penalties,
        stats: PreprocessStats,
    ) -> Result<Self> {
        let m_hat = a_hat.ncols();
        if m_hat == 0 || b_hat.nrows() != m_hat {
            return Err(shape_err(
                "FactorModel",
                format!("A p x m and B m x q with m >= 1, A is {}", dims(a_hat.view())),
                dims(b_hat.view()),
            ));
        }
        if a_hat.nrows() != stats.p() || b_hat.ncols() != stats.q() {
            return Err(shape_err(
                "FactorModel",
                format!("{}x{} coefficients", stats.p(), stats.q()),
                format!("{}x{}", a_hat.nrows(), b_hat.ncols()),
            ));
        }
        Ok(Self {
            a_hat,
            b_hat,
            m_hat,
            penalties,
            stats,
        })
    }

    /// Coefficients in normalized-predictor units.
    pub fn coefficients(&self) -> Array2<f64> {
        self.a_hat.dot(&self.b_hat)
    }

    /// Coefficients in raw predictor units.
    pub fn raw_coefficients(&self) -> Array2<f64> {
        self.stats.coefficients_to_raw(self.coefficients().view())
    }

    /// Predicts responses for raw (unnormalized) predictors.
    pub fn predict(&self, x_raw: ArrayView2<f64>) -> Result<Array2<f64>> {
        let xn = self.stats.transform_x(x_raw)?;
        let fitted = xn.dot(&self.a_hat).dot(&self.b_hat);
        self.stats.uncenter_y(fitted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn penalties_validation() {
        assert!(Penalties::new(0.0, 0.0, 0.0).is_ok());
        assert!(Penalties::new(-1.0, 0.0, 0.0).is_err());
        assert!(Penalties::new(0.0, f64::NAN, 0.0).is_err());
        assert!(Penalties::new(1.0, 1.0, 0.0).unwrap().validate_for_fit().is_err());
        assert!(Penalties::new(1.0, 1.0, 0.1).unwrap().validate_for_fit().is_ok());
    }

    #[test]
    fn model_shape_checks() {
        let stats = PreprocessStats {
            x_means: array![0.0, 0.0],
            x_norms: array![1.0, 2.0],
            y_means: array![1.0],
        };
        let pen = Penalties::new(0.0, 0.0, 1.0).unwrap();
        assert!(FactorModel::new(Array2::zeros((2, 1)), Array2::zeros((2, 1)), pen, stats.clone()).is_err());
        assert!(FactorModel::new(Array2::zeros((2, 0)), Array2::zeros((0, 1)), pen, stats.clone()).is_err());
        let model = FactorModel::new(array![[1.0], [1.0]], array![[2.0]], pen, stats).unwrap();
        assert_eq!(model.m_hat, 1);
        // x = (1, 2) -> normalized (1, 1) -> 1*2 + 1*2 = 4, plus mean 1.
        let y = model.predict(array![[1.0, 2.0]].view()).unwrap();
        assert_eq!(y[[0, 0]], 5.0);
        assert_eq!(model.raw_coefficients(), array![[2.0], [1.0]]);
    }
}
