use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result, SmfrError};
use crate::linalg::solve_spd;
use crate::matrix::dims;
use crate::subsolvers::{lasso_columns, InnerOptions};

/// Single-penalty linear baselines fitted on preprocessed data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Lasso,
    Ridge,
}

impl Baseline {
    pub fn fit(self, xn: ArrayView2<f64>, yc: ArrayView2<f64>, lambda: f64) -> Result<Array2<f64>> {
        match self {
            Baseline::Lasso => lasso_baseline(xn, yc, lambda),
            Baseline::Ridge => ridge_baseline(xn, yc, lambda),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Lasso => "lasso",
            Baseline::Ridge => "ridge",
        }
    }
}

fn check(context: &'static str, xn: ArrayView2<f64>, yc: ArrayView2<f64>, lambda: f64) -> Result<()> {
    if xn.nrows() != yc.nrows() {
        return Err(shape_err(context, format!("Y with {} rows", xn.nrows()), dims(yc)));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(SmfrError::InvalidConfig(format!("{context}: lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

/// Per-response lasso `min 1/2 ||Y - X D||_F^2 + lambda ||D||_1`.
pub fn lasso_baseline(xn: ArrayView2<f64>, yc: ArrayView2<f64>, lambda: f64) -> Result<Array2<f64>> {
    check("lasso_baseline", xn, yc, lambda)?;
    let (d, report) = lasso_columns(xn, yc, lambda, &InnerOptions::default())?;
    report.ensure_converged()?;
    Ok(d)
}

/// Ridge regression `(X^T X + lambda I) D = X^T Y`.
pub fn ridge_baseline(xn: ArrayView2<f64>, yc: ArrayView2<f64>, lambda: f64) -> Result<Array2<f64>> {
    check("ridge_baseline", xn, yc, lambda)?;
    let mut g = xn.t().dot(&xn);
    for i in 0..g.nrows() {
        g[[i, i]] += lambda;
    }
    solve_spd(g.view(), xn.t().dot(&yc).view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::soft_threshold;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn lasso_full_shrinkage() {
        let x = array![[1.0, 0.5], [0.0, 1.0], [-1.0, 0.2]];
        let y = array![[1.0], [2.0], [0.5]];
        let d = lasso_baseline(x.view(), y.view(), 1e6).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lasso_orthonormal_closed_form() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = array![[h, h], [h, -h], [0.0, 0.0]];
        let y = array![[3.0, -1.0], [1.0, 0.5], [2.0, 2.0]];
        let d = lasso_baseline(x.view(), y.view(), 0.7).unwrap();
        let xty = x.t().dot(&y);
        for (got, z) in d.iter().zip(xty.iter()) {
            assert_abs_diff_eq!(*got, soft_threshold(*z, 0.7), epsilon = 1e-9);
        }
    }

    #[test]
    fn ridge_identity_shrinks() {
        let x = Array2::<f64>::eye(3);
        let y = array![[1.0, 2.0], [-3.0, 0.5], [0.0, 4.0]];
        let d = ridge_baseline(x.view(), y.view(), 0.5).unwrap();
        for (got, want) in d.iter().zip(y.iter()) {
            assert_abs_diff_eq!(*got, want / 1.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn ridge_singular_without_penalty() {
        let x = array![[1.0, 1.0], [2.0, 2.0]];
        let y = array![[1.0], [2.0]];
        assert_eq!(ridge_baseline(x.view(), y.view(), 0.0), Err(SmfrError::SingularSystem));
        assert!(ridge_baseline(x.view(), y.view(), 0.1).is_ok());
    }
}
