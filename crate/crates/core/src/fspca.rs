//! Fully sparse PCA: the factor model fitted with `Y = X`, adjusted
//! explained variance for correlated components, and a thresholded-PCA
//! baseline.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::altmin::{fit_fixed_m, FitTrace, SolverConfig};
use crate::error::{Result, SmfrError};
use crate::factor_select::{numerical_rank, RankPolicy};
use crate::linalg::thin_svd;
use crate::matrix::frobenius_sq;
use crate::model::Penalties;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpcaResult {
    /// `p x k`; column `j` holds the loadings of component `j`.
    pub components: Array2<f64>,
    /// `k x p`.
    pub contributions: Array2<f64>,
    /// `n x k`, equal to `Xn * components`.
    pub scores: Array2<f64>,
    pub adjusted_variance: Vec<f64>,
    pub loading_nonzeros: Vec<usize>,
    pub loading_l1: Vec<f64>,
    pub trace: FitTrace,
}

impl SpcaResult {
    pub fn total_adjusted_variance(&self) -> f64 {
        self.adjusted_variance.iter().sum()
    }
}

fn check_centered(xn: ArrayView2<f64>) -> Result<()> {
    let scale = xn.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    if let Some(mean) = xn.mean_axis(Axis(0)) {
        if let Some((j, m)) = mean.iter().enumerate().find(|(_, m)| m.abs() > 1e-8 * scale) {
            return Err(SmfrError::InvalidConfig(format!(
                "sparse PCA needs centered columns; column {j} has mean {m}"
            )));
        }
    }
    Ok(())
}

/// Fits `k` sparse components by regressing `xn` on itself.
pub fn fit_spca(xn: ArrayView2<f64>, k: usize, pen: &Penalties, config: &SolverConfig, policy: &RankPolicy) -> Result<SpcaResult> {
    let p = xn.ncols();
    if k == 0 || k > p {
        return Err(SmfrError::InvalidConfig(format!("component count k={k} must lie in [1, {p}]")));
    }
    check_centered(xn)?;
    let fit = fit_fixed_m(xn, xn, k, pen, config)?;
    if numerical_rank(fit.a.view(), policy) < k || numerical_rank(fit.b.view(), policy) < k {
        return Err(SmfrError::RankCollapse(k));
    }
    let scores = xn.dot(&fit.a);
    let adjusted_variance = adjusted_explained_variance(xn, fit.a.view())?;
    let loading_nonzeros = fit.a.columns().into_iter().map(|c| c.iter().filter(|v| **v != 0.0).count()).collect();
    let loading_l1 = fit.a.columns().into_iter().map(|c| c.iter().map(|v| v.abs()).sum()).collect();
    Ok(SpcaResult {
        components: fit.a,
        contributions: fit.b,
        scores,
        adjusted_variance,
        loading_nonzeros,
        loading_l1,
        trace: fit.trace,
    })
}

/// Variance explained by each component after removing what the earlier
/// components' scores already explain, as a fraction of `||Xn||_F^2`.
/// Loadings are scaled to unit length first.
pub fn adjusted_explained_variance(xn: ArrayView2<f64>, a: ArrayView2<f64>) -> Result<Vec<f64>> {
    let total = frobenius_sq(xn);
    if total == 0.0 {
        return Err(SmfrError::UndefinedMetric("explained variance of a zero matrix"));
    }
    let mut unit = a.to_owned();
    for (j, mut col) in unit.columns_mut().into_iter().enumerate() {
        let norm = col.dot(&col).sqrt();
        if norm == 0.0 {
            return Err(SmfrError::DependentComponents(j));
        }
        col /= norm;
    }
    let z = xn.dot(&unit);
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(a.ncols());
    let mut out = Vec::with_capacity(a.ncols());
    for (j, col) in z.columns().into_iter().enumerate() {
        let norm = col.dot(&col).sqrt();
        let mut r = col.to_owned();
        // two passes of Gram-Schmidt keep the residual orthogonal to working precision
        for _ in 0..2 {
            for u in &basis {
                let c = u.dot(&r);
                r.scaled_add(-c, u);
            }
        }
        let rn = r.dot(&r).sqrt();
        if norm == 0.0 || rn < 1e-12 * norm {
            return Err(SmfrError::DependentComponents(j));
        }
        out.push(rn * rn / total);
        basis.push(r / rn);
    }
    Ok(out)
}

/// Top-`k` right singular vectors (`p x k`) and all singular values.
pub fn classical_pca(xn: ArrayView2<f64>, k: usize) -> (Array2<f64>, Array1<f64>) {
    let svd = thin_svd(xn);
    let k = k.min(svd.vt.nrows());
    let v = svd.vt.slice(ndarray::s![..k, ..]).t().to_owned();
    (v, svd.s)
}

/// Classical loadings with all but the `keep` largest-magnitude entries of
/// each component set to zero.
pub fn thresholding_baseline(xn: ArrayView2<f64>, k: usize, keep: usize) -> Result<Array2<f64>> {
    let p = xn.ncols();
    if keep > p {
        return Err(SmfrError::InvalidConfig(format!("keep={keep} exceeds p={p}")));
    }
    if k == 0 || k > p.min(xn.nrows()) {
        return Err(SmfrError::InvalidConfig(format!("component count k={k} out of range")));
    }
    let (mut v, _) = classical_pca(xn, k);
    for mut col in v.columns_mut() {
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| col[j].abs().total_cmp(&col[i].abs()).then(i.cmp(&j)));
        for &i in &order[keep..] {
            col[i] = 0.0;
        }
    }
    Ok(v)
}
