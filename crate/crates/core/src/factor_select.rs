//! Estimating the number of factors by decrementing `m` until both fitted
//! matrices have full numerical rank.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::altmin::{fit_fixed_m, FitTrace, SolverConfig};
use crate::error::{Result, SmfrError};
use crate::linalg::singular_values;
use crate::model::{FactorModel, Penalties};
use crate::preprocess::Preprocessed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankPolicy {
    /// Singular values at or below `rel_tol * sigma_max` count as zero.
    pub rel_tol: f64,
}

impl Default for RankPolicy {
    fn default() -> Self {
        Self { rel_tol: 1e-8 }
    }
}

impl RankPolicy {
    pub fn new(rel_tol: f64) -> Result<Self> {
        let policy = Self { rel_tol };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(SmfrError::InvalidConfig(format!(
                "rank tolerance must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

/// Number of singular values above `rel_tol * sigma_max`; 0 for a zero or
/// empty matrix.
pub fn numerical_rank(m: ArrayView2<f64>, policy: &RankPolicy) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > policy.rel_tol * smax).count()
}

/// One candidate factor count tried by [`select_factors`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub m: usize,
    pub rank_a: usize,
    pub rank_b: usize,
    pub trace: FitTrace,
}

impl Attempt {
    pub fn accepted(&self) -> bool {
        self.rank_a == self.m && self.rank_b == self.m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorSelection {
    pub a_hat: Array2<f64>,
    pub b_hat: Array2<f64>,
    pub m_hat: usize,
    /// Attempts from `m = r` downward; the last one is the accepted fit.
    pub attempts: Vec<Attempt>,
}

impl FactorSelection {
    pub fn coefficients(&self) -> Array2<f64> {
        self.a_hat.dot(&self.b_hat)
    }

    pub fn traces(&self) -> Vec<FitTrace> {
        self.attempts.iter().map(|a| a.trace.clone()).collect()
    }
}

/// Fits `m = r, r-1, ..., 1` and returns the first fit whose `A` and `B`
/// both have numerical rank `m`.
pub fn select_factors(
    xn: ArrayView2<f64>,
    yc: ArrayView2<f64>,
    r: usize,
    pen: &Penalties,
    config: &SolverConfig,
    policy: &RankPolicy,
) -> Result<FactorSelection> {
    policy.validate()?;
    let (p, q) = (xn.ncols(), yc.ncols());
    if r == 0 || r > p.min(q) {
        return Err(SmfrError::InvalidConfig(format!(
            "factor bound r={r} must lie in [1, min(p, q) = {}]",
            p.min(q)
        )));
    }
    let mut attempts = Vec::with_capacity(r);
    for m in (1..=r).rev() {
        let fit = fit_fixed_m(xn, yc, m, pen, config)?;
        let rank_a = numerical_rank(fit.a.view(), policy);
        let rank_b = numerical_rank(fit.b.view(), policy);
        log::debug!("m={m}: rank(A)={rank_a} rank(B)={rank_b}");
        let attempt = Attempt {
            m,
            rank_a,
            rank_b,
            trace: fit.trace,
        };
        let ok = attempt.accepted();
        attempts.push(attempt);
        if ok {
            return Ok(FactorSelection {
                a_hat: fit.a,
                b_hat: fit.b,
                m_hat: m,
                attempts,
            });
        }
    }
    Err(SmfrError::NoValidFactorCount { r })
}

/// [`select_factors`] on preprocessed data, packaged as a [`FactorModel`].
pub fn fit_model(
    data: &Preprocessed,
    r: usize,
    pen: &Penalties,
    config: &SolverConfig,
    policy: &RankPolicy,
) -> Result<(FactorModel, Vec<FitTrace>)> {
    let sel = select_factors(data.xn.view(), data.yc.view(), r, pen, config, policy)?;
    let traces = sel.traces();
    let model = FactorModel::new(sel.a_hat, sel.b_hat, *pen, data.stats.clone())?;
    Ok((model, traces))
}
