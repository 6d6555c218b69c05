use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmfrError};
use crate::linalg::sym_sqrt;
use crate::rng::rng_for;

/// Correlation of adjacent predictors.
pub const X_CORRELATION: f64 = 0.7;
/// Correlation of adjacent noise components.
pub const NOISE_CORRELATION: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Structure {
    /// `D = A B` with sparse factors.
    Factor,
    /// Entries of `D` nonzero independently with probability `density`.
    ElementwiseSparse { density: f64 },
    /// `round(zero_row_frac * p)` rows of `D` are zero; the others have
    /// entries nonzero with probability `within_density`.
    RowwiseSparse { zero_row_frac: f64, within_density: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub m: usize,
    pub m0: usize,
    pub sigma_n: f64,
    pub s: f64,
    pub seed: u64,
    pub structure: Structure,
    /// Test rows per run; the training size `n` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_test: Option<usize>,
}

fn unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(SmfrError::InvalidConfig(format!("{name} must lie in (0, 1], got {v}")))
    }
}

impl SimSpec {
    /// The high-dimensional factor regime: n=50, p=150, q=50, m=10, m0=1,
    /// sigma_n=3, s=0.2.
    pub fn factor_regime(seed: u64) -> Self {
        Self {
            n: 50,
            p: 150,
            q: 50,
            m: 10,
            m0: 1,
            sigma_n: 3.0,
            s: 0.2,
            seed,
            structure: Structure::Factor,
            n_test: None,
        }
    }

    pub fn test_rows(&self) -> usize {
        self.n_test.unwrap_or(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.q == 0 || self.test_rows() == 0 {
            return Err(SmfrError::InvalidConfig("n, p, q and the test size must be positive".into()));
        }
        if !(self.sigma_n >= 0.0 && self.sigma_n.is_finite()) {
            return Err(SmfrError::InvalidConfig(format!("sigma_n must be finite and >= 0, got {}", self.sigma_n)));
        }
        match self.structure {
            Structure::Factor => {
                if self.m == 0 || self.m > self.p.min(self.q) {
                    return Err(SmfrError::InvalidConfig(format!(
                        "m={} must lie in [1, min(p, q)]",
                        self.m
                    )));
                }
                if self.m0 == 0 || self.m0 > self.m {
                    return Err(SmfrError::InvalidConfig(format!("m0={} must lie in [1, m]", self.m0)));
                }
                unit_open("s", self.s)
            }
            Structure::ElementwiseSparse { density } => unit_open("density", density),
            Structure::RowwiseSparse {
                zero_row_frac,
                within_density,
            } => {
                if !(0.0..1.0).contains(&zero_row_frac) {
                    return Err(SmfrError::InvalidConfig(format!(
                        "zero_row_frac must lie in [0, 1), got {zero_row_frac}"
                    )));
                }
                unit_open("within_density", within_density)
            }
        }
    }
}

/// `scale * rho^|i-j|`.
pub fn ar_covariance(dim: usize, rho: f64, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((dim, dim), |(i, j)| scale * rho.powi(i.abs_diff(j) as i32))
}

fn standard_normal<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

/// Rows i.i.d. `N(0, sigma)`, drawn as `Z sigma^{1/2}`.
pub fn sample_gaussian_rows<R: Rng>(rows: usize, sigma: ArrayView2<f64>, rng: &mut R) -> Array2<f64> {
    let root = sym_sqrt(sigma);
    standard_normal(rows, sigma.nrows(), rng).dot(&root)
}

pub fn sample_predictors<R: Rng>(n: usize, p: usize, rng: &mut R) -> Array2<f64> {
    sample_gaussian_rows(n, ar_covariance(p, X_CORRELATION, 1.0).view(), rng)
}

pub fn sample_noise<R: Rng>(n: usize, q: usize, sigma_n: f64, rng: &mut R) -> Array2<f64> {
    if sigma_n == 0.0 {
        return Array2::zeros((n, q));
    }
    sample_gaussian_rows(n, ar_covariance(q, NOISE_CORRELATION, sigma_n * sigma_n).view(), rng)
}

/// Factor coefficients: each row of `A` has `m0` standard-normal entries at
/// uniformly chosen positions, and `B = U o W` with `W ~ Bernoulli(s)`.
pub fn sample_factors<R: Rng>(p: usize, q: usize, m: usize, m0: usize, s: f64, rng: &mut R) -> (Array2<f64>, Array2<f64>) {
    let mut a = Array2::zeros((p, m));
    for i in 0..p {
        for k in sample(rng, m, m0).into_iter() {
            a[[i, k]] = StandardNormal.sample(rng);
        }
    }
    let keep = Bernoulli::new(s).expect("s in (0, 1]");
    let mut b = Array2::zeros((m, q));
    for v in b.iter_mut() {
        let u: f64 = StandardNormal.sample(rng);
        if keep.sample(rng) {
            *v = u;
        }
    }
    (a, b)
}

/// Standard-normal entries on a Bernoulli support.
fn sparse_normal<R: Rng>(rows: usize, cols: usize, density: f64, rng: &mut R) -> Array2<f64> {
    let keep = Bernoulli::new(density).expect("density in (0, 1]");
    Array2::from_shape_simple_fn((rows, cols), || {
        let u: f64 = StandardNormal.sample(rng);
        if keep.sample(rng) {
            u
        } else {
            0.0
        }
    })
}

// Stream offsets within one run.
const S_X_TRAIN: u64 = 0;
const S_X_TEST: u64 = 1;
const S_E_TRAIN: u64 = 2;
const S_E_TEST: u64 = 3;
const S_COEF: u64 = 4;
const STREAMS_PER_RUN: u64 = 8;

fn stream(run: u64, offset: u64) -> u64 {
    run * STREAMS_PER_RUN + offset
}

/// Training predictors of run 0.
pub fn gen_predictors(spec: &SimSpec) -> Array2<f64> {
    sample_predictors(spec.n, spec.p, &mut rng_for(spec.seed, stream(0, S_X_TRAIN)))
}

/// Training noise of run 0.
pub fn gen_noise(spec: &SimSpec) -> Array2<f64> {
    sample_noise(spec.n, spec.q, spec.sigma_n, &mut rng_for(spec.seed, stream(0, S_E_TRAIN)))
}

/// `(A, B, D = A B)` of run 0; requires the factor structure.
pub fn gen_coefficients(spec: &SimSpec) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    coefficients_for_run(spec, 0).and_then(|(a, b, d)| match (a, b) {
        (Some(a), Some(b)) => Ok((a, b, d)),
        _ => Err(SmfrError::InvalidConfig("gen_coefficients needs the factor structure".into())),
    })
}

/// `D` of run 0 for the unstructured regimes.
pub fn gen_unstructured_d(spec: &SimSpec) -> Result<Array2<f64>> {
    if spec.structure == Structure::Factor {
        return Err(SmfrError::InvalidConfig("gen_unstructured_d needs a sparse structure".into()));
    }
    coefficients_for_run(spec, 0).map(|(_, _, d)| d)
}

type Coefficients = (Option<Array2<f64>>, Option<Array2<f64>>, Array2<f64>);

fn coefficients_for_run(spec: &SimSpec, run: u64) -> Result<Coefficients> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, stream(run, S_COEF));
    Ok(match spec.structure {
        Structure::Factor => {
            let (a, b) = sample_factors(spec.p, spec.q, spec.m, spec.m0, spec.s, &mut rng);
            let d = a.dot(&b);
            (Some(a), Some(b), d)
        }
        Structure::ElementwiseSparse { density } => (None, None, sparse_normal(spec.p, spec.q, density, &mut rng)),
        Structure::RowwiseSparse {
            zero_row_frac,
            within_density,
        } => {
            let mut d = sparse_normal(spec.p, spec.q, within_density, &mut rng);
            let zero_rows = (zero_row_frac * spec.p as f64).round() as usize;
            for i in sample(&mut rng, spec.p, zero_rows).into_iter() {
                d.row_mut(i).fill(0.0);
            }
            (None, None, d)
        }
    })
}

/// One simulated train/test draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub x_train: Array2<f64>,
    pub y_train: Array2<f64>,
    pub x_test: Array2<f64>,
    pub y_test: Array2<f64>,
    pub d_true: Array2<f64>,
    pub a_true: Option<Array2<f64>>,
    pub b_true: Option<Array2<f64>>,
}

impl SimData {
    /// Draws run `run`; every run uses its own generator streams.
    pub fn generate(spec: &SimSpec, run: u64) -> Result<Self> {
        let (a_true, b_true, d_true) = coefficients_for_run(spec, run)?;
        let nt = spec.test_rows();
        let x_train = sample_predictors(spec.n, spec.p, &mut rng_for(spec.seed, stream(run, S_X_TRAIN)));
        let x_test = sample_predictors(nt, spec.p, &mut rng_for(spec.seed, stream(run, S_X_TEST)));
        let e_train = sample_noise(spec.n, spec.q, spec.sigma_n, &mut rng_for(spec.seed, stream(run, S_E_TRAIN)));
        let e_test = sample_noise(nt, spec.q, spec.sigma_n, &mut rng_for(spec.seed, stream(run, S_E_TEST)));
        let y_train = x_train.dot(&d_true) + e_train;
        let y_test = x_test.dot(&d_true) + e_test;
        Ok(Self {
            x_train,
            y_train,
            x_test,
            y_test,
            d_true,
            a_true,
            b_true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_cov(x: &Array2<f64>) -> Array2<f64> {
        let n = x.nrows() as f64;
        let mean = x.mean_axis(ndarray::Axis(0)).unwrap();
        let c = x - &mean;
        c.t().dot(&c) / (n - 1.0)
    }

    #[test]
    fn covariance_entries() {
        let sx = ar_covariance(4, X_CORRELATION, 1.0);
        assert_abs_diff_eq!(sx[[0, 2]], 0.49, epsilon = 1e-15);
        for i in 0..4 {
            assert_eq!(sx[[i, i]], 1.0);
        }
        let se = ar_covariance(5, NOISE_CORRELATION, 9.0);
        assert_abs_diff_eq!(se[[1, 3]], 1.44, epsilon = 1e-13);
    }

    #[test]
    fn predictor_moments() {
        let x = sample_predictors(5000, 3, &mut rng_for(11, 0));
        let c = sample_cov(&x);
        let target = ar_covariance(3, X_CORRELATION, 1.0);
        for (a, b) in c.iter().zip(target.iter()) {
            assert!((a - b).abs() < 0.05, "{a} vs {b}");
        }
    }

    #[test]
    fn noise_moments_and_zero() {
        let e = sample_noise(5000, 3, 1.0, &mut rng_for(12, 0));
        let c = sample_cov(&e);
        let target = ar_covariance(3, NOISE_CORRELATION, 1.0);
        for (a, b) in c.iter().zip(target.iter()) {
            assert!((a - b).abs() < 0.05, "{a} vs {b}");
        }
        assert!(sample_noise(4, 3, 0.0, &mut rng_for(12, 0)).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn factor_row_counts() {
        let spec = SimSpec::factor_regime(3);
        let (a, b, d) = gen_coefficients(&spec).unwrap();
        for row in a.rows() {
            assert_eq!(row.iter().filter(|v| **v != 0.0).count(), 1);
        }
        assert_eq!(d, a.dot(&b));
        let dense = SimSpec { m0: 10, s: 1.0, ..spec };
        let (a, b, _) = gen_coefficients(&dense).unwrap();
        assert!(a.iter().all(|v| *v != 0.0));
        assert!(b.iter().all(|v| *v != 0.0));
    }

    #[test]
    fn unstructured_supports() {
        let base = SimSpec {
            n: 10,
            p: 100,
            q: 100,
            structure: Structure::ElementwiseSparse { density: 0.2 },
            ..SimSpec::factor_regime(5)
        };
        let d = gen_unstructured_d(&base).unwrap();
        let nnz = d.iter().filter(|v| **v != 0.0).count();
        // binomial(10000, 0.2): sd = 40, 99% interval about +-103
        assert!((1897..=2103).contains(&nnz), "{nnz}");

        let rows = SimSpec {
            p: 150,
            q: 50,
            structure: Structure::RowwiseSparse {
                zero_row_frac: 0.6,
                within_density: 0.3,
            },
            ..base.clone()
        };
        let d = gen_unstructured_d(&rows).unwrap();
        let zero_rows = d.rows().into_iter().filter(|r| r.iter().all(|v| *v == 0.0)).count();
        assert_eq!(zero_rows, 90);
        let dense = SimSpec {
            structure: Structure::ElementwiseSparse { density: 1.0 },
            ..base
        };
        assert!(gen_unstructured_d(&dense).unwrap().iter().all(|v| *v != 0.0));
    }

    #[test]
    fn runs_are_reproducible_and_distinct() {
        let spec = SimSpec::factor_regime(9);
        let a = SimData::generate(&spec, 2).unwrap();
        let b = SimData::generate(&spec, 2).unwrap();
        let c = SimData::generate(&spec, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.x_train, c.x_train);
        assert_eq!(a.x_test.nrows(), spec.n);
    }

    #[test]
    fn invalid_specs() {
        let spec = SimSpec::factor_regime(0);
        assert!(SimSpec { m0: 11, ..spec.clone() }.validate().is_err());
        assert!(SimSpec { m: 60, ..spec.clone() }.validate().is_err());
        assert!(SimSpec { s: 0.0, ..spec.clone() }.validate().is_err());
        assert!(SimSpec { sigma_n: -1.0, ..spec }.validate().is_err());
    }
}
